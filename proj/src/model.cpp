#include "vck/model.hpp"

#include <sstream>
#include <stdexcept>

namespace vck {

void ModelParams::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    if (!(v_F > 0.0)) fail("ModelParams: requires v_F > 0");
    if (!(v_F < v_E)) fail("ModelParams: requires v_F < v_E");
    if (!(y_L > 0.0)) fail("ModelParams: requires y_L > 0");
    if (!(a_star > 0.0)) fail("ModelParams: requires a_star > 0");
    if (!(y_star > 0.0)) fail("ModelParams: requires y_star > 0");
    if (!(c >= 0.0)) fail("ModelParams: requires c >= 0");
    const double cap = effective_a_ceiling();
    if (!(cap > std::max(a_star, y_star)))
        fail("ModelParams: requires a_ceiling > max(a_star, y_star)");
    if (!std::isfinite(y_F()) || !(y_F() > 0.0))
        fail("ModelParams: derived y_F must be finite and positive");
}

Coefficients eval_coeffs(const ModelParams& p, double N) {
    if (!(N >= 0.0)) throw std::invalid_argument("eval_coeffs: requires N >= 0");
    Coefficients co;
    co.drift_intercept = p.y_star + p.c * N;
    co.diffusion = p.a_star + p.c * p.c * N;
    const double cap = p.effective_a_ceiling();
    co.band_violation = co.diffusion > cap || co.drift_intercept > cap;
    return co;
}

std::string WeightSpec::describe() const {
    std::ostringstream os;
    switch (kind) {
        case WeightKind::none: os << "unweighted"; break;
        case WeightKind::polynomial: os << "<y>^" << k; break;
        case WeightKind::exponential: os << "exp(" << alpha << " y)"; break;
    }
    if (twist) os << " (twisted)";
    return os.str();
}

double smoothstep5(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double chi_cutoff(double y, double y_F) {
    return 1.0 - smoothstep5((y - 0.5 * y_F) / (0.5 * y_F));
}

double xi_cutoff(double y, double y_F) {
    return 1.0 - smoothstep5((y - y_F) / y_F);
}

double eval_plain_weight(const WeightSpec& w, double y) {
    switch (w.kind) {
        case WeightKind::none:
            return 1.0;
        case WeightKind::polynomial:
            if (!w.admissible()) throw std::invalid_argument("WeightSpec: polynomial requires k > 1");
            return std::pow(1.0 + y * y, 0.5 * w.k);
        case WeightKind::exponential:
            if (!w.admissible()) throw std::invalid_argument("WeightSpec: exponential requires alpha > 0");
            return std::exp(w.alpha * y);
    }
    return 1.0;
}

double eval_weight(const WeightSpec& w, const ModelParams& p, double v, double y,
                   double p_exponent) {
    const double omega = eval_plain_weight(w, y);
    if (!w.twist) return omega;
    if (w.kind == WeightKind::none)
        throw std::invalid_argument("WeightSpec: twisted mode needs an admissible base weight");

    const double yF = p.y_F();
    const double chi = chi_cutoff(y, yF);
    const double wfun = chi + (1.0 - chi) * omega;
    if (chi >= 1.0) return wfun; // identically 1 below y_F/2

    const double xi = xi_cutoff(y, yF);
    const double J0 = eval_J(p, 0.0, y);
    const double Jxi = xi * J0 + (1.0 - xi) * eval_J(p, v, y);
    const double q = Jxi / y; // positive wherever chi < 1

    if (std::isinf(p_exponent)) {
        // pointwise p -> inf limit of the finite-p formula
        const double lim = (chi > 0.0) ? std::max(1.0, q) : q;
        return lim * wfun;
    }
    if (!(p_exponent >= 1.0))
        throw std::invalid_argument("eval_weight: exponent must be >= 1");
    const double pm1 = p_exponent - 1.0;
    const double core = chi + (1.0 - chi) * std::pow(q, pm1);
    return std::pow(core, 1.0 / p_exponent) * wfun;
}

} // namespace vck
