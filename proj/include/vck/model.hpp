#pragma once

#include <cmath>
#include <limits>
#include <string>

// Continuous-model quantities for the voltage-conductance kinetic equation:
// physical parameters, the voltage flux J, the conductance drift/diffusion
// pair driven by the firing rate, and the confinement weights (plain and
// twisted) used by the weighted-norm diagnostics.

namespace vck {

struct ModelParams {
    double v_F = 1.0;      // spiking threshold, 0 < v_F < v_E
    double v_E = 2.0;      // excitatory reversal potential
    double y_L = 1.0;      // leak coefficient
    double a_star = 1.0;   // baseline conductance diffusion
    double y_star = 1.0;   // baseline conductance drift intercept
    double c = 0.0;        // network connectivity
    double a_ceiling = 0.0; // coefficient cap; 0 selects the default below

    // Default cap sits strictly above 2*(a_star + y_star).
    double effective_a_ceiling() const {
        return a_ceiling > 0.0 ? a_ceiling : 2.0 * (a_star + y_star) * 1.01;
    }

    // Conductance threshold where J(v_F, .) changes sign.
    double y_F() const { return y_L * v_F / (v_E - v_F); }

    // Connectivities below v_F/v_E are the regime with a known steady state.
    double weak_connectivity_threshold() const { return v_F / v_E; }

    // Largest admissible firing rate keeping coefficients inside the band.
    double N_star() const {
        if (c <= 0.0) return std::numeric_limits<double>::infinity();
        return effective_a_ceiling() / (2.0 * (c + c * c));
    }

    // Throws std::invalid_argument naming the offending constraint.
    void validate() const;
};

// Voltage flux J(v,y) = y (v_E - v) - y_L v.
inline double eval_J(const ModelParams& p, double v, double y) {
    return y * (p.v_E - v) - p.y_L * v;
}

// Frozen-firing-rate conductance coefficients.
struct Coefficients {
    double drift_intercept = 0.0; // b = y_star + c N
    double diffusion = 0.0;       // a = a_star + c^2 N
    bool band_violation = false;  // left the analyzed coefficient band

    double drift(double y) const { return drift_intercept - y; }
};

Coefficients eval_coeffs(const ModelParams& p, double N);

enum class WeightKind { none, polynomial, exponential };

struct WeightSpec {
    WeightKind kind = WeightKind::polynomial;
    double k = 2.0;       // polynomial exponent, admissible for k > 1
    double alpha = 0.5;   // exponential rate, admissible for alpha > 0
    bool twist = false;   // select the twisted weight

    bool admissible() const {
        switch (kind) {
            case WeightKind::polynomial: return k > 1.0;
            case WeightKind::exponential: return alpha > 0.0;
            case WeightKind::none: return false;
        }
        return false;
    }
    std::string describe() const;
};

// C^2 quintic ramp: 0 for t<=0, 1 for t>=1.
double smoothstep5(double t);

// chi: 1 on [0, y_F/2], 0 on [y_F, inf), C^2 in between.
double chi_cutoff(double y, double y_F);

// xi: 1 on [0, y_F], 0 on [2 y_F, inf), C^2 in between.
double xi_cutoff(double y, double y_F);

// Plain weight omega(y); requires an admissible spec (or kind none -> 1).
double eval_plain_weight(const WeightSpec& w, double y);

// Weight evaluation. Plain mode returns omega(y). Twisted mode returns the
// modified weight built from the chi/xi cutoffs and the interpolated flux
// J_xi; it equals 1 on the strip y < y_F/2 and stays comparable to omega.
// The exponent p of the target norm enters the twisted formula; p may be
// 1, any finite value, or +infinity (pointwise limit).
double eval_weight(const WeightSpec& w, const ModelParams& p, double v, double y,
                   double p_exponent = 2.0);

} // namespace vck
