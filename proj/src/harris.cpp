#include "vck/harris.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "vck/analysis.hpp"

namespace vck {

double FiniteLatticeSemigroup::norm(const Eigen::VectorXd& f) const {
    if (mode == LatticeNorm::weighted_l1) return (w.array() * f.array().abs()).sum();
    return (w.array() * f.array().abs()).maxCoeff();
}

double FiniteLatticeSemigroup::bracket_phi1(const Eigen::VectorXd& f) const {
    return (phi1.array() * f.array().abs()).sum();
}

double FiniteLatticeSemigroup::bracket(const Eigen::VectorXd& psi, const Eigen::VectorXd& f) const {
    return (psi.array() * f.array().abs()).sum();
}

double FiniteLatticeSemigroup::conservativity_defect() const {
    const Eigen::VectorXd r = S.transpose() * phi1 - phi1;
    return (r.array().abs() / phi1.array()).maxCoeff();
}

double FiniteLatticeSemigroup::phi1_norm_bound() const {
    if (mode == LatticeNorm::weighted_l1) return (phi1.array() / w.array()).maxCoeff();
    return (phi1.array() / w.array()).sum();
}

FiniteLatticeSemigroup make_semigroup(Eigen::MatrixXd S, Eigen::VectorXd phi1,
                                      Eigen::VectorXd w, LatticeNorm mode, double T) {
    const int n = static_cast<int>(S.rows());
    if (S.cols() != n || phi1.size() != n || w.size() != n)
        throw std::invalid_argument("make_semigroup: inconsistent dimensions");
    if ((phi1.array() <= 0.0).any()) throw std::invalid_argument("make_semigroup: phi1 must be > 0");
    if ((w.array() <= 0.0).any()) throw std::invalid_argument("make_semigroup: weights must be > 0");
    const double top = S.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (S(i, j) < 0.0) {
                if (S(i, j) < -1e-12 * top)
                    throw std::invalid_argument("make_semigroup: matrix has negative entries");
                S(i, j) = 0.0;
            }
        }
    }
    FiniteLatticeSemigroup sg;
    sg.S = std::move(S);
    sg.phi1 = std::move(phi1);
    sg.w = std::move(w);
    sg.mode = mode;
    sg.T = T;
    // phi1 normalized to unit dual norm
    const double dual = sg.phi1_norm_bound();
    sg.phi1 /= dual;
    if (sg.conservativity_defect() > 1e-6)
        throw std::invalid_argument("make_semigroup: phi1 is not conserved by S");
    return sg;
}

Eigen::MatrixXd dense_exponential(const Eigen::MatrixXd& A) {
    return A.exp();
}

FiniteLatticeSemigroup make_vck_semigroup(const GeneratorOperator& op, double T,
                                          const WeightSpec& weight, LatticeNorm mode) {
    const Grid& g = op.grid;
    const int n = g.size();
    Eigen::MatrixXd L(op.L);
    Eigen::MatrixXd S = dense_exponential((T * L).eval());

    Eigen::VectorXd phi1 = Eigen::VectorXd::Constant(n, g.cell_measure());
    const std::vector<double> tab = tabulate_weight(
        g, op.params, weight,
        mode == LatticeNorm::weighted_l1 ? 1.0 : std::numeric_limits<double>::infinity());
    Eigen::VectorXd w(n);
    // the L1 lattice norm carries the cell measure, the sup norm does not
    for (int q = 0; q < n; ++q)
        w[q] = mode == LatticeNorm::weighted_l1 ? tab[q] * g.cell_measure() : tab[q];
    return make_semigroup(std::move(S), std::move(phi1), std::move(w), mode, T);
}

LyapunovResult lyapunov_constants(const FiniteLatticeSemigroup& sg, double target_gamma_L) {
    const int n = sg.size();
    LyapunovResult res;

    if (sg.mode == LatticeNorm::weighted_l1) {
        // sharp factor on the zero-mean subspace: extreme points of the
        // weighted-L1 ball with <phi1,f> = 0 are supported on column pairs
        Eigen::VectorXd col(n);
        double zm = 0.0;
        for (int j = 0; j < n; ++j) {
            for (int k = j + 1; k < n; ++k) {
                double num = 0.0;
                for (int i = 0; i < n; ++i)
                    num += sg.w[i] * std::abs(sg.phi1[k] * sg.S(i, j) - sg.phi1[j] * sg.S(i, k));
                const double den = sg.phi1[k] * sg.w[j] + sg.phi1[j] * sg.w[k];
                zm = std::max(zm, num / den);
            }
        }
        res.zero_mean_coeff = zm;
        if (zm >= 1.0 - 1e-12 && std::isnan(target_gamma_L)) {
            res.ok = false;
            res.why = "no gamma_L < 1 contracts the zero-mean subspace (coefficient " +
                      std::to_string(zm) + ")";
            res.gamma_L = zm;
            return res;
        }
        res.gamma_L = std::isnan(target_gamma_L) ? zm : target_gamma_L;
        double K = 0.0;
        for (int j = 0; j < n; ++j) {
            double cs = 0.0;
            for (int i = 0; i < n; ++i) cs += sg.w[i] * sg.S(i, j);
            K = std::max(K, (cs - res.gamma_L * sg.w[j]) / sg.phi1[j]);
        }
        res.K = std::max(K, 0.0);
        res.ok = true;
        return res;
    }

    // Weighted-sup mode. Per row, entries split between a norm bucket
    // (budgeted by gamma_L in the q = w_i S_ij / w_j coefficients) and a
    // bracket bucket paying max r = w_i S_ij / phi1_j. The optimal split is
    // the threshold rule: the norm bucket takes the largest-r entries its
    // budget allows, so the bracket pays the (k+1)-th largest r.
    const double gl = std::isnan(target_gamma_L) ? 0.9 : target_gamma_L;
    res.gamma_L = gl;
    res.zero_mean_coeff = std::numeric_limits<double>::quiet_NaN();
    double K = 0.0;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return sg.S(i, a) / sg.phi1[a] > sg.S(i, b) / sg.phi1[b];
        });
        double budget = gl;
        double Ki = 0.0;
        for (int idx = 0; idx < n; ++idx) {
            const int j = order[idx];
            const double q = sg.w[i] * sg.S(i, j) / sg.w[j];
            if (q > budget) {
                Ki = sg.w[i] * sg.S(i, j) / sg.phi1[j];
                break;
            }
            budget -= q;
        }
        K = std::max(K, Ki);
    }
    res.K = K;
    res.ok = true;
    return res;
}

MinorizationResult minorization_constants(const FiniteLatticeSemigroup& sg,
                                          const Eigen::VectorXd& psi) {
    const int n = sg.size();
    MinorizationResult res;
    if (psi.size() != n) throw std::invalid_argument("minorization_constants: psi size mismatch");
    if ((psi.array() < 0.0).any() || psi.maxCoeff() <= 0.0)
        throw std::invalid_argument("minorization_constants: psi must be nonnegative and nonzero");

    Eigen::VectorXd g_raw = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    for (int j = 0; j < n; ++j) {
        if (psi[j] <= 0.0) continue;
        for (int i = 0; i < n; ++i)
            g_raw[i] = std::min(g_raw[i], sg.S(i, j) / psi[j]);
    }
    for (int i = 0; i < n; ++i) g_raw[i] = std::max(g_raw[i], 0.0);

    const double scale = sg.norm(g_raw);
    if (!(scale > 0.0)) {
        res.ok = false;
        res.why = "minorized profile is identically zero (insufficient mixing)";
        return res;
    }
    res.g = g_raw / scale;
    res.eta = scale;
    res.ok = true;
    return res;
}

namespace {

struct Interpolation {
    double xi = 0.0;  // off-support contribution, scaled by the norm
    double Xi = 0.0;  // on-support domination of phi1 by psi
};

Interpolation interpolation_constants(const FiniteLatticeSemigroup& sg,
                                      const Eigen::VectorXd& psi) {
    Interpolation out;
    double xi_l1 = 0.0, xi_sup = 0.0, Xi = 0.0;
    for (int j = 0; j < sg.size(); ++j) {
        if (psi[j] > 0.0) {
            Xi = std::max(Xi, sg.phi1[j] / psi[j]);
        } else {
            xi_l1 = std::max(xi_l1, sg.phi1[j] / sg.w[j]);
            xi_sup += sg.phi1[j] / sg.w[j];
        }
    }
    out.Xi = Xi;
    out.xi = sg.mode == LatticeNorm::weighted_l1 ? xi_l1 : xi_sup;
    return out;
}

} // namespace

HarrisCertificate certify(const FiniteLatticeSemigroup& sg, const PsiFamily& psi_family,
                          const std::vector<double>& eps_ladder, double target_gamma_L) {
    HarrisCertificate best;
    best.T = sg.T;
    best.mode = sg.mode;
    best.gamma = std::numeric_limits<double>::infinity();
    std::string blocker = "lyapunov step failed";

    LyapunovResult base = lyapunov_constants(sg, target_gamma_L);
    if (!base.ok) {
        best.binding_constraint = "lyapunov: " + base.why;
        return best;
    }

    // candidate Lyapunov targets between the measured zero-mean factor and 1
    std::vector<double> gl_candidates{base.gamma_L};
    if (std::isfinite(base.zero_mean_coeff)) {
        for (double fr : {0.25, 0.5, 0.75}) {
            const double gl = base.zero_mean_coeff + fr * (1.0 - base.zero_mean_coeff);
            if (gl < 1.0) gl_candidates.push_back(gl);
        }
    } else {
        for (double gl : {0.3, 0.5, 0.7}) gl_candidates.push_back(gl);
    }

    // minorization and interpolation data per epsilon, computed once
    struct EpsData {
        double eps;
        Interpolation interp;
        MinorizationResult minor;
    };
    std::vector<EpsData> ladder;
    for (double eps : eps_ladder) {
        EpsData d;
        d.eps = eps;
        Eigen::VectorXd psi = psi_family(eps);
        d.interp = interpolation_constants(sg, psi);
        d.minor = minorization_constants(sg, psi);
        if (d.minor.ok) d.minor.psi_cache = psi;
        ladder.push_back(std::move(d));
    }

    for (double gl : gl_candidates) {
        LyapunovResult lyap = lyapunov_constants(sg, gl);
        if (!lyap.ok) continue;

        std::vector<double> A_candidates;
        if (lyap.K > 0.0) {
            const double A_min = lyap.K / (1.0 - lyap.gamma_L);
            for (double m : {1.02, 1.5, 2.0, 4.0, 8.0}) A_candidates.push_back(m * A_min);
        } else {
            A_candidates = {1.0, 4.0, 16.0, 64.0};
        }

        for (double A : A_candidates) {
            // interpolation margin theta: xi_eps * 2A <= theta < 1; larger
            // theta admits more epsilons but weakens the coupling factor
            for (double theta : {0.5, 0.75, 0.9, 0.98}) {
                const EpsData* chosen = nullptr;
                for (const EpsData& d : ladder) {
                    if (d.interp.xi * 2.0 * A <= theta) { chosen = &d; break; }
                }
                if (!chosen) {
                    blocker = "interpolation: no epsilon on the ladder satisfies xi_eps*2A <= theta";
                    continue;
                }
                if (!chosen->minor.ok) {
                    blocker = "minorization: " + chosen->minor.why;
                    continue;
                }
                const double coupling = (1.0 - theta) * chosen->minor.eta *
                                        sg.bracket(sg.phi1, chosen->minor.g) / chosen->interp.Xi;
                const double gamma_H = 1.0 - coupling;
                if (!(gamma_H > 0.0) || !(gamma_H < 1.0)) {
                    blocker = "coupling factor gamma_H outside (0,1)";
                    continue;
                }

                // beta search with the closed-form contraction conditions
                for (int bi = 0; bi <= 240; ++bi) {
                    const double beta = std::pow(10.0, -8.0 + 8.0 * bi / 240.0);
                    const double term_small = gamma_H + beta * lyap.K;
                    const double term_large =
                        (1.0 + beta * lyap.K + lyap.gamma_L * A * beta) / (1.0 + A * beta);
                    const double gamma = std::max({lyap.gamma_L, term_small, term_large});
                    if (gamma < 1.0 && gamma < best.gamma) {
                        best.ok = true;
                        best.gamma_L = lyap.gamma_L;
                        best.K = lyap.K;
                        best.A = A;
                        best.eps = chosen->eps;
                        best.eta = chosen->minor.eta;
                        best.xi_eps = chosen->interp.xi;
                        best.Xi_eps = chosen->interp.Xi;
                        best.gamma_H = gamma_H;
                        best.beta = beta;
                        best.gamma = gamma;
                        best.g = chosen->minor.g;
                        best.psi = chosen->minor.psi_cache;
                    }
                }
                if (!best.ok) blocker = "beta search: empty (beta,gamma) region";
            }
        }
    }

    if (!best.ok) {
        best.binding_constraint = blocker;
        return best;
    }
    best.lambda2 = std::log(best.gamma) / sg.T;
    best.C = (sg.phi1_norm_bound() + best.beta) / best.beta;
    return best;
}

PsiFamily vck_psi_family(const Grid& g) {
    return [g](double eps) {
        Eigen::VectorXd psi = Eigen::VectorXd::Zero(g.size());
        for (int c : region_cells(g, eps)) psi[c] = 1.0;
        return psi;
    };
}

VckHarrisSetup make_vck_harris_setup(const GeneratorOperator& op, double T,
                                     const WeightSpec& weight, LatticeNorm mode) {
    const Grid& g = op.grid;
    const int n = g.size();
    Eigen::MatrixXd L(op.L);
    Eigen::MatrixXd S_half = dense_exponential((0.5 * T * L).eval());
    Eigen::MatrixXd S = S_half * S_half;

    Eigen::VectorXd phi1 = Eigen::VectorXd::Constant(n, g.cell_measure());
    const std::vector<double> tab = tabulate_weight(
        g, op.params, weight,
        mode == LatticeNorm::weighted_l1 ? 1.0 : std::numeric_limits<double>::infinity());
    Eigen::VectorXd w(n);
    for (int q = 0; q < n; ++q)
        w[q] = mode == LatticeNorm::weighted_l1 ? tab[q] * g.cell_measure() : tab[q];

    VckHarrisSetup setup{
        make_semigroup(std::move(S), std::move(phi1), std::move(w), mode, T),
        PsiFamily{}};
    PsiFamily base = vck_psi_family(g);
    Eigen::MatrixXd adj = S_half.transpose();
    setup.psi_family = [base, adj](double eps) {
        return (adj * base(eps)).cwiseMax(0.0).eval();
    };
    return setup;
}

Eigen::VectorXd stationary_vector(const FiniteLatticeSemigroup& sg) {
    const int n = sg.size();
    auto bordered = [&](int pivot) {
        Eigen::MatrixXd A = sg.S - Eigen::MatrixXd::Identity(n, n);
        A.row(pivot) = sg.phi1.transpose();
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        b[pivot] = 1.0;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
        Eigen::VectorXd x = lu.solve(b);
        x += lu.solve(b - A * x);
        return x;
    };
    Eigen::VectorXd x = bordered(0);
    int peak = 0;
    x.cwiseAbs().maxCoeff(&peak);
    if (peak != 0) x = bordered(peak);
    return x / sg.phi1.dot(x);
}

double second_modulus(const FiniteLatticeSemigroup& sg) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(sg.S, false);
    std::vector<double> mods(sg.size());
    for (int i = 0; i < sg.size(); ++i) mods[i] = std::abs(es.eigenvalues()[i]);
    std::sort(mods.rbegin(), mods.rend());
    return mods.size() > 1 ? mods[1] : 0.0;
}

ValidationReport validate_certificate(const FiniteLatticeSemigroup& sg,
                                      const HarrisCertificate& cert, int trials, int n_max,
                                      uint64_t seed) {
    if (!cert.ok) throw std::invalid_argument("validate_certificate: certificate is not valid");
    ValidationReport rep;
    const int n = sg.size();

    const Eigen::VectorXd f1 = stationary_vector(sg);
    rep.stationary_defect = (sg.S * f1 - f1).lpNorm<Eigen::Infinity>();

    auto blend = [&](const Eigen::VectorXd& f) {
        return sg.bracket_phi1(f) + cert.beta * sg.norm(f);
    };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    rep.worst_margin_blend = std::numeric_limits<double>::infinity();
    rep.worst_margin_norm = std::numeric_limits<double>::infinity();
    bool ok = true;
    const double slack = 1e-9;

    for (int trial = 0; trial < trials; ++trial) {
        Eigen::VectorXd f(n);
        for (int q = 0; q < n; ++q) f[q] = u(rng);
        f -= sg.phi1.dot(f) * f1; // zero mean: <phi1, f1> = 1
        const double b0 = blend(f);
        const double n0 = sg.norm(f);

        Eigen::VectorXd it = f;
        for (int k = 1; k <= n_max; ++k) {
            it = sg.S * it;
            const double gk = std::pow(cert.gamma, k);
            const double lhs_b = blend(it);
            const double rhs_b = gk * b0;
            const double lhs_n = sg.norm(it);
            const double rhs_n = cert.C * std::exp(cert.lambda2 * k * sg.T) * n0;
            rep.worst_margin_blend = std::min(rep.worst_margin_blend, rhs_b - lhs_b);
            rep.worst_margin_norm = std::min(rep.worst_margin_norm, rhs_n - lhs_n);
            if (lhs_b > rhs_b * (1.0 + slack) + 1e-300) ok = false;
            if (lhs_n > rhs_n * (1.0 + slack) + 1e-300) ok = false;
            rep.rows.push_back({trial, k, lhs_b, rhs_b, rhs_b - lhs_b});
        }
    }
    rep.pass = ok;
    return rep;
}

} // namespace vck
