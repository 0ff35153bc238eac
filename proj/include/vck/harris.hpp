#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vck/generator.hpp"

namespace vck {

enum class LatticeNorm { weighted_l1, weighted_sup };

// Finite nonnegative semigroup on a weighted lattice: one application of S
// advances time T, phi1 is the strictly positive conserved functional
// (S^T phi1 = phi1), and w defines the lattice norm.
struct FiniteLatticeSemigroup {
    Eigen::MatrixXd S;
    Eigen::VectorXd phi1;
    Eigen::VectorXd w;
    LatticeNorm mode = LatticeNorm::weighted_l1;
    double T = 1.0;

    int size() const { return static_cast<int>(S.rows()); }
    double norm(const Eigen::VectorXd& f) const;
    double bracket_phi1(const Eigen::VectorXd& f) const; // [f]_phi1 = <phi1,|f|>
    double bracket(const Eigen::VectorXd& psi, const Eigen::VectorXd& f) const;
    // max relative defect of S^T phi1 = phi1 over coordinates
    double conservativity_defect() const;
    // xi_hat with [f]_phi1 <= xi_hat ||f|| for every f
    double phi1_norm_bound() const;
};

// Validates shapes and positivity; entries above -1e-12*max are clamped to
// zero (round-off from the matrix exponential), anything worse throws.
FiniteLatticeSemigroup make_semigroup(Eigen::MatrixXd S, Eigen::VectorXd phi1,
                                      Eigen::VectorXd w, LatticeNorm mode, double T);

// Dense matrix exponential (scaling-and-squaring with Pade approximation).
Eigen::MatrixXd dense_exponential(const Eigen::MatrixXd& A);

// S_T = exp(T L) for the discrete generator, with the p=1 twisted-weight
// lattice norm and the cell-measure conservation functional.
FiniteLatticeSemigroup make_vck_semigroup(const GeneratorOperator& op, double T,
                                          const WeightSpec& weight,
                                          LatticeNorm mode = LatticeNorm::weighted_l1);

struct LyapunovResult {
    bool ok = false;
    std::string why;
    double gamma_L = 1.0;
    double K = 0.0;
    // sharp contraction factor on the zero-mean subspace (weighted-L1 mode);
    // >= 1 means the semigroup is not dissipative in this norm
    double zero_mean_coeff = 1.0;
};

// Lyapunov pair for ||S f|| <= gamma_L ||f|| + K [f]_phi1. The minimal K at
// the target gamma_L comes from a per-column maximization (weighted-L1) or a
// per-row greedy split (weighted-sup). With no target, the measured
// zero-mean coefficient is used. Fails when the zero-mean subspace is not
// contracted by any gamma_L < 1.
LyapunovResult lyapunov_constants(const FiniteLatticeSemigroup& sg,
                                  double target_gamma_L = std::numeric_limits<double>::quiet_NaN());

struct MinorizationResult {
    bool ok = false;
    std::string why;
    double eta = 0.0;
    Eigen::VectorXd g;         // normalized profile, ||g|| = 1
    Eigen::VectorXd psi_cache; // the functional the profile was minorized against
};

// Largest eta with S >= eta g psi^T entrywise: g_i is the minimum of
// S_ij / psi_j over the support of psi, normalized afterwards.
MinorizationResult minorization_constants(const FiniteLatticeSemigroup& sg,
                                          const Eigen::VectorXd& psi);

struct HarrisCertificate {
    bool ok = false;
    std::string binding_constraint;
    double T = 0.0;
    LatticeNorm mode = LatticeNorm::weighted_l1;
    double gamma_L = 0.0, K = 0.0, A = 0.0;
    double eps = 0.0, eta = 0.0, xi_eps = 0.0, Xi_eps = 0.0;
    double gamma_H = 0.0, beta = 0.0, gamma = 0.0;
    double lambda2 = 0.0; // log(gamma)/T
    double C = 0.0;       // prefactor from norm equivalence
    Eigen::VectorXd g, psi;
};

using PsiFamily = std::function<Eigen::VectorXd(double eps)>;

// Assembles the full certificate along the proof's three steps: Lyapunov
// pair, minorization over the eps ladder (first eps satisfying the
// interpolation smallness), coupling factor gamma_H, then a deterministic
// search over the blending weight beta for the contraction factor gamma of
// |||f||| = [f]_phi1 + beta ||f|| on the zero-mean subspace.
HarrisCertificate certify(const FiniteLatticeSemigroup& sg, const PsiFamily& psi_family,
                          const std::vector<double>& eps_ladder,
                          double target_gamma_L = std::numeric_limits<double>::quiet_NaN());

// psi_eps = indicator of the O_eps core cells for the discrete VCk state.
PsiFamily vck_psi_family(const Grid& g);

// Relaxed two-time setup: the certificate operator is S_T = S_{T/2}^2 and
// the functionals are pushed through the adjoint half step,
// psi_eps <- S_{T/2}^T 1_{O_eps}. The pushed functional is strictly
// positive, which removes the off-support interpolation term entirely; the
// T0 > 0 form of the minorization condition is absorbed this way.
struct VckHarrisSetup {
    FiniteLatticeSemigroup sg;
    PsiFamily psi_family;
};

VckHarrisSetup make_vck_harris_setup(const GeneratorOperator& op, double T,
                                     const WeightSpec& weight,
                                     LatticeNorm mode = LatticeNorm::weighted_sup);

struct ValidationRow {
    int trial = 0;
    int n = 0;
    double lhs = 0.0, rhs = 0.0, margin = 0.0;
};

struct ValidationReport {
    bool pass = false;
    double worst_margin_blend = 0.0; // min over samples of (gamma^n |||f||| - |||S^n f|||)
    double worst_margin_norm = 0.0;  // same for the plain-norm decay bound
    double stationary_defect = 0.0;  // ||S f1 - f1||_inf
    std::vector<ValidationRow> rows;
};

// Replays the certified contraction on random zero-mean vectors.
ValidationReport validate_certificate(const FiniteLatticeSemigroup& sg,
                                      const HarrisCertificate& cert, int trials, int n_max,
                                      uint64_t seed);

// Stationary vector of S (bordered solve), normalized to <phi1, f1> = 1.
Eigen::VectorXd stationary_vector(const FiniteLatticeSemigroup& sg);

// Eigen-oracle: second-largest eigenvalue modulus of S (the leading one is 1).
double second_modulus(const FiniteLatticeSemigroup& sg);

} // namespace vck
