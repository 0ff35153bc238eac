#include "vck/stationary.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SparseLU>

namespace vck {

namespace {

// Bordered system: generator with row `pivot` replaced by the mass row.
Eigen::SparseMatrix<double> bordered_matrix(const GeneratorOperator& op, int pivot) {
    const int n = op.grid.size();
    const double meas = op.grid.cell_measure();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(op.L.nonZeros() + n);
    for (int k = 0; k < op.L.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(op.L, k); it; ++it)
            if (it.row() != pivot) trips.emplace_back(it.row(), it.col(), it.value());
    for (int c = 0; c < n; ++c) trips.emplace_back(pivot, c, meas);
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    return A;
}

Eigen::VectorXd bordered_solve(const GeneratorOperator& op, int pivot, bool& ok) {
    const int n = op.grid.size();
    Eigen::SparseMatrix<double> A = bordered_matrix(op, pivot);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) {
        ok = false;
        return Eigen::VectorXd::Zero(n);
    }
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b[pivot] = 1.0;
    Eigen::VectorXd x = lu.solve(b);
    // one refinement pass keeps the generator residual at round-off level
    Eigen::VectorXd r = b - A * x;
    x += lu.solve(r);
    ok = true;
    return x;
}

int argmax_abs(const Eigen::VectorXd& x) {
    int r = 0;
    double best = -1.0;
    for (int i = 0; i < x.size(); ++i)
        if (std::abs(x[i]) > best) { best = std::abs(x[i]); r = i; }
    return r;
}

} // namespace

StationaryResult solve_stationary(const Grid& g, const ModelParams& p, double N,
                                  int pivot_row_hint) {
    if (!(N >= 0.0)) throw std::invalid_argument("solve_stationary: requires N >= 0");
    const GeneratorOperator op = assemble_generator(g, p, N);

    StationaryResult res;
    bool ok = false;
    int pivot = pivot_row_hint >= 0 && pivot_row_hint < g.size() ? pivot_row_hint : 0;
    Eigen::VectorXd x = bordered_solve(op, pivot, ok);
    if (ok) {
        const int peak = argmax_abs(x);
        if (peak != pivot) {
            bool ok2 = false;
            Eigen::VectorXd x2 = bordered_solve(op, peak, ok2);
            if (ok2) { x = x2; pivot = peak; }
        }
    }
    if (!ok) {
        res.ok = false;
        return res;
    }
    res.pivot_row = pivot;

    // normalize, report and clip round-off negatives, renormalize
    double m = x.sum() * g.cell_measure();
    if (!(std::abs(m) > 0.0)) { res.ok = false; return res; }
    x /= m;
    double worst = 0.0, removed = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0) {
            worst = std::min(worst, x[i]);
            removed += -x[i];
            x[i] = 0.0;
        }
    }
    res.clip_magnitude = -worst;
    res.clipped_mass = removed * g.cell_measure();
    m = x.sum() * g.cell_measure();
    x /= m;

    res.M.values.assign(x.data(), x.data() + x.size());
    res.M.time = 0.0;
    Eigen::VectorXd r = op.L * x;
    res.residual_inf = r.lpNorm<Eigen::Infinity>();
    res.ok = true;
    return res;
}

DensityField stationary_inverse_power(const Grid& g, const ModelParams& p, double N, int iters) {
    const GeneratorOperator op = assemble_generator(g, p, N);
    const int n = g.size();
    const double sigma = 1e-6 * std::max(1.0, op.max_abs_diag_L);

    Eigen::SparseMatrix<double> A = op.L;
    for (int i = 0; i < n; ++i) A.coeffRef(i, i) -= sigma;
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("stationary_inverse_power: shifted factorization failed");

    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    x /= x.sum() * g.cell_measure();
    for (int k = 0; k < iters; ++k) {
        x = lu.solve(x);
        const double m = x.sum() * g.cell_measure();
        x /= m;
    }
    DensityField f;
    f.values.assign(x.data(), x.data() + x.size());
    return f;
}

double lambda_star(const Grid& g, const ModelParams& p, double N, int pivot_row_hint) {
    StationaryResult r = solve_stationary(g, p, N, pivot_row_hint);
    if (!r.ok) throw std::runtime_error("lambda_star: singular bordered system");
    return firing_rate(g, p, r.M);
}

FixedPointResult fixed_point_steady(const Grid& g, const ModelParams& p, double tol,
                                    int max_iters, double theta) {
    p.validate();
    FixedPointResult out;
    out.weak_connectivity_warning = p.c >= p.weak_connectivity_threshold();

    if (p.c == 0.0) {
        // the map is constant in N, one solve is the fixed point
        StationaryResult r = solve_stationary(g, p, 0.0);
        if (!r.ok) throw std::runtime_error("fixed_point_steady: singular bordered system");
        out.N_sharp = firing_rate(g, p, r.M);
        out.M = r.M;
        out.iterations = 1;
        out.converged = true;
        out.residual_fixed = 0.0;
        out.log.push_back({1.0, out.N_sharp, 0.0});
        GeneratorOperator op = assemble_generator(g, p, out.N_sharp);
        Eigen::Map<const Eigen::VectorXd> x(out.M.values.data(), g.size());
        out.residual_pde_inf = (op.L * x).lpNorm<Eigen::Infinity>();
        return out;
    }

    double N = 0.0;
    int pivot = -1;
    StationaryResult last;
    for (int it = 1; it <= max_iters; ++it) {
        last = solve_stationary(g, p, N, pivot);
        if (!last.ok) throw std::runtime_error("fixed_point_steady: singular bordered system");
        pivot = last.pivot_row;
        const double lam = firing_rate(g, p, last.M);
        const double res = std::abs(lam - N);
        out.log.push_back({static_cast<double>(it), N, res});
        out.iterations = it;
        if (res < tol) {
            out.converged = true;
            out.N_sharp = N;
            out.M = last.M;
            out.residual_fixed = res;
            break;
        }
        N = (1.0 - theta) * N + theta * lam;
    }
    if (!out.converged) {
        out.N_sharp = N;
        out.M = last.M;
        out.residual_fixed = out.log.empty() ? 0.0 : out.log.back()[2];
    }

    // full nonlinear residual: generator frozen at the state's own rate
    const double n_eval = firing_rate(g, p, out.M);
    GeneratorOperator op = assemble_generator(g, p, n_eval);
    Eigen::Map<const Eigen::VectorXd> x(out.M.values.data(), g.size());
    out.residual_pde_inf = (op.L * x).lpNorm<Eigen::Infinity>();
    return out;
}

} // namespace vck
