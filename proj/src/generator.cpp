#include "vck/generator.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace vck {

namespace {

// Bernoulli function x / (e^x - 1), the exponential-fitting kernel.
double bernoulli(double x) {
    if (std::abs(x) < 1e-5) return 1.0 - 0.5 * x + x * x / 12.0;
    return x / std::expm1(x);
}

double max_abs_diagonal(const Eigen::SparseMatrix<double>& m) {
    double r = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        r = std::max(r, std::abs(m.coeff(k, k)));
    return r;
}

} // namespace

void compute_diffusion_coeffs(const Grid& g, const Coefficients& co,
                              std::vector<double>& lo, std::vector<double>& hi) {
    const int ny = g.n_y;
    const double dy = g.dy;
    const double a = co.diffusion;
    lo.resize(ny - 1);
    hi.resize(ny - 1);
    for (int j = 0; j + 1 < ny; ++j) {
        const double y_if = (j + 1) * dy;
        const double K = co.drift(y_if);
        const double peclet = K * dy / a;
        lo[j] = (a / dy) * bernoulli(-peclet);
        hi[j] = (a / dy) * bernoulli(peclet);
    }
}

GeneratorOperator assemble_generator(const Grid& g, const ModelParams& p, double N) {
    if (!(N >= 0.0)) throw std::invalid_argument("assemble_generator: requires N >= 0");

    GeneratorOperator op;
    op.grid = g;
    op.params = p;
    op.N_frozen = N;
    op.coeffs = eval_coeffs(p, N);

    const int nv = g.n_v, ny = g.n_y;
    const double dv = g.dv, dy = g.dy;

    op.J_iface.resize(static_cast<size_t>(ny) * (nv + 1));
    for (int j = 0; j < ny; ++j) {
        const double y = g.yc[j];
        for (int i = 0; i <= nv; ++i) {
            const double v = i * dv;
            const double J = eval_J(p, v, y);
            op.J_iface[static_cast<size_t>(j) * (nv + 1) + i] = J;
            op.max_abs_J = std::max(op.max_abs_J, std::abs(J));
        }
    }

    compute_diffusion_coeffs(g, op.coeffs, op.diff_lo, op.diff_hi);

    // Sparse assembly, flux form: every interface flux coefficient enters a
    // row pair of the same column, so column sums telescope.
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> tT, tD;
    tT.reserve(static_cast<size_t>(g.size()) * 3);
    tD.reserve(static_cast<size_t>(g.size()) * 4);

    for (int j = 0; j < ny; ++j) {
        const double* Jrow = &op.J_iface[static_cast<size_t>(j) * (nv + 1)];
        for (int i = 1; i < nv; ++i) {
            const double J = Jrow[i];
            const int ca = g.idx(i - 1, j), cb = g.idx(i, j);
            if (J > 0.0) {
                tT.emplace_back(ca, ca, -J / dv);
                tT.emplace_back(cb, ca, J / dv);
            } else if (J < 0.0) {
                tT.emplace_back(ca, cb, -J / dv);
                tT.emplace_back(cb, cb, J / dv);
            }
        }
        if (j >= g.j_F) {
            // Outflow through v = v_F re-enters at v = 0 on the same y-row.
            const double Jout = Jrow[nv];
            const int last = g.idx(nv - 1, j), first = g.idx(0, j);
            tT.emplace_back(last, last, -Jout / dv);
            tT.emplace_back(first, last, Jout / dv);
        }
        // Rows below y_F carry no lateral boundary flux: the zero-inflow
        // condition on Sigma_1 removes the incoming flux on both sides.
    }

    for (int j = 0; j + 1 < ny; ++j) {
        const double lo = op.diff_lo[j] / dy, hi = op.diff_hi[j] / dy;
        for (int i = 0; i < nv; ++i) {
            const int ca = g.idx(i, j), cb = g.idx(i, j + 1);
            tD.emplace_back(ca, ca, -lo);
            tD.emplace_back(ca, cb, hi);
            tD.emplace_back(cb, ca, lo);
            tD.emplace_back(cb, cb, -hi);
        }
    }

    const int n = g.size();
    op.T.resize(n, n);
    op.D.resize(n, n);
    op.T.setFromTriplets(tT.begin(), tT.end());
    op.D.setFromTriplets(tD.begin(), tD.end());
    op.L = op.T + op.D;
    op.T.makeCompressed();
    op.D.makeCompressed();
    op.L.makeCompressed();

    op.max_abs_diag_T = max_abs_diagonal(op.T);
    op.max_abs_diag_D = max_abs_diagonal(op.D);
    op.max_abs_diag_L = max_abs_diagonal(op.L);
    return op;
}

void GeneratorOperator::apply_transport(const double* f, double* out) const {
    const int nv = grid.n_v, ny = grid.n_y;
    const double dv = grid.dv;
    const int jF = grid.j_F;
    const double* Jall = J_iface.data();
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j) {
        const double* Jrow = Jall + static_cast<size_t>(j) * (nv + 1);
        const double* frow = f + static_cast<size_t>(j) * nv;
        double* orow = out + static_cast<size_t>(j) * nv;
        const bool reset = j >= jF;
        const double reset_flux = reset ? Jrow[nv] * frow[nv - 1] : 0.0;
        double fluxL = reset_flux;
        for (int i = 0; i < nv; ++i) {
            double fluxR;
            if (i + 1 == nv) {
                fluxR = reset_flux;
            } else {
                const double J = Jrow[i + 1];
                fluxR = J > 0.0 ? J * frow[i] : J * frow[i + 1];
            }
            orow[i] = -(fluxR - fluxL) / dv;
            fluxL = fluxR;
        }
    }
}

void apply_diffusion_add(const Grid& g, const std::vector<double>& lo,
                         const std::vector<double>& hi, const double* f, double* out) {
    const int nv = g.n_v, ny = g.n_y;
    const double dy = g.dy;
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j) {
        const double* frow = f + static_cast<size_t>(j) * nv;
        double* orow = out + static_cast<size_t>(j) * nv;
        const bool up = j + 1 < ny, down = j > 0;
        const double lo_r = up ? lo[j] : 0.0;
        const double hi_r = up ? hi[j] : 0.0;
        const double lo_l = down ? lo[j - 1] : 0.0;
        const double hi_l = down ? hi[j - 1] : 0.0;
        for (int i = 0; i < nv; ++i) {
            const double fluxR = up ? lo_r * frow[i] - hi_r * frow[i + nv] : 0.0;
            const double fluxL = down ? lo_l * frow[i - nv] - hi_l * frow[i] : 0.0;
            orow[i] += -(fluxR - fluxL) / dy;
        }
    }
}

void GeneratorOperator::apply_diffusion_add(const double* f, double* out) const {
    vck::apply_diffusion_add(grid, diff_lo, diff_hi, f, out);
}

void GeneratorOperator::apply(const double* f, double* out) const {
    apply_transport(f, out);
    apply_diffusion_add(f, out);
}

void GeneratorOperator::apply_reference(const double* f, double* out) const {
    Eigen::Map<const Eigen::VectorXd> x(f, grid.size());
    Eigen::Map<Eigen::VectorXd> y(out, grid.size());
    y = L * x;
}

double GeneratorOperator::firing_rate(const DensityField& f) const {
    const int nv = grid.n_v;
    double s = 0.0;
    for (int j = grid.j_F; j < grid.n_y; ++j) {
        const double Jout = J_iface[static_cast<size_t>(j) * (nv + 1) + nv];
        s += Jout * f.values[grid.idx(nv - 1, j)];
    }
    return s * grid.dy;
}

double firing_rate(const Grid& g, const ModelParams& p, const DensityField& f) {
    const int nv = g.n_v;
    double s = 0.0;
    for (int j = g.j_F; j < g.n_y; ++j)
        s += eval_J(p, g.v_F, g.yc[j]) * f.values[g.idx(nv - 1, j)];
    return s * g.dy;
}

ImplicitDiffusion prepare_implicit_diffusion(const Grid& g, const std::vector<double>& lo,
                                             const std::vector<double>& hi, double dt) {
    const int ny = g.n_y;
    const double dy = g.dy;
    ImplicitDiffusion w;
    w.dt = dt;
    w.sub.assign(ny, 0.0);
    w.cprime.assign(ny, 0.0);
    w.inv_den.assign(ny, 0.0);

    std::vector<double> diag(ny), sup(ny, 0.0);
    for (int j = 0; j < ny; ++j) {
        const double out_up = j + 1 < ny ? lo[j] : 0.0;
        const double out_dn = j > 0 ? hi[j - 1] : 0.0;
        diag[j] = 1.0 + dt * (out_up + out_dn) / dy;
        if (j + 1 < ny) sup[j] = -dt * hi[j] / dy;
        if (j > 0) w.sub[j] = -dt * lo[j - 1] / dy;
    }
    w.inv_den[0] = 1.0 / diag[0];
    w.cprime[0] = sup[0] * w.inv_den[0];
    for (int j = 1; j < ny; ++j) {
        const double den = diag[j] - w.sub[j] * w.cprime[j - 1];
        w.inv_den[j] = 1.0 / den;
        if (j + 1 < ny) w.cprime[j] = sup[j] * w.inv_den[j];
    }
    return w;
}

ImplicitDiffusion prepare_implicit_diffusion(const GeneratorOperator& op, double dt) {
    return prepare_implicit_diffusion(op.grid, op.diff_lo, op.diff_hi, dt);
}

void solve_implicit_diffusion(const Grid& g, const ImplicitDiffusion& w,
                              const double* rhs, double* x) {
    const int nv = g.n_v, ny = g.n_y;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nv; ++i) {
        x[i] = rhs[i] * w.inv_den[0];
        for (int j = 1; j < ny; ++j) {
            const size_t c = static_cast<size_t>(j) * nv + i;
            x[c] = (rhs[c] - w.sub[j] * x[c - nv]) * w.inv_den[j];
        }
        for (int j = ny - 2; j >= 0; --j) {
            const size_t c = static_cast<size_t>(j) * nv + i;
            x[c] -= w.cprime[j] * x[c + nv];
        }
    }
}

void export_triplets_csv(const GeneratorOperator& op, std::ostream& os) {
    os << "row,col,value\n";
    os.precision(17);
    for (int k = 0; k < op.L.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(op.L, k); it; ++it)
            os << it.row() << ',' << it.col() << ',' << it.value() << '\n';
}

} // namespace vck
