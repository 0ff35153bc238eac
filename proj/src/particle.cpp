#include "vck/particle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vck {

ParticleCalibration calibrate_external_input(const ModelParams& p) {
    ParticleCalibration cal;
    cal.nu_ext = p.y_star * p.y_star / (2.0 * p.a_star);
    cal.jump_size = 2.0 * p.a_star / p.y_star;
    return cal;
}

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// One uniform draw per sample: inversion with an early exit at zero jumps.
int poisson_draw(std::mt19937_64& rng, double lambda, double p_zero) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u = uni(rng);
    if (u <= p_zero) return 0;
    double cum = p_zero, pk = p_zero;
    int k = 0;
    while (u > cum && k < 64) {
        ++k;
        pk *= lambda / k;
        cum += pk;
    }
    return k;
}

} // namespace

ParticleResult simulate_network(const ModelParams& p, const ParticleConfig& cfg) {
    p.validate();
    if (cfg.n_neurons < 1) throw std::invalid_argument("simulate_network: needs n_neurons >= 1");
    if (!(cfg.dt > 0.0) || !(cfg.dt < 1.0))
        throw std::invalid_argument("simulate_network: requires 0 < dt < 1");
    if (cfg.hist_grid && !(cfg.window_t1 > cfg.window_t0))
        throw std::invalid_argument("simulate_network: empty histogram window");

    const ParticleCalibration cal =
        cfg.calibration ? *cfg.calibration : calibrate_external_input(p);
    const double lambda = cal.nu_ext * cfg.dt;
    const double p_zero = std::exp(-lambda);
    const double h = cal.jump_size;

    const int n = cfg.n_neurons;
    int workers = cfg.n_workers;
#ifdef _OPENMP
    if (workers <= 0) workers = omp_get_max_threads();
#else
    if (workers <= 0) workers = 1;
#endif
    workers = std::min(workers, n);

    // contiguous neuron chunks, one RNG stream per chunk
    std::vector<int> chunk_lo(workers + 1);
    for (int c = 0; c <= workers; ++c)
        chunk_lo[c] = static_cast<int>(static_cast<int64_t>(n) * c / workers);
    std::vector<std::mt19937_64> rng(workers);
    for (int c = 0; c < workers; ++c)
        rng[c].seed(splitmix64(cfg.seed ^ (0x517cc1b727220a95ull * (c + 1))));

    ParticleResult out;
    out.v_final.assign(n, 0.0);
    out.y_final.assign(n, 0.0);
    std::vector<double>& v = out.v_final;
    std::vector<double>& y = out.y_final;

    // initial state: voltages spread over [0, v_F), conductances near y_star
    for (int c = 0; c < workers; ++c) {
        std::uniform_real_distribution<double> uv(0.0, 0.95 * p.v_F);
        std::uniform_real_distribution<double> uy(0.5 * p.y_star, 1.5 * p.y_star);
        for (int i = chunk_lo[c]; i < chunk_lo[c + 1]; ++i) {
            v[i] = uv(rng[c]);
            y[i] = cfg.y_init >= 0.0 ? cfg.y_init : uy(rng[c]);
        }
    }

    const int n_steps = static_cast<int>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
    const double coupling = p.c / n;

    std::vector<std::vector<SpikeEvent>> spike_buf(workers);
    std::vector<std::vector<int>> spiked_now(workers);
    std::vector<uint64_t> chunk_spikes(workers, 0);
    std::vector<std::vector<uint64_t>> hist(workers);
    const Grid* hg = cfg.hist_grid;
    if (hg)
        for (auto& hbuf : hist) hbuf.assign(static_cast<size_t>(hg->size()), 0);

    uint64_t window_spikes = 0;
    double window_time = 0.0;

    for (int k = 0; k < n_steps; ++k) {
        const double t_next = (k + 1) * cfg.dt;
        const bool in_window = hg && k * cfg.dt >= cfg.window_t0 && k * cfg.dt < cfg.window_t1;
        uint64_t step_spikes = 0;

#pragma omp parallel for schedule(static, 1) reduction(+ : step_spikes)
        for (int c = 0; c < workers; ++c) {
            auto& gen = rng[c];
            spiked_now[c].clear();
            uint64_t local = 0;
            for (int i = chunk_lo[c]; i < chunk_lo[c + 1]; ++i) {
                if (in_window) {
                    const int bi = std::min(hg->n_v - 1,
                                            std::max(0, static_cast<int>(v[i] / hg->dv)));
                    const int bj = std::min(hg->n_y - 1,
                                            std::max(0, static_cast<int>(y[i] / hg->dy)));
                    ++hist[c][hg->idx(bi, bj)];
                }
                double vn = v[i] + cfg.dt * (-v[i] - y[i] * (v[i] - p.v_E));
                if (vn >= p.v_F) {
                    vn = 0.0; // instantaneous reset
                    ++local;
                    spiked_now[c].push_back(i);
                    if (cfg.record_spikes) spike_buf[c].push_back({t_next, i});
                }
                v[i] = vn;
                double yn = y[i] * (1.0 - cfg.dt);
                const int jumps = poisson_draw(gen, lambda, p_zero);
                if (jumps > 0) yn += h * jumps;
                y[i] = yn;
            }
            step_spikes += local;
            chunk_spikes[c] += local;
        }

        if (static_cast<double>(step_spikes) > 0.5 * n)
            throw std::invalid_argument(
                "simulate_network: per-step spike fraction exceeded 0.5, reduce dt");

        if (coupling > 0.0 && step_spikes > 0) {
            // synchronous network jumps of size c/N per spike, own spike excluded
            const double kick = coupling * static_cast<double>(step_spikes);
#pragma omp parallel for schedule(static, 1)
            for (int c = 0; c < workers; ++c) {
                for (int i = chunk_lo[c]; i < chunk_lo[c + 1]; ++i) y[i] += kick;
                for (int i : spiked_now[c]) y[i] -= coupling;
            }
        }

        for (int c = 0; c < workers; ++c)
            for (int i = chunk_lo[c]; i < chunk_lo[c + 1]; ++i)
                if (y[i] < 0.0)
                    throw std::logic_error("simulate_network: negative conductance");

        if (k * cfg.dt >= cfg.window_t0 && k * cfg.dt < cfg.window_t1) {
            window_spikes += step_spikes;
            window_time += cfg.dt;
        }
    }

    for (int c = 0; c < workers; ++c) {
        out.total_spikes += chunk_spikes[c];
        out.spikes.insert(out.spikes.end(), spike_buf[c].begin(), spike_buf[c].end());
    }
    std::stable_sort(out.spikes.begin(), out.spikes.end(),
                     [](const SpikeEvent& a, const SpikeEvent& b) {
                         return a.t < b.t || (a.t == b.t && a.neuron < b.neuron);
                     });

    if (cfg.window_t1 > cfg.window_t0) {
        const double span = window_time > 0.0 ? window_time : 1.0;
        out.window_rate = static_cast<double>(window_spikes) / (static_cast<double>(n) * span);
    } else {
        out.window_rate =
            static_cast<double>(out.total_spikes) / (static_cast<double>(n) * n_steps * cfg.dt);
    }

    if (hg) {
        out.density = zero_field(*hg);
        uint64_t samples = 0;
        for (int c = 0; c < workers; ++c)
            for (int q = 0; q < hg->size(); ++q) {
                out.density.values[q] += static_cast<double>(hist[c][q]);
                samples += hist[c][q];
            }
        out.histogram_samples = samples;
        if (samples == 0)
            throw std::invalid_argument("simulate_network: histogram window saw no samples");
        const double scale = static_cast<double>(samples) * hg->cell_measure();
        for (double& x : out.density.values) x /= scale;
    }
    return out;
}

DensityField empirical_density(const Grid& g, const std::vector<double>& v,
                               const std::vector<double>& y) {
    if (v.size() != y.size() || v.empty())
        throw std::invalid_argument("empirical_density: empty or mismatched state");
    DensityField f = zero_field(g);
    for (size_t i = 0; i < v.size(); ++i) {
        const int bi = std::min(g.n_v - 1, std::max(0, static_cast<int>(v[i] / g.dv)));
        const int bj = std::min(g.n_y - 1, std::max(0, static_cast<int>(y[i] / g.dy)));
        f.values[g.idx(bi, bj)] += 1.0;
    }
    const double scale = static_cast<double>(v.size()) * g.cell_measure();
    for (double& x : f.values) x /= scale;
    return f;
}

} // namespace vck
