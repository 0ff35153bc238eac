#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vck/grid.hpp"

namespace vck {

// External-input jump calibration: rate nu and size h reproduce the closure's
// drift y_star and diffusion a_star, i.e. nu h = y_star and nu h^2 / 2 = a_star.
struct ParticleCalibration {
    double nu_ext = 0.0;
    double jump_size = 0.0;
};

ParticleCalibration calibrate_external_input(const ModelParams& p);

struct ParticleConfig {
    int n_neurons = 10000;
    double dt = 1e-3;
    double t_end = 20.0;
    uint64_t seed = 1;
    int n_workers = 0; // 0 = all available; results are reproducible per worker count
    std::optional<ParticleCalibration> calibration; // default derived from the params
    double y_init = -1.0; // < 0 draws y(0) around y_star; >= 0 sets all conductances
    bool record_spikes = true;
    // histogram window; when hist_grid is set the (v,y) occupation is
    // accumulated every step with t in [window_t0, window_t1]
    double window_t0 = -1.0;
    double window_t1 = -1.0;
    const Grid* hist_grid = nullptr;
};

struct SpikeEvent {
    double t = 0.0;
    int neuron = 0;
};

struct ParticleResult {
    std::vector<SpikeEvent> spikes;
    uint64_t total_spikes = 0;
    double window_rate = 0.0; // spikes per neuron per unit time inside the window
    std::vector<double> v_final, y_final;
    DensityField density; // time-averaged histogram, mass 1 (when requested)
    uint64_t histogram_samples = 0;
};

// Euler simulation of the N-neuron network with instantaneous reset,
// Poisson external input and synchronous spike coupling of size c/N.
ParticleResult simulate_network(const ModelParams& p, const ParticleConfig& cfg);

// Histogram of one state snapshot, normalized to mass 1.
DensityField empirical_density(const Grid& g, const std::vector<double>& v,
                               const std::vector<double>& y);

} // namespace vck
