#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "famc/analytic_cir.hpp"
#include "famc/config.hpp"
#include "famc/drift.hpp"

namespace famc {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimSettings {
    uint64_t particle_count = 0;
    double time_step = 1e-4;  // s; diffusive step ~0.39 um at scenario scale
    double horizon = 2.0;     // s
    uint64_t seed = 1;
    double histogram_bin = 0.05;  // s
    unsigned threads = 0;         // 0 = hardware concurrency
    // Grows the step quadratically with distance from the absorbing boundary
    // (6-sigma guarded, bridge-corrected). Intended for long-horizon capture
    // runs where particles spend most of the time far from the receiver.
    bool far_field_acceleration = false;

    void validate() const;
};

// Empirical first-hitting density estimate.
struct HitHistogram {
    std::vector<double> bin_edges;  // size bins+1, seconds
    std::vector<double> density;    // 1/s per bin
    std::vector<double> std_error;  // 1/s per bin
    double total_hit_fraction = 0.0;

    int bins() const { return static_cast<int>(density.size()); }
};

struct SenseEstimate {
    double time = 0.0;
    double probability = 0.0;
    double std_error = 0.0;
};

// Mean of the per-path likelihood weights frozen at min(hit time, check time);
// a direct estimate of E[M] = 1, the martingale consistency check.
struct WeightStat {
    double time = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
};

struct ReweightedHistogram {
    HitHistogram hist;
    WeightStat weight;
};

// Euler-Maruyama simulation of drifted diffusion absorbed at the sphere.
// Within-step boundary crossings are detected with the Brownian-bridge
// probability exp(-a*b/(D dt)); hits are assigned the step midpoint (bridge
// case) or the linearly interpolated crossing (endpoint-inside case).
// Deterministic for fixed (seed, particle_count) at any worker count.
HitHistogram simulate_absorbing(const ScenarioConfig& cfg, const DriftWaveform& w,
                                const SimSettings& s);

// Snapshot occupancy of the transparent sphere; particles are never removed.
// The step grid lands exactly on every requested sample time.
std::vector<SenseEstimate> simulate_passive(const ScenarioConfig& cfg, const DriftWaveform& w,
                                            const std::vector<double>& sample_times,
                                            const SimSettings& s);

// Exact change-of-measure estimator: zero-drift paths under the reference
// measure, each hit weighted by the discretized likelihood ratio
//   log M += Phi(t_k) . dX_k / (2D) - |Phi(t_k)|^2 dt / (4D),
// with dX_k the zero-drift position increment. No effective-drift
// approximation enters, so this is the reference for both the direct
// simulator and the tilted analytics. weight_check_time <= 0 means horizon.
ReweightedHistogram girsanov_reweighted_hit(const ScenarioConfig& cfg, const DriftWaveform& w,
                                            const SimSettings& s,
                                            double weight_check_time = -1.0);

}  // namespace famc
