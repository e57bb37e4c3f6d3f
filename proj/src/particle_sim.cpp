#include "famc/particle_sim.hpp"

#include <algorithm>
#include <cmath>

#include "famc/parallel.hpp"
#include "famc/rng.hpp"

namespace famc {

namespace {

// exp(-33) < 5e-15: crossings this unlikely are not worth a uniform draw.
constexpr double kBridgeLogCutoff = 33.0;

void append_breakpoints(const PiecewiseConstantField& f, double horizon,
                        std::vector<double>* knots) {
    if (f.extension == Extension::kPeriodic) {
        const auto periods = static_cast<uint64_t>(std::ceil(horizon / f.extent));
        for (uint64_t k = 0; k < periods; ++k)
            for (double b : f.breakpoints)
                if (k * f.extent + b < horizon) knots->push_back(k * f.extent + b);
    } else {
        for (double b : f.breakpoints)
            if (b < horizon) knots->push_back(b);
        if (f.extension == Extension::kZero && f.extent < horizon)
            knots->push_back(f.extent);
    }
}

struct TimeGrid {
    std::vector<double> times;  // t_0 = 0 .. t_M = horizon
    std::vector<Vec3> drift;    // Phi(t_k) held over step k
    std::vector<double> dt;
    std::vector<double> sigma;  // sqrt(2 D dt_k)
    size_t steps() const { return dt.size(); }
};

// Uniform dt grid refined with waveform breakpoints and requested landing
// times, so piecewise-constant drift integrates exactly and samples land on
// grid nodes.
TimeGrid build_grid(const ScenarioConfig& cfg, const DriftWaveform& w, const SimSettings& s,
                    const std::vector<double>& extra_knots) {
    std::vector<double> knots{0.0, s.horizon};
    const auto n_uniform = static_cast<uint64_t>(std::ceil(s.horizon / s.time_step));
    for (uint64_t k = 1; k < n_uniform; ++k) knots.push_back(k * s.time_step);
    if (w.efield) append_breakpoints(*w.efield, s.horizon, &knots);
    if (w.raw_drift) append_breakpoints(*w.raw_drift, s.horizon, &knots);
    for (double t : extra_knots)
        if (t > 0.0 && t < s.horizon) knots.push_back(t);

    std::sort(knots.begin(), knots.end());
    TimeGrid g;
    g.times.reserve(knots.size());
    for (double t : knots)
        if (g.times.empty() || t - g.times.back() > 1e-12) g.times.push_back(t);
    if (g.times.back() != s.horizon) g.times.back() = s.horizon;

    const size_t m = g.times.size() - 1;
    g.drift.reserve(m);
    g.dt.reserve(m);
    g.sigma.reserve(m);
    for (size_t k = 0; k < m; ++k) {
        const double dt = g.times[k + 1] - g.times[k];
        g.drift.push_back(w.drift_at(g.times[k]));
        g.dt.push_back(dt);
        g.sigma.push_back(std::sqrt(2.0 * cfg.diffusion * dt));
    }
    return g;
}

struct HitPartial {
    std::vector<double> w_sum;
    std::vector<double> w2_sum;
    double total_w = 0.0;
    double total_w2 = 0.0;
    double m_sum = 0.0;   // likelihood weight at the check time
    double m2_sum = 0.0;
};

struct WalkResult {
    bool hit = false;
    double time = 0.0;
    double hit_weight = 1.0;    // likelihood ratio at absorption
    double check_weight = 1.0;  // likelihood ratio at min(hit, check time)
};

// One particle on the shared grid. Reweighted mode steps with zero drift and
// accumulates the likelihood ratio against the grid drift. The check weight
// freezes at min(hit time, check time) — a bounded stopping time, so its mean
// over all paths is exactly 1 — while the histogram weight is the ratio at
// absorption itself.
template <bool kReweighted>
WalkResult walk_absorbing(const ScenarioConfig& cfg, const TimeGrid& g, RandomStream& rng,
                          [[maybe_unused]] size_t weight_node) {
    const double r = cfg.rx_radius;
    const double inv_2d = 1.0 / (2.0 * cfg.diffusion);
    Vec3 x = cfg.tx_position;
    double dist0 = norm(x) - r;
    double logw = 0.0;
    double check_weight = 1.0;
    bool check_taken = false;

    const size_t m = g.steps();
    for (size_t k = 0; k < m; ++k) {
        const Vec3 noise = {g.sigma[k] * rng.gauss(), g.sigma[k] * rng.gauss(),
                            g.sigma[k] * rng.gauss()};
        Vec3 xn;
        if constexpr (kReweighted) {
            xn = x + noise;
            logw += dot(g.drift[k], noise) * inv_2d -
                    norm_sq(g.drift[k]) * g.dt[k] * (0.5 * inv_2d);
        } else {
            xn = x + g.drift[k] * g.dt[k] + noise;
        }

        const double dist1 = norm(xn) - r;
        double hit_time = -1.0;
        if (dist1 <= 0.0) {
            const double frac = dist0 / (dist0 - dist1);
            hit_time = g.times[k] + frac * g.dt[k];
        } else {
            const double bridge_arg = dist0 * dist1 / (cfg.diffusion * g.dt[k]);
            if (bridge_arg < kBridgeLogCutoff && rng.uniform() < std::exp(-bridge_arg))
                hit_time = g.times[k] + 0.5 * g.dt[k];
        }

        if (hit_time >= 0.0) {
            WalkResult rec;
            rec.hit = true;
            rec.time = hit_time;
            if constexpr (kReweighted) {
                rec.hit_weight = std::exp(logw);
                rec.check_weight = check_taken ? check_weight : rec.hit_weight;
            }
            return rec;
        }

        if constexpr (kReweighted) {
            if (k + 1 == weight_node && !check_taken) {
                check_weight = std::exp(logw);
                check_taken = true;
            }
        }
        x = xn;
        dist0 = dist1;
    }
    WalkResult rec;
    if constexpr (kReweighted) rec.check_weight = check_weight;
    return rec;
}

// Per-particle adaptive walk: step variance capped at ((d-r)/6)^2 so the
// boundary stays ~6 sigma away from any enlarged step; drift additionally
// caps the step so the deterministic displacement cannot overshoot.
WalkResult walk_absorbing_far_field(const ScenarioConfig& cfg, const DriftWaveform& w,
                                    const SimSettings& s, RandomStream& rng) {
    const double r = cfg.rx_radius;
    Vec3 x = cfg.tx_position;
    double dist0 = norm(x) - r;
    double t = 0.0;
    while (t < s.horizon) {
        double dt = std::max(s.time_step, dist0 * dist0 / (36.0 * 2.0 * cfg.diffusion));
        const Vec3 phi = w.drift_at(t);
        const double speed = norm(phi);
        if (speed > 0.0) dt = std::min(dt, dist0 / (6.0 * speed));
        dt = std::max(std::min(dt, s.horizon - t), 1e-12);

        const double sigma = std::sqrt(2.0 * cfg.diffusion * dt);
        const Vec3 xn = x + phi * dt +
                        Vec3{sigma * rng.gauss(), sigma * rng.gauss(), sigma * rng.gauss()};
        const double dist1 = norm(xn) - r;
        if (dist1 <= 0.0) {
            const double frac = dist0 / (dist0 - dist1);
            return {true, t + frac * dt};
        }
        const double bridge_arg = dist0 * dist1 / (cfg.diffusion * dt);
        if (bridge_arg < kBridgeLogCutoff && rng.uniform() < std::exp(-bridge_arg))
            return {true, t + 0.5 * dt};
        x = xn;
        dist0 = dist1;
        t += dt;
    }
    return {};
}

std::vector<double> make_bin_edges(const SimSettings& s, int* nbins) {
    *nbins = static_cast<int>(std::ceil(s.horizon / s.histogram_bin - 1e-9));
    std::vector<double> edges(static_cast<size_t>(*nbins) + 1);
    for (int i = 0; i <= *nbins; ++i) edges[static_cast<size_t>(i)] = i * s.histogram_bin;
    return edges;
}

template <bool kReweighted>
ReweightedHistogram run_absorbing(const ScenarioConfig& cfg, const DriftWaveform& w,
                                  const SimSettings& s, double weight_check_time) {
    s.validate();
    if (!(cfg.tx_distance() > cfg.rx_radius)) throw SimError("transmitter inside receiver");
    if constexpr (kReweighted) {
        if (s.far_field_acceleration)
            throw SimError("far-field acceleration applies to direct simulation only");
    }

    double check_time = weight_check_time > 0.0 ? std::min(weight_check_time, s.horizon)
                                                : s.horizon;

    TimeGrid grid;
    size_t weight_node = 0;
    if (!s.far_field_acceleration) {
        grid = build_grid(cfg, w, s, {check_time});
        weight_node = static_cast<size_t>(
            std::lower_bound(grid.times.begin(), grid.times.end(), check_time - 1e-12) -
            grid.times.begin());
        if constexpr (kReweighted) {
            for (const Vec3& phi : grid.drift)
                if (!std::isfinite(phi.x) || !std::isfinite(phi.y) || !std::isfinite(phi.z))
                    throw SimError("non-finite drift");
        }
    }

    int nbins = 0;
    const std::vector<double> edges = make_bin_edges(s, &nbins);
    const double n = static_cast<double>(s.particle_count);

    HitPartial total;
    total.w_sum.assign(static_cast<size_t>(nbins), 0.0);
    total.w2_sum.assign(static_cast<size_t>(nbins), 0.0);

    run_deterministic_chunks<HitPartial>(
        s.particle_count, s.threads,
        [&](uint64_t lo, uint64_t hi) {
            HitPartial part;
            part.w_sum.assign(static_cast<size_t>(nbins), 0.0);
            part.w2_sum.assign(static_cast<size_t>(nbins), 0.0);
            for (uint64_t p = lo; p < hi; ++p) {
                RandomStream rng(s.seed, p);
                WalkResult rec;
                if (s.far_field_acceleration) {
                    rec = walk_absorbing_far_field(cfg, w, s, rng);
                } else {
                    rec = walk_absorbing<kReweighted>(cfg, grid, rng, weight_node);
                }
                if constexpr (kReweighted) {
                    part.m_sum += rec.check_weight;
                    part.m2_sum += rec.check_weight * rec.check_weight;
                }
                if (rec.hit) {
                    const double hit_w = kReweighted ? rec.hit_weight : 1.0;
                    const auto bin = std::min<size_t>(
                        static_cast<size_t>(rec.time / s.histogram_bin),
                        static_cast<size_t>(nbins) - 1);
                    part.w_sum[bin] += hit_w;
                    part.w2_sum[bin] += hit_w * hit_w;
                    part.total_w += hit_w;
                    part.total_w2 += hit_w * hit_w;
                }
            }
            return part;
        },
        [&](HitPartial&& part) {
            for (int b = 0; b < nbins; ++b) {
                total.w_sum[static_cast<size_t>(b)] += part.w_sum[static_cast<size_t>(b)];
                total.w2_sum[static_cast<size_t>(b)] += part.w2_sum[static_cast<size_t>(b)];
            }
            total.total_w += part.total_w;
            total.total_w2 += part.total_w2;
            total.m_sum += part.m_sum;
            total.m2_sum += part.m2_sum;
        });

    ReweightedHistogram out;
    out.hist.bin_edges = edges;
    out.hist.density.resize(static_cast<size_t>(nbins));
    out.hist.std_error.resize(static_cast<size_t>(nbins));
    for (int b = 0; b < nbins; ++b) {
        const auto i = static_cast<size_t>(b);
        const double width = edges[i + 1] - edges[i];
        const double mean = total.w_sum[i] / n;
        const double var = std::max(0.0, total.w2_sum[i] / n - mean * mean);
        out.hist.density[i] = mean / width;
        out.hist.std_error[i] = std::sqrt(var / n) / width;
    }
    out.hist.total_hit_fraction = total.total_w / n;

    if constexpr (kReweighted) {
        // Unabsorbed, unrecorded paths contribute weight at the check time;
        // they were all recorded in walk_absorbing, so m_sum spans all paths.
        const double mean = total.m_sum / n;
        const double var = std::max(0.0, total.m2_sum / n - mean * mean);
        out.weight = {check_time, mean, std::sqrt(var / n)};
    }
    return out;
}

}  // namespace

void SimSettings::validate() const {
    if (particle_count < 1) throw SimError("particle_count must be >= 1");
    if (!(time_step > 0.0)) throw SimError("time_step must be > 0");
    if (!(horizon > 0.0)) throw SimError("horizon must be > 0");
    if (time_step > horizon / 100.0) throw SimError("time_step must be <= horizon/100");
    if (histogram_bin < time_step) throw SimError("histogram_bin must be >= time_step");
}

HitHistogram simulate_absorbing(const ScenarioConfig& cfg, const DriftWaveform& w,
                                const SimSettings& s) {
    return run_absorbing<false>(cfg, w, s, -1.0).hist;
}

ReweightedHistogram girsanov_reweighted_hit(const ScenarioConfig& cfg, const DriftWaveform& w,
                                            const SimSettings& s, double weight_check_time) {
    return run_absorbing<true>(cfg, w, s, weight_check_time);
}

std::vector<SenseEstimate> simulate_passive(const ScenarioConfig& cfg, const DriftWaveform& w,
                                            const std::vector<double>& sample_times,
                                            const SimSettings& s) {
    s.validate();
    for (double t : sample_times)
        if (t > s.horizon + 1e-12) throw SimError("sample time beyond horizon");

    const TimeGrid grid = build_grid(cfg, w, s, sample_times);
    // Map each requested sample time onto its grid node.
    std::vector<size_t> sample_node(sample_times.size());
    for (size_t i = 0; i < sample_times.size(); ++i) {
        sample_node[i] = static_cast<size_t>(
            std::lower_bound(grid.times.begin(), grid.times.end(), sample_times[i] - 1e-12) -
            grid.times.begin());
    }
    std::vector<int> record_at(grid.times.size(), -1);
    for (size_t i = 0; i < sample_node.size(); ++i) record_at[sample_node[i]] = static_cast<int>(i);

    const double r2 = cfg.rx_radius * cfg.rx_radius;
    std::vector<double> counts(sample_times.size(), 0.0);

    run_deterministic_chunks<std::vector<double>>(
        s.particle_count, s.threads,
        [&](uint64_t lo, uint64_t hi) {
            std::vector<double> part(sample_times.size(), 0.0);
            for (uint64_t p = lo; p < hi; ++p) {
                RandomStream rng(s.seed, p);
                Vec3 x = cfg.tx_position;
                if (record_at[0] >= 0 && norm_sq(x) <= r2)
                    part[static_cast<size_t>(record_at[0])] += 1.0;
                for (size_t k = 0; k < grid.steps(); ++k) {
                    x += grid.drift[k] * grid.dt[k] +
                         Vec3{grid.sigma[k] * rng.gauss(), grid.sigma[k] * rng.gauss(),
                              grid.sigma[k] * rng.gauss()};
                    const int si = record_at[k + 1];
                    if (si >= 0 && norm_sq(x) <= r2) part[static_cast<size_t>(si)] += 1.0;
                }
            }
            return part;
        },
        [&](std::vector<double>&& part) {
            for (size_t i = 0; i < counts.size(); ++i) counts[i] += part[i];
        });

    const double n = static_cast<double>(s.particle_count);
    std::vector<SenseEstimate> out(sample_times.size());
    for (size_t i = 0; i < sample_times.size(); ++i) {
        const double p = counts[i] / n;
        out[i] = {sample_times[i], p, std::sqrt(std::max(0.0, p * (1.0 - p)) / n)};
    }
    return out;
}

}  // namespace famc
