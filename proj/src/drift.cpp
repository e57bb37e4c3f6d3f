#include "famc/drift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace famc {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void PiecewiseConstantField::validate() const {
    if (breakpoints.empty()) throw DriftError("field needs at least one segment");
    if (breakpoints.size() != values.size())
        throw DriftError("field needs one value per breakpoint-started interval");
    if (breakpoints.front() != 0.0) throw DriftError("first breakpoint must be 0");
    for (size_t i = 1; i < breakpoints.size(); ++i)
        if (!(breakpoints[i] > breakpoints[i - 1]))
            throw DriftError("breakpoints must be strictly ascending");
    if (extension != Extension::kHoldLast && !(extent > breakpoints.back()))
        throw DriftError("extent must exceed the last breakpoint");
}

Vec3 PiecewiseConstantField::value_at(double t) const {
    if (t < 0.0) throw DriftError("field evaluated at t < 0");
    double tau = t;
    if (extension == Extension::kPeriodic) {
        tau = std::fmod(t, extent);
    } else if (extension == Extension::kZero && t >= extent) {
        return {};
    }
    // Last interval starting at or before tau (left-closed convention).
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), tau);
    const size_t idx = static_cast<size_t>(it - breakpoints.begin()) - 1;
    return values[idx];
}

Vec3 PiecewiseConstantField::integral_unrolled(double T) const {
    Vec3 acc;
    const size_t n = breakpoints.size();
    for (size_t i = 0; i < n; ++i) {
        const double seg_start = breakpoints[i];
        double seg_end = (i + 1 < n) ? breakpoints[i + 1]
                                     : (extension == Extension::kZero ? extent : T);
        if (seg_start >= T) break;
        seg_end = std::min(seg_end, T);
        if (seg_end > seg_start) acc += values[i] * (seg_end - seg_start);
    }
    return acc;
}

Vec3 PiecewiseConstantField::integral(double T) const {
    if (T < 0.0) throw DriftError("field integral needs T >= 0");
    if (T == 0.0) return {};
    if (extension != Extension::kPeriodic) return integral_unrolled(T);
    const double full = std::floor(T / extent);
    const double rem = T - full * extent;
    Vec3 acc = integral_unrolled(extent) * full;
    if (rem > 0.0) acc += integral_unrolled(rem);
    return acc;
}

double PiecewiseConstantField::energy_unrolled(double t0, double t1) const {
    double acc = 0.0;
    const size_t n = breakpoints.size();
    for (size_t i = 0; i < n; ++i) {
        const double seg_start = std::max(breakpoints[i], t0);
        double seg_end = (i + 1 < n) ? breakpoints[i + 1]
                                     : (extension == Extension::kZero ? extent : t1);
        seg_end = std::min(seg_end, t1);
        if (seg_end > seg_start) acc += norm_sq(values[i]) * (seg_end - seg_start);
    }
    return acc;
}

double PiecewiseConstantField::energy(double t0, double t1) const {
    if (!(t0 >= 0.0 && t1 >= t0)) throw DriftError("energy window must satisfy 0 <= t0 <= t1");
    if (t1 == t0) return 0.0;
    if (extension != Extension::kPeriodic) return energy_unrolled(t0, t1);
    // Reduce to per-period pieces.
    double acc = 0.0;
    const double p0 = std::floor(t0 / extent);
    const double p1 = std::floor(t1 / extent);
    if (p0 == p1) return energy_unrolled(t0 - p0 * extent, t1 - p0 * extent);
    acc += energy_unrolled(t0 - p0 * extent, extent);
    const double mid_periods = p1 - p0 - 1.0;
    if (mid_periods > 0.0) acc += energy_unrolled(0.0, extent) * mid_periods;
    const double rem = t1 - p1 * extent;
    if (rem > 0.0) acc += energy_unrolled(0.0, rem);
    return acc;
}

PiecewiseConstantField PiecewiseConstantField::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DriftError("cannot open drift csv: " + path);
    PiecewiseConstantField f;
    std::string line;
    bool header_skipped = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_skipped) {
            header_skipped = true;
            if (line.find("t_start_s") != std::string::npos) continue;
        }
        std::istringstream row(line);
        std::string cell;
        double v[4];
        for (int i = 0; i < 4; ++i) {
            if (!std::getline(row, cell, ',')) throw DriftError("drift csv: short row");
            v[i] = std::stod(cell);
        }
        f.breakpoints.push_back(v[0]);
        f.values.push_back({v[1], v[2], v[3]});
    }
    f.extension = Extension::kHoldLast;
    f.validate();
    return f;
}

void BackgroundFlow::validate() const {
    if (!(period > 0.0)) throw DriftError("flow period must be > 0");
    if (std::abs(norm(axis) - 1.0) > 1e-12) throw DriftError("flow axis must be unit length");
}

Vec3 BackgroundFlow::velocity_at(double t) const {
    const double c = std::cos(kTwoPi * 0.5 * t / period);
    return axis * (mobility * force_amplitude * c * c);
}

Vec3 BackgroundFlow::displacement(double T) const {
    const double s = std::sin(kTwoPi * T / period);
    return axis * (mobility * force_amplitude * (0.5 * T + period / (2.0 * kTwoPi) * s));
}

Vec3 DriftWaveform::drift_at(double t) const {
    if (t < 0.0) throw DriftError("drift evaluated at t < 0");
    Vec3 v;
    if (flow) v += flow->velocity_at(t);
    if (efield) v += efield->value_at(t) * mobility_const;
    if (raw_drift) v += raw_drift->value_at(t);
    return v;
}

Vec3 DriftWaveform::displacement(double T) const {
    Vec3 d;
    if (flow) d += flow->displacement(T);
    if (efield) d += efield->integral(T) * mobility_const;
    if (raw_drift) d += raw_drift->integral(T);
    return d;
}

Vec3 DriftWaveform::effective_drift(double T) const {
    if (!(T > 0.0)) throw DriftError("effective drift needs T > 0");
    return displacement(T) / T;
}

DriftWaveform make_waveform(const ScenarioConfig& cfg,
                            std::optional<PiecewiseConstantField> efield) {
    DriftWaveform w;
    if (cfg.flow_force != 0.0) {
        BackgroundFlow flow;
        flow.mobility = cfg.mobility;
        flow.force_amplitude = cfg.flow_force;
        flow.period = cfg.flow_period;
        flow.axis = {1.0, 0.0, 0.0};
        flow.validate();
        w.flow = flow;
    }
    if (efield) {
        efield->validate();
        w.efield = std::move(efield);
    }
    w.mobility_const = cfg.mobility_const;
    return w;
}

DriftWaveform zero_waveform() { return DriftWaveform{}; }

DriftWaveform verification_drift_fixture() {
    PiecewiseConstantField f;
    f.breakpoints = {0.0, 0.5, 1.0, 1.5};
    f.values = {
        {4.170e-6, 1.468e-6, 3.968e-6},
        {7.203e-6, 0.923e-6, 5.388e-6},
        {0.001e-6, 1.863e-6, 4.192e-6},
        {3.023e-6, 3.456e-6, 6.852e-6},
    };
    f.extension = Extension::kHoldLast;
    f.validate();
    DriftWaveform w;
    w.raw_drift = std::move(f);
    return w;
}

}  // namespace famc
