#include "famc/waveform_opt.hpp"

#include <cmath>
#include <stdexcept>

namespace famc {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Flow displacement projected on the link axis; zero when no flow is set.
double flow_displacement_on_axis(const ScenarioConfig& cfg, double t) {
    if (cfg.flow_force == 0.0) return 0.0;
    BackgroundFlow flow;
    flow.mobility = cfg.mobility;
    flow.force_amplitude = cfg.flow_force;
    flow.period = cfg.flow_period;
    flow.axis = {1.0, 0.0, 0.0};
    return dot(flow.displacement(t), link_axis(cfg));
}

FieldDesign assemble(const MrpInput& input, double phase2_start) {
    const auto [v1, v2] = mrp(input);
    FieldDesign d;
    d.v1 = v1;
    d.v2 = v2;
    d.t_p1 = input.t_p1;
    d.t_p2 = input.t_p2;
    d.phase2_start = phase2_start;
    d.energy_used = v1 * v1 * input.t_p1 + v2 * v2 * input.t_p2;
    d.residual = std::max(0.0, input.budget - d.energy_used);
    d.saturated = std::abs(input.q_s) >= std::sqrt(input.budget / input.t_p1);
    d.validate();
    if (d.energy_used > input.budget + 1e-12 * (1.0 + input.budget))
        throw std::logic_error("design exceeds the energy budget");
    return d;
}

}  // namespace

void MrpInput::validate() const {
    if (!(t_p1 > 0.0)) throw std::invalid_argument("t_p1 must be > 0");
    if (!(t_p2 >= 0.0)) throw std::invalid_argument("t_p2 must be >= 0");
    if (!(budget >= 0.0)) throw std::invalid_argument("budget must be >= 0");
}

void FieldDesign::validate() const {
    if (!(t_p1 > 0.0) || !(t_p2 >= 0.0)) throw std::invalid_argument("bad phase durations");
    if (!(energy_used >= 0.0)) throw std::invalid_argument("negative energy use");
}

std::pair<double, double> mrp(const MrpInput& input) {
    input.validate();
    const double cap = std::sqrt(input.budget / input.t_p1);
    if (std::abs(input.q_s) >= cap) {
        // Insufficient energy to reach the ideal phase-I field: truncate and
        // leave nothing for suppression.
        return {sgn(input.q_s) * cap, 0.0};
    }
    const double v1 = input.q_s;
    if (input.t_p2 <= 0.0) return {v1, 0.0};
    const double residual = input.budget - v1 * v1 * input.t_p1;
    const double v2 = -sgn(input.q_r) * std::sqrt(residual / input.t_p2);
    return {v1, v2};
}

Vec3 link_axis(const ScenarioConfig& cfg) {
    return -cfg.tx_position / cfg.tx_distance();
}

MrpInput mhp_targets(const ScenarioConfig& cfg) {
    if (!(cfg.peak_time <= cfg.symbol_duration))
        throw std::invalid_argument("peak_time must not exceed the symbol duration");
    const double gap = cfg.tx_distance() - cfg.rx_radius;
    const double flow_avg = flow_displacement_on_axis(cfg, cfg.peak_time) / cfg.peak_time;
    MrpInput in;
    in.q_s = (gap / cfg.peak_time - flow_avg) / cfg.mobility_const;
    in.q_r = 1.0;  // suppression opposes the Tx->Rx direction
    in.t_p1 = cfg.peak_time;
    in.t_p2 = (1.0 - cfg.suppression_onset) * cfg.symbol_duration;
    in.budget = cfg.energy_budget;
    in.validate();
    return in;
}

MrpInput msp_targets(const ScenarioConfig& cfg) {
    if (!(cfg.sample_time < cfg.symbol_duration))
        throw std::invalid_argument("sample_time must precede the symbol end for the design");
    const double ts = cfg.sample_time;
    const double tb = cfg.symbol_duration;
    const double ce = cfg.mobility_const;
    // Signed Tx coordinate along the link axis (negative: behind the origin).
    const double x0 = dot(cfg.tx_position, link_axis(cfg));

    MrpInput in;
    in.q_s = -(x0 + flow_displacement_on_axis(cfg, ts)) / (ce * ts);
    in.t_p1 = ts;
    in.t_p2 = tb - ts;
    in.budget = cfg.energy_budget;

    // Phase-I outcome first: the next-sample displacement target sees the
    // phase-I field applied in both slots of the periodic waveform.
    const double cap = std::sqrt(in.budget / in.t_p1);
    const double v1 = std::abs(in.q_s) >= cap ? sgn(in.q_s) * cap : in.q_s;
    in.q_r = -(x0 + 2.0 * ce * v1 * ts + flow_displacement_on_axis(cfg, ts + tb)) /
             (ce * (tb - ts));
    in.validate();
    return in;
}

FieldDesign mhp_design(const ScenarioConfig& cfg) {
    return assemble(mhp_targets(cfg), cfg.suppression_onset * cfg.symbol_duration);
}

FieldDesign msp_design(const ScenarioConfig& cfg) {
    return assemble(msp_targets(cfg), cfg.sample_time);
}

PiecewiseConstantField build_field(const FieldDesign& design, const ScenarioConfig& cfg,
                                   Receiver receiver) {
    design.validate();
    const double tb = cfg.symbol_duration;
    const Vec3 axis = link_axis(cfg);
    double phase1_end;
    double phase2_start;
    if (receiver == Receiver::kFullyAbsorbing) {
        phase1_end = cfg.peak_time;
        phase2_start = cfg.suppression_onset * tb;
        if (phase1_end > phase2_start)
            throw DriftError("signal and suppression windows overlap (t_peak > beta*T_b)");
    } else {
        phase1_end = cfg.sample_time;
        phase2_start = cfg.sample_time;
    }

    PiecewiseConstantField f;
    f.extension = Extension::kPeriodic;
    f.extent = tb;
    f.breakpoints.push_back(0.0);
    f.values.push_back(axis * design.v1);
    if (phase1_end < tb) {
        if (phase1_end < phase2_start) {
            f.breakpoints.push_back(phase1_end);
            f.values.push_back({});
        }
        if (phase2_start < tb) {
            f.breakpoints.push_back(phase2_start);
            f.values.push_back(axis * design.v2);
        }
    }
    f.validate();
    return f;
}

PiecewiseConstantField undesign_field(const ScenarioConfig& cfg) {
    PiecewiseConstantField f;
    f.extension = Extension::kPeriodic;
    f.extent = cfg.symbol_duration;
    f.breakpoints = {0.0};
    f.values = {link_axis(cfg) * std::sqrt(cfg.energy_budget / cfg.symbol_duration)};
    f.validate();
    return f;
}

}  // namespace famc
