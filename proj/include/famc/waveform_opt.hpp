#pragma once

#include <utility>

#include "famc/analytic_cir.hpp"
#include "famc/config.hpp"
#include "famc/drift.hpp"

namespace famc {

// Inputs of the two-phase magnitude allocator: ideal unconstrained field for
// the signal phase (q_s), sign reference for the suppression phase (q_r),
// phase durations and the energy budget.
struct MrpInput {
    double q_s = 0.0;     // V/m
    double q_r = 0.0;     // V/m (only the sign is consumed)
    double t_p1 = 0.0;    // s
    double t_p2 = 0.0;    // s
    double budget = 0.0;  // V^2*s/m^2

    void validate() const;
};

struct FieldDesign {
    double v1 = 0.0;           // V/m, signal phase
    double v2 = 0.0;           // V/m, suppression phase
    double t_p1 = 0.0;         // s
    double t_p2 = 0.0;         // s
    double phase2_start = 0.0; // s within the slot
    double energy_used = 0.0;  // V^2*s/m^2
    double residual = 0.0;     // unspent budget
    bool saturated = false;    // phase I consumed the whole budget

    void validate() const;
};

// Two-phase magnitude allocation. Phase I reproduces the ideal field when the
// budget allows, otherwise spends everything on a truncated push; any residual
// energy becomes a maximal counter-field opposing q_r. t_p2 = 0 with the
// suppression branch reached yields v2 = 0.
std::pair<double, double> mrp(const MrpInput& input);

// Absorbing-receiver targets: phase I drives the time-averaged drift to bridge
// (||x0|| - r)/t_peak along the Tx-Rx axis net of the background flow; the
// suppression reference points down the same axis so the counter-field pushes
// residual particles away. Durations: t_peak and (1 - beta) T_b.
MrpInput mhp_targets(const ScenarioConfig& cfg);

// Passive-receiver targets: phase I centers the cloud on the receiver at the
// sampling instant; phase II maximizes the displacement away from it at the
// next sampling instant assuming the periodic field repeats, which makes q_r
// depend on the phase-I outcome (two-stage evaluation). Durations: t_s and
// T_b - t_s.
MrpInput msp_targets(const ScenarioConfig& cfg);

FieldDesign mhp_design(const ScenarioConfig& cfg);
FieldDesign msp_design(const ScenarioConfig& cfg);

// Periodic per-slot field realizing a design: absorbing windows
// [0, t_peak) and [beta T_b, T_b); passive windows [0, t_s) and [t_s, T_b).
// Overlapping absorbing windows (t_peak > beta T_b) are rejected.
PiecewiseConstantField build_field(const FieldDesign& design, const ScenarioConfig& cfg,
                                   Receiver receiver);

// Constant-field baseline spending the budget evenly over the slot.
PiecewiseConstantField undesign_field(const ScenarioConfig& cfg);

// Tx->Rx unit vector (receiver at the origin).
Vec3 link_axis(const ScenarioConfig& cfg);

}  // namespace famc
