#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "famc/config.hpp"
#include "famc/vec3.hpp"

namespace famc {

struct DriftError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Behavior for t at and beyond the last breakpoint.
enum class Extension {
    kHoldLast,  // last value holds forever
    kZero,      // last value holds until `extent`, zero afterwards
    kPeriodic,  // pattern repeats with period `extent`
};

// Piecewise-constant 3-vector of time. Segments are left-closed/right-open:
// value i applies on [breakpoints[i], breakpoints[i+1]), and the tail
// starting at the last breakpoint follows the extension rule. Used both for
// raw drift traces (m/s) and for designed electric fields (V/m).
struct PiecewiseConstantField {
    std::vector<double> breakpoints;  // strictly ascending, first == 0
    std::vector<Vec3> values;         // one per breakpoint-started interval
    Extension extension = Extension::kHoldLast;
    double extent = 0.0;  // period (kPeriodic) or turn-off time (kZero)

    void validate() const;

    Vec3 value_at(double t) const;

    // Exact integral of the value over [0, T]; no quadrature.
    Vec3 integral(double T) const;

    // Exact integral of |value|^2 over [t0, t1].
    double energy(double t0, double t1) const;

    static PiecewiseConstantField from_csv(const std::string& path);

private:
    Vec3 integral_unrolled(double T) const;  // ignores periodic wrapping
    double energy_unrolled(double t0, double t1) const;
};

// Integral of |E|^2 over a window, the quantity bounded by the energy budget.
inline double field_energy(const PiecewiseConstantField& e, double t0, double t1) {
    return e.energy(t0, t1);
}

// Periodic background flow u(t) = axis * mu * F0 * cos^2(pi t / T_d).
struct BackgroundFlow {
    double mobility = 0.0;         // s/kg
    double force_amplitude = 0.0;  // N
    double period = 0.0;           // s
    Vec3 axis = {1.0, 0.0, 0.0};   // unit vector

    void validate() const;
    Vec3 velocity_at(double t) const;
    // Closed form: mu*F0*(t/2 + T_d/(4 pi) * sin(2 pi t / T_d)).
    Vec3 displacement(double T) const;
};

// Composite drift Phi(t) = u(t) + c_e E(t) [+ an optional raw drift trace,
// used for externally supplied realizations like the verification fixture].
struct DriftWaveform {
    std::optional<BackgroundFlow> flow;
    std::optional<PiecewiseConstantField> efield;  // V/m
    double mobility_const = 0.0;                   // c_e, m^2/(V*s)
    std::optional<PiecewiseConstantField> raw_drift;  // m/s

    Vec3 drift_at(double t) const;

    // Cumulative displacement integral of the drift over [0, T]; exact.
    Vec3 displacement(double T) const;

    // Time average of the drift over [0, T]; requires T > 0.
    Vec3 effective_drift(double T) const;

    bool is_zero() const { return !flow && !efield && !raw_drift; }
};

inline Vec3 cumulative_displacement(const DriftWaveform& w, double T) {
    if (T < 0.0) throw DriftError("cumulative displacement needs T >= 0");
    if (T == 0.0) return {};
    return w.displacement(T);
}

// Builds the scenario waveform: background flow from the config (along +x1,
// disabled when the force amplitude is zero) plus an optional field design.
DriftWaveform make_waveform(const ScenarioConfig& cfg,
                            std::optional<PiecewiseConstantField> efield = std::nullopt);

DriftWaveform zero_waveform();

// The published piecewise drift realization used for CIR verification:
// four 0.5 s segments per axis, held after 1.5 s (values in m/s).
DriftWaveform verification_drift_fixture();

}  // namespace famc
