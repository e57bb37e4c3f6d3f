#pragma once

#include <cmath>
#include <vector>

#include "famc/config.hpp"
#include "famc/drift.hpp"
#include "famc/vec3.hpp"

namespace famc {

enum class Receiver { kFullyAbsorbing, kPassive };

enum class CirMethod { kAnalytic, kMonteCarlo, kReweightedMc };

// Per-slot received probabilities p_R[1..L] for one emission at t = 0.
struct CirTable {
    Receiver receiver = Receiver::kFullyAbsorbing;
    CirMethod method = CirMethod::kAnalytic;
    std::vector<double> slot_probs;

    double p(int slot) const { return slot_probs.at(static_cast<size_t>(slot) - 1); }
    int slots() const { return static_cast<int>(slot_probs.size()); }
    void validate() const;
};

// Gaussian tail probability Q(x) = P(Z > x).
inline double q_function(double x) { return 0.5 * std::erfc(x * 0.7071067811865475244); }

// Girsanov reweighting factor under the time-averaged drift: the log of
//   exp( Phi_eff . (x - x0) / (2D) - |Phi_eff|^2 T / (4D) ).
struct TiltWeight {
    double log_weight = 0.0;
    Vec3 effective_drift;
    Vec3 endpoint;
    double time = 0.0;

    double weight() const { return std::exp(log_weight); }
};

TiltWeight tilt_weight(const ScenarioConfig& cfg, const DriftWaveform& w, const Vec3& x,
                       double T);

// Boundary point nearest the transmitter along the Tx-Rx axis.
Vec3 peak_receiving_point(const ScenarioConfig& cfg);

// Classical first-hitting density of pure diffusion onto an absorbing sphere:
//   f0(t) = (r/d0) * (d0-r) / sqrt(4 pi D t^3) * exp(-(d0-r)^2/(4 D t)).
double fht_zero_drift(const ScenarioConfig& cfg, double t);

// Hitting density under a drift waveform: exponential tilt at the peak
// receiving point applied to the zero-drift baseline. Approximate for the
// absorbing boundary (exact in the aligned-drift exponent structure); the
// reweighted Monte Carlo estimator is the reference where accuracy matters.
double fa_cir_tilted(const ScenarioConfig& cfg, const DriftWaveform& w, double T);

// Sensing probability of the passive sphere at time T. Exact for any
// spatially uniform drift: the displaced cloud stays Gaussian, so the
// volumetric integral has a closed form in the effective separation
// d0_eff = || x0 + T Phi_eff(T) || (receiver centered at the origin).
double pa_cir_exact(const ScenarioConfig& cfg, const DriftWaveform& w, double T);

// Effective Tx-Rx separation at time T under the waveform.
double effective_separation(const ScenarioConfig& cfg, const DriftWaveform& w, double T);

// Slot probabilities: absorbing = adaptive quadrature of the tilted density
// per slot window (absolute tolerance 1e-8, window floor 1e-6 s); passive =
// point evaluation at t_s + (i-1) T_b.
CirTable slot_probabilities(const ScenarioConfig& cfg, const DriftWaveform& w,
                            Receiver receiver, int slots);

}  // namespace famc
