#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "famc/analytic_cir.hpp"
#include "famc/config.hpp"
#include "famc/detection.hpp"
#include "famc/drift.hpp"
#include "famc/particle_sim.hpp"
#include "famc/waveform_opt.hpp"

namespace famc {

inline constexpr const char* kVersion = "famc 0.1.0";

// L1 distance between the tilted analytic hitting density and direct Monte
// Carlo on the verification fixture, recorded once at the default verify
// settings (1e5 particles, dt 2e-4 s, 0.05 s bins over [0,2] s, seed 1) and
// frozen as a regression bound; comparisons fail beyond +10%. The value is
// seed-locked: rerunning at other seeds moves it by the Monte Carlo noise.
inline constexpr double kFixtureTiltL1Recorded = 8.667427e-3;

enum class DesignKind { kNoDrift, kUndesign, kMhp, kMsp };

struct DesignSpec {
    DesignKind kind = DesignKind::kNoDrift;
    double beta = 0.8;  // suppression onset used by kMhp

    std::string name() const;
};

// Builds the scenario waveform for a design (background flow retained for
// every design; kNoDrift means field off).
DriftWaveform design_waveform(const ScenarioConfig& cfg, const DesignSpec& design,
                              Receiver receiver, FieldDesign* design_out = nullptr);

struct VerifySettings {
    uint64_t particles = 100000;
    double dt_absorbing = 2e-4;  // diffusive step ~0.55 um, well under the radius
    double dt_passive = 5e-4;
    double histogram_bin = 0.05;
    double horizon = 2.0;
    uint64_t seed = 1;
    unsigned threads = 0;
    std::vector<double> pa_sample_times = {0.05, 0.1, 0.5, 1.0, 1.5, 2.0};
};

struct VerifyReport {
    int pa_points_failed = 0;
    int fa_bins_failed = 0;
    double weight_mean = 0.0;
    double weight_std_error = 0.0;
    double tilt_l1 = 0.0;
    double tilt_l1_bound = 0.0;  // 1.10 * recorded
    double corrupted_l1 = 0.0;

    bool pa_pass = false;          // exact sensing vs MC, 3 std errors each point
    bool reweighted_pass = false;  // reweighted vs direct, 3 sigma per bin
    bool weight_pass = false;      // mean likelihood weight = 1 within 3 sigma
    bool tilt_pass = false;        // L1 within the frozen regression bound
    bool corruption_detected = false;  // 1.1x-corrupted analytic must fail

    bool all_pass() const {
        return pa_pass && reweighted_pass && weight_pass && tilt_pass && corruption_detected;
    }
};

// Runs the fixture-versus-simulation comparison battery; writes per-bin and
// per-point comparison CSVs into out_dir when non-empty.
VerifyReport verify_cir(const ScenarioConfig& cfg, const DriftWaveform& fixture,
                        const VerifySettings& vs, const std::string& out_dir = "");

struct SweepSpec {
    enum class Variable { kXi, kTb };
    Variable variable = Variable::kXi;
    std::vector<double> values = {0.0, 5.0, 10.0, 25.0, 50.0, 100.0, 200.0};
    std::vector<DesignSpec> designs;
    Receiver receiver = Receiver::kFullyAbsorbing;
    double xi_for_tb_sweep = 25.0;
    uint64_t seed = 1;
    unsigned threads = 0;
    bool with_mc = false;
    uint64_t mc_particles = 100000;
    double mc_time_step = 1e-3;
    uint64_t mc_bits = 100000;

    static std::vector<DesignSpec> default_designs(Receiver r);
};

struct SweepRow {
    double value = 0.0;
    std::string design;
    double p1 = 0.0;
    double p2 = 0.0;
    double bep_analytic = 0.0;
    bool has_mc = false;
    double p1_mc = 0.0;
    double p2_mc = 0.0;
    double bep_mc = 0.0;
    double bep_mc_ci_low = 0.0;
    double bep_mc_ci_high = 0.0;
    std::string error;  // per-point failure, sweep continues
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const ScenarioConfig& cfg);

// Writes the tidy sweep CSV plus manifest.json into out_dir; returns the
// manifest hash. Rows are written in grid order regardless of how they were
// computed, so identical manifests give byte-identical files.
std::string write_sweep_outputs(const SweepSpec& spec, const ScenarioConfig& cfg,
                                const std::vector<SweepRow>& rows,
                                const std::string& out_dir, double wall_seconds);

// Scenario+spec fingerprint carried in every output header.
std::string manifest_hash(const ScenarioConfig& cfg, const SweepSpec& spec);

// Slot probabilities out of simulation, for MC confirmation columns:
// absorbing = per-slot sums of the hit histogram, passive = occupancy at the
// per-slot sampling instants.
CirTable mc_slot_probabilities(const ScenarioConfig& cfg, const DriftWaveform& w,
                               Receiver receiver, int slots, uint64_t particles,
                               double time_step, uint64_t seed, unsigned threads);

void write_histogram_csv(const HitHistogram& hist, const std::string& path,
                         const std::string& header_comment);

}  // namespace famc
