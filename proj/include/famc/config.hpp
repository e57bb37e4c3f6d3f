#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "famc/vec3.hpp"

namespace famc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Full physical + link parameterization. All fields are SI base units
// (m, s, kg, K, V/m); the config file boundary accepts the conventional
// mixed units (geometry in um, diffusion in cm^2/s) and converts on load.
// Immutable after load; freely shareable across threads.
struct ScenarioConfig {
    double rx_radius = 0.0;        // m
    Vec3 tx_position;              // m, receiver centered at the origin
    double diffusion = 0.0;        // m^2/s
    double temperature = 0.0;      // K
    int valence = 0;               // ion valence z
    double mobility = 0.0;         // s/kg
    double flow_force = 0.0;       // N, peak background-flow force
    double flow_period = 0.0;      // s
    double symbol_duration = 0.0;  // s
    double sample_time = 0.0;      // s, passive receiver
    double peak_time = 0.0;        // s, absorbing receiver
    double particles_per_bit = 0;  // N
    double energy_budget = 0.0;    // V^2*s/m^2
    double suppression_onset = 0.0;  // beta in [0,1]
    int isi_memory = 3;            // L, slots
    double prior_one = 0.5;        // p(b_i = 1)

    // Derived: electrophoretic mobility constant c_e = mu * z * e, m^2/(V*s).
    double mobility_const = 0.0;

    // Config-file-unit snapshot of the fields whose conversion factor is not
    // exactly invertible in binary floating point; serialization echoes these
    // so load -> serialize -> load is bit-identical.
    struct FileUnits {
        double rx_radius_um = 0.0;
        double tx_position_um[3] = {0.0, 0.0, 0.0};
        double diffusion_cm2_per_s = 0.0;
    };
    FileUnits file_units;

    double tx_distance() const { return norm(tx_position); }

    // Scenario used throughout the evaluation campaign (absorbing-receiver
    // particle count; the passive runs use 1000 particles per bit instead).
    static ScenarioConfig defaults();
};

// Parses and validates a JSON scenario (see data/default_scenario.json for the
// schema). Throws ConfigError naming the violated constraint. Non-fatal
// consistency findings (mobility vs. Einstein relation) are appended to
// *warnings when provided.
ScenarioConfig load_scenario(const std::string& json_text,
                             std::vector<std::string>* warnings = nullptr);

ScenarioConfig load_scenario_file(const std::string& path,
                                  std::vector<std::string>* warnings = nullptr);

// Inverse of load_scenario: emits the documented schema with the same unit
// conventions, so load(serialize(cfg)) == cfg field-for-field.
std::string serialize_scenario(const ScenarioConfig& cfg);

// Invariant checks shared by load_scenario and programmatic construction.
void validate_scenario(const ScenarioConfig& cfg,
                       std::vector<std::string>* warnings = nullptr);

}  // namespace famc
