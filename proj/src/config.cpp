#include "famc/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "famc/constants.hpp"

namespace famc {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

double require_number(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing key: ") + key);
    if (!j.at(key).is_number()) throw ConfigError(std::string("not a number: ") + key);
    return j.at(key).get<double>();
}

}  // namespace

ScenarioConfig ScenarioConfig::defaults() {
    static const char* kDefaultScenario = R"json({
      "schema_version": 1,
      "rx_radius_um": 10.0,
      "tx_position_um": [-30.0, 0.0, 0.0],
      "diffusion_cm2_per_s": 7.5e-6,
      "temperature_K": 300.0,
      "valence": 2,
      "mobility_s_per_kg": 1.77e11,
      "flow_force_N": 4.18e-15,
      "flow_period_s": 1.0,
      "symbol_duration_s": 2.0,
      "sample_time_s": 0.1,
      "peak_time_s": 0.1,
      "particles_per_bit": 100,
      "energy_budget_V2_s_per_m2": 25.0,
      "suppression_onset": 0.8,
      "isi_memory": 3,
      "prior_one": 0.5
    })json";
    return load_scenario(kDefaultScenario);
}

void validate_scenario(const ScenarioConfig& cfg, std::vector<std::string>* warnings) {
    auto fail = [](const std::string& what) { throw ConfigError("invalid scenario: " + what); };

    if (!(cfg.rx_radius > 0.0)) fail("rx_radius must be > 0");
    if (!(cfg.diffusion > 0.0)) fail("diffusion must be > 0");
    if (!(cfg.temperature > 0.0)) fail("temperature must be > 0");
    if (!(cfg.mobility > 0.0)) fail("mobility must be > 0");
    if (!(cfg.flow_period > 0.0)) fail("flow_period must be > 0");
    if (!(cfg.symbol_duration > 0.0)) fail("symbol_duration must be > 0");
    if (!(cfg.tx_distance() > cfg.rx_radius))
        fail("tx_position must lie strictly outside the receiver (||x0|| > rx_radius)");
    if (!(cfg.sample_time > 0.0 && cfg.sample_time <= cfg.symbol_duration))
        fail("sample_time must satisfy 0 < t_s <= symbol_duration");
    if (!(cfg.peak_time > 0.0 && cfg.peak_time <= cfg.symbol_duration))
        fail("peak_time must satisfy 0 < t_peak <= symbol_duration");
    if (!(cfg.suppression_onset >= 0.0 && cfg.suppression_onset <= 1.0))
        fail("suppression_onset must lie in [0,1]");
    if (!(cfg.energy_budget >= 0.0)) fail("energy_budget must be >= 0");
    if (!(cfg.isi_memory >= 1)) fail("isi_memory must be >= 1");
    if (!(cfg.prior_one > 0.0 && cfg.prior_one < 1.0)) fail("prior_one must lie in (0,1)");
    if (!(cfg.particles_per_bit >= 1)) fail("particles_per_bit must be >= 1");

    const double expected = cfg.mobility * cfg.valence * constants::elementary_charge;
    if (std::abs(cfg.mobility_const - expected) > 1e-9 * expected)
        fail("mobility_const must equal mobility * valence * elementary charge");

    // Einstein relation mu = D/(kB T): the supplied mobility is authoritative,
    // but a mismatch beyond 5% usually means a units slip in the config.
    if (warnings) {
        const double einstein = cfg.diffusion / (constants::boltzmann * cfg.temperature);
        const double rel = std::abs(cfg.mobility - einstein) / einstein;
        if (rel > 0.05) {
            std::ostringstream os;
            os << "mobility " << cfg.mobility << " s/kg deviates "
               << rel * 100.0 << "% from D/(kB*T) = " << einstein << " s/kg";
            warnings->push_back(os.str());
        }
    }
}

ScenarioConfig load_scenario(const std::string& json_text, std::vector<std::string>* warnings) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    if (!j.contains("schema_version")) throw ConfigError("missing key: schema_version");
    if (j.at("schema_version").get<int>() != kSchemaVersion)
        throw ConfigError("unsupported schema_version");

    ScenarioConfig cfg;
    cfg.file_units.rx_radius_um = require_number(j, "rx_radius_um");
    cfg.rx_radius = cfg.file_units.rx_radius_um * 1e-6;
    {
        const auto& p = j.at("tx_position_um");
        if (!p.is_array() || p.size() != 3) throw ConfigError("tx_position_um must be [x,y,z]");
        for (int i = 0; i < 3; ++i) cfg.file_units.tx_position_um[i] = p[i].get<double>();
        cfg.tx_position = {cfg.file_units.tx_position_um[0] * 1e-6,
                           cfg.file_units.tx_position_um[1] * 1e-6,
                           cfg.file_units.tx_position_um[2] * 1e-6};
    }
    cfg.file_units.diffusion_cm2_per_s = require_number(j, "diffusion_cm2_per_s");
    cfg.diffusion = cfg.file_units.diffusion_cm2_per_s * 1e-4;
    cfg.temperature = require_number(j, "temperature_K");
    cfg.valence = j.at("valence").get<int>();
    cfg.mobility = require_number(j, "mobility_s_per_kg");
    cfg.flow_force = require_number(j, "flow_force_N");
    cfg.flow_period = require_number(j, "flow_period_s");
    cfg.symbol_duration = require_number(j, "symbol_duration_s");
    cfg.sample_time = require_number(j, "sample_time_s");
    cfg.peak_time = require_number(j, "peak_time_s");
    cfg.particles_per_bit = require_number(j, "particles_per_bit");
    cfg.energy_budget = require_number(j, "energy_budget_V2_s_per_m2");
    cfg.suppression_onset = require_number(j, "suppression_onset");
    cfg.isi_memory = j.value("isi_memory", 3);
    cfg.prior_one = j.value("prior_one", 0.5);
    cfg.mobility_const = cfg.mobility * cfg.valence * constants::elementary_charge;

    validate_scenario(cfg, warnings);
    return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scenario(buf.str(), warnings);
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
    // Prefer the loaded file-unit values when they still describe the SI
    // fields; recompute only after programmatic mutation.
    auto echo = [](double file_value, double si_value, double to_si) {
        return std::abs(file_value * to_si - si_value) <= 1e-12 * std::abs(si_value)
                   ? file_value
                   : si_value / to_si;
    };
    json j;
    j["schema_version"] = kSchemaVersion;
    j["rx_radius_um"] = echo(cfg.file_units.rx_radius_um, cfg.rx_radius, 1e-6);
    j["tx_position_um"] = {echo(cfg.file_units.tx_position_um[0], cfg.tx_position.x, 1e-6),
                           echo(cfg.file_units.tx_position_um[1], cfg.tx_position.y, 1e-6),
                           echo(cfg.file_units.tx_position_um[2], cfg.tx_position.z, 1e-6)};
    j["diffusion_cm2_per_s"] =
        echo(cfg.file_units.diffusion_cm2_per_s, cfg.diffusion, 1e-4);
    j["temperature_K"] = cfg.temperature;
    j["valence"] = cfg.valence;
    j["mobility_s_per_kg"] = cfg.mobility;
    j["flow_force_N"] = cfg.flow_force;
    j["flow_period_s"] = cfg.flow_period;
    j["symbol_duration_s"] = cfg.symbol_duration;
    j["sample_time_s"] = cfg.sample_time;
    j["peak_time_s"] = cfg.peak_time;
    j["particles_per_bit"] = cfg.particles_per_bit;
    j["energy_budget_V2_s_per_m2"] = cfg.energy_budget;
    j["suppression_onset"] = cfg.suppression_onset;
    j["isi_memory"] = cfg.isi_memory;
    j["prior_one"] = cfg.prior_one;
    return j.dump(2);
}

}  // namespace famc
