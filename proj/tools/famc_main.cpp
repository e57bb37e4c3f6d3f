#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "famc/experiment.hpp"

namespace {

using namespace famc;

struct GlobalOpts {
    std::string config_path;
    uint64_t seed = 1;
    std::string out_dir = ".";
    unsigned threads = 0;
    bool with_mc = false;
};

ScenarioConfig load_or_die(const GlobalOpts& g) {
    std::vector<std::string> warnings;
    ScenarioConfig cfg = g.config_path.empty() ? ScenarioConfig::defaults()
                                               : load_scenario_file(g.config_path, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return cfg;
}

DriftWaveform waveform_from_flag(const ScenarioConfig& cfg, const std::string& spec) {
    if (spec == "zero") return zero_waveform();
    if (spec == "fig2") return verification_drift_fixture();
    if (spec == "flow") return make_waveform(cfg);
    if (spec.rfind("file:", 0) == 0) {
        DriftWaveform w;
        w.raw_drift = PiecewiseConstantField::from_csv(spec.substr(5));
        return w;
    }
    throw std::invalid_argument("unknown waveform: " + spec + " (use zero|fig2|flow|file:PATH)");
}

Receiver receiver_from_flag(const std::string& r) {
    if (r == "fa") return Receiver::kFullyAbsorbing;
    if (r == "pa") return Receiver::kPassive;
    throw std::invalid_argument("receiver must be fa or pa");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int cmd_simulate(const GlobalOpts& g, const std::string& receiver, const std::string& waveform,
                 uint64_t particles, double dt, double horizon, double bin, bool far_field,
                 const std::string& out) {
    const ScenarioConfig cfg = load_or_die(g);
    const DriftWaveform w = waveform_from_flag(cfg, waveform);
    SimSettings s;
    s.particle_count = particles;
    s.time_step = dt;
    s.horizon = horizon;
    s.seed = g.seed;
    s.histogram_bin = bin;
    s.threads = g.threads;
    s.far_field_acceleration = far_field;

    if (receiver_from_flag(receiver) == Receiver::kFullyAbsorbing) {
        const HitHistogram hist = simulate_absorbing(cfg, w, s);
        write_histogram_csv(hist, out, std::string(kVersion) + " seed " + std::to_string(g.seed));
        std::cout << "total_hit_fraction " << fmt(hist.total_hit_fraction) << '\n';
    } else {
        std::vector<double> times;
        for (double t = bin; t <= horizon + 1e-12; t += bin) times.push_back(t);
        const auto est = simulate_passive(cfg, w, times, s);
        std::ofstream fout(out);
        fout << "t_s,probability,std_error\n";
        for (const auto& e : est)
            fout << fmt(e.time) << ',' << fmt(e.probability) << ',' << fmt(e.std_error) << '\n';
    }
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_cir(const GlobalOpts& g, const std::string& receiver, const std::string& waveform,
            const std::string& out) {
    const ScenarioConfig cfg = load_or_die(g);
    const DriftWaveform w = waveform_from_flag(cfg, waveform);
    const Receiver rx = receiver_from_flag(receiver);

    std::ofstream fout(out);
    fout << "t_s,slot,value,method\n";
    const double horizon = cfg.isi_memory * cfg.symbol_duration;
    const int grid = 400;
    for (int i = 1; i <= grid; ++i) {
        const double t = horizon * i / grid;
        const double v = rx == Receiver::kFullyAbsorbing ? fa_cir_tilted(cfg, w, t)
                                                         : pa_cir_exact(cfg, w, t);
        fout << fmt(t) << ",," << fmt(v) << ",analytic\n";
    }
    const CirTable table = slot_probabilities(cfg, w, rx, cfg.isi_memory);
    for (int i = 1; i <= table.slots(); ++i)
        fout << ',' << i << ',' << fmt(table.p(i)) << ",analytic\n";
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_optimize(const GlobalOpts& g, const std::string& method, double beta,
                 const std::string& out) {
    ScenarioConfig cfg = load_or_die(g);
    FieldDesign d;
    if (method == "mhp") {
        cfg.suppression_onset = beta;
        d = mhp_design(cfg);
    } else if (method == "msp") {
        d = msp_design(cfg);
    } else {
        throw std::invalid_argument("method must be mhp or msp");
    }
    std::ofstream fout(out);
    fout << "v1_V_per_m,v2_V_per_m,t_p1_s,t_p2_s,energy_used,residual,saturated\n";
    fout << fmt(d.v1) << ',' << fmt(d.v2) << ',' << fmt(d.t_p1) << ',' << fmt(d.t_p2) << ','
         << fmt(d.energy_used) << ',' << fmt(d.residual) << ',' << (d.saturated ? 1 : 0)
         << '\n';
    std::cout << "v1 " << fmt(d.v1) << " V/m, v2 " << fmt(d.v2) << " V/m, energy "
              << fmt(d.energy_used) << " of " << fmt(cfg.energy_budget) << '\n';
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_bep(const GlobalOpts& g, const std::string& receiver, const std::string& design_name,
            double beta, uint64_t bits, const std::string& out) {
    const ScenarioConfig cfg = load_or_die(g);
    const Receiver rx = receiver_from_flag(receiver);
    DesignSpec design;
    design.beta = beta;
    if (design_name == "none") design.kind = DesignKind::kNoDrift;
    else if (design_name == "undesign") design.kind = DesignKind::kUndesign;
    else if (design_name == "mhp") design.kind = DesignKind::kMhp;
    else if (design_name == "msp") design.kind = DesignKind::kMsp;
    else throw std::invalid_argument("design must be none|undesign|mhp|msp");

    const DriftWaveform w = design_waveform(cfg, design, rx);
    const CirTable cir = slot_probabilities(cfg, w, rx, cfg.isi_memory);
    const BepResult analytic = bep(cir, cfg);

    std::ofstream fout(out);
    fout << "sweep_var,p1,p2,p1_minus_p2,bep_analytic,bep_mc,mc_ci_low,mc_ci_high\n";
    fout << fmt(cfg.energy_budget) << ',' << fmt(cir.p(1)) << ',' << fmt(cir.p(2)) << ','
         << fmt(cir.p(1) - cir.p(2)) << ',' << fmt(analytic.per_slot.back());
    if (g.with_mc) {
        const BepResult mc = bep_bitlevel_mc(cir, cfg, bits, g.seed, g.threads);
        fout << ',' << fmt(mc.per_slot.back()) << ',' << fmt(mc.mc_ci_low) << ','
             << fmt(mc.mc_ci_high) << '\n';
    } else {
        fout << ",,,\n";
    }
    std::cout << "bep " << fmt(analytic.per_slot.back()) << " (slot " << cfg.isi_memory
              << ", design " << design.name() << ")\n";
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_verify(const GlobalOpts& g, uint64_t particles) {
    const ScenarioConfig cfg = load_or_die(g);
    VerifySettings vs;
    vs.particles = particles;
    vs.seed = g.seed;
    vs.threads = g.threads;
    const VerifyReport rep = verify_cir(cfg, verification_drift_fixture(), vs, g.out_dir);

    auto line = [](const char* name, bool ok, const std::string& detail) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << " " << detail << '\n';
    };
    line("pa-exactness", rep.pa_pass,
         std::to_string(rep.pa_points_failed) + " points beyond 3 std errors");
    line("fa-reweighted-vs-direct", rep.reweighted_pass,
         std::to_string(rep.fa_bins_failed) + " bins beyond 3 sigma");
    line("girsanov-weight-mean", rep.weight_pass,
         "mean " + fmt(rep.weight_mean) + " se " + fmt(rep.weight_std_error));
    line("fa-tilt-l1-regression", rep.tilt_pass,
         "l1 " + fmt(rep.tilt_l1) + " bound " + fmt(rep.tilt_l1_bound));
    line("corruption-control", rep.corruption_detected,
         "corrupted l1 " + fmt(rep.corrupted_l1));
    return rep.all_pass() ? 0 : 1;
}

int cmd_sweep(const GlobalOpts& g, const std::string& receiver, const std::string& variable,
              std::vector<double> values, uint64_t mc_particles, uint64_t mc_bits,
              double mc_dt) {
    const ScenarioConfig cfg = load_or_die(g);
    SweepSpec spec;
    spec.receiver = receiver_from_flag(receiver);
    spec.variable = variable == "tb" ? SweepSpec::Variable::kTb : SweepSpec::Variable::kXi;
    if (!values.empty()) {
        spec.values = std::move(values);
    } else if (spec.variable == SweepSpec::Variable::kTb) {
        spec.values = {0.5, 1.0, 2.0, 4.0};
    }
    spec.seed = g.seed;
    spec.threads = g.threads;
    spec.with_mc = g.with_mc;
    spec.mc_particles = mc_particles;
    spec.mc_bits = mc_bits;
    spec.mc_time_step = mc_dt;

    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = run_sweep(spec, cfg);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string hash = write_sweep_outputs(spec, cfg, rows, g.out_dir, wall);
    int failures = 0;
    for (const auto& r : rows)
        if (!r.error.empty()) {
            ++failures;
            std::cerr << "point " << r.value << " " << r.design << ": " << r.error << '\n';
        }
    std::cout << "manifest " << hash << ", " << rows.size() << " grid points, " << failures
              << " failed, " << fmt(wall) << " s\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Field-assisted molecular communication: channel simulation, analytic CIRs, "
                 "detection analysis, and energy-constrained waveform design"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalOpts g;
    app.add_option("--config", g.config_path, "Scenario config JSON (defaults built in)");
    app.add_option("--seed", g.seed, "Base RNG seed");
    app.add_option("--out-dir", g.out_dir, "Output directory for multi-file commands");
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware)");
    app.add_flag("--with-mc", g.with_mc, "Add Monte Carlo confirmation columns");

    auto* sim = app.add_subcommand("simulate", "Particle Monte Carlo of one emission");
    std::string sim_rx = "fa", sim_wf = "fig2", sim_out = "hist.csv";
    uint64_t sim_n = 100000;
    double sim_dt = 1e-4, sim_horizon = 2.0, sim_bin = 0.05;
    bool sim_far = false;
    sim->add_option("--receiver", sim_rx, "fa|pa");
    sim->add_option("--waveform", sim_wf, "zero|fig2|flow|file:PATH");
    sim->add_option("--particles", sim_n);
    sim->add_option("--dt", sim_dt);
    sim->add_option("--horizon", sim_horizon);
    sim->add_option("--bin", sim_bin);
    sim->add_flag("--far-field", sim_far, "Adaptive far-field stepping (long horizons)");
    sim->add_option("--out", sim_out);

    auto* cir = app.add_subcommand("cir", "Analytic channel impulse response");
    std::string cir_rx = "fa", cir_wf = "fig2", cir_out = "cir.csv";
    cir->add_option("--receiver", cir_rx, "fa|pa");
    cir->add_option("--waveform", cir_wf, "zero|fig2|flow|file:PATH");
    cir->add_option("--out", cir_out);

    auto* opt = app.add_subcommand("optimize", "Two-phase field design");
    std::string opt_method = "mhp", opt_out = "design.csv";
    double opt_beta = 0.8;
    opt->add_option("--method", opt_method, "mhp|msp");
    opt->add_option("--beta", opt_beta, "Suppression onset fraction (mhp)");
    opt->add_option("--out", opt_out);

    auto* bepcmd = app.add_subcommand("bep", "Bit error probability for one design");
    std::string bep_rx = "fa", bep_design = "mhp", bep_out = "bep.csv";
    double bep_beta = 0.8;
    uint64_t bep_bits = 100000;
    bepcmd->add_option("--receiver", bep_rx, "fa|pa");
    bepcmd->add_option("--design", bep_design, "none|undesign|mhp|msp");
    bepcmd->add_option("--beta", bep_beta);
    bepcmd->add_option("--bits", bep_bits, "Bit-level MC length (--with-mc)");
    bepcmd->add_option("--out", bep_out);

    auto* verify = app.add_subcommand("verify", "Analytic-vs-simulation comparison battery");
    uint64_t verify_particles = 100000;
    verify->add_option("--particles", verify_particles);

    auto* sweep = app.add_subcommand("sweep", "Grid evaluation of designs");
    std::string sweep_rx = "fa", sweep_var = "xi";
    std::vector<double> sweep_values;
    uint64_t sweep_mc_particles = 100000, sweep_mc_bits = 100000;
    double sweep_mc_dt = 1e-3;
    sweep->add_option("--receiver", sweep_rx, "fa|pa");
    sweep->add_option("--variable", sweep_var, "xi|tb");
    sweep->add_option("--values", sweep_values, "Grid values (defaults per variable)");
    sweep->add_option("--mc-particles", sweep_mc_particles);
    sweep->add_option("--mc-bits", sweep_mc_bits);
    sweep->add_option("--mc-dt", sweep_mc_dt);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(g, sim_rx, sim_wf, sim_n, sim_dt, sim_horizon, sim_bin, sim_far,
                                sim_out);
        if (cir->parsed()) return cmd_cir(g, cir_rx, cir_wf, cir_out);
        if (opt->parsed()) return cmd_optimize(g, opt_method, opt_beta, opt_out);
        if (bepcmd->parsed()) return cmd_bep(g, bep_rx, bep_design, bep_beta, bep_bits, bep_out);
        if (verify->parsed()) return cmd_verify(g, verify_particles);
        if (sweep->parsed())
            return cmd_sweep(g, sweep_rx, sweep_var, sweep_values, sweep_mc_particles,
                             sweep_mc_bits, sweep_mc_dt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
