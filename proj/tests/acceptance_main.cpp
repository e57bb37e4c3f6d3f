// Acceptance battery: every release criterion evaluated end to end at its
// stated tolerance, one PASS/FAIL line each, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "famc/experiment.hpp"
#include "oracles.hpp"

using namespace famc;

namespace {

struct Outcome {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

std::vector<Outcome> g_outcomes;

class Timer {
public:
    Timer() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

void record(const std::string& name, bool pass, const std::string& detail, double seconds) {
    g_outcomes.push_back({name, pass, detail, seconds});
    std::printf("%s %-34s %s (%.1f s)\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str(),
                seconds);
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

DriftWaveform constant_drift(const Vec3& v) {
    DriftWaveform w;
    PiecewiseConstantField f;
    f.breakpoints = {0.0};
    f.values = {v};
    w.raw_drift = std::move(f);
    return w;
}

const SweepRow& find_row(const std::vector<SweepRow>& rows, double value,
                         const std::string& design) {
    for (const auto& r : rows)
        if (r.value == value && r.design == design) return r;
    throw std::runtime_error("missing sweep row " + design + " at " + fmt(value));
}

// Criteria 1, 3, 4 share one verification phase on the drift fixture.
void criteria_1_3_4(const ScenarioConfig& cfg) {
    const Timer timer;
    const VerifySettings vs;  // 1e5 particles, seed 1, 0.05 s bins over [0,2] s
    const VerifyReport rep = verify_cir(cfg, verification_drift_fixture(), vs, "");
    const double secs = timer.seconds();

    {
        std::ostringstream os;
        os << rep.pa_points_failed << "/" << vs.pa_sample_times.size()
           << " sample times beyond 3 std errors (exact sensing vs snapshot MC, N=1e5)";
        record("1 passive-exactness", rep.pa_pass, os.str(), secs);
    }
    {
        std::ostringstream os;
        os << rep.fa_bins_failed << "/40 bins beyond 3 sigma; weight mean "
           << fmt(rep.weight_mean) << " +/- " << fmt(rep.weight_std_error) << " at t=1 s";
        record("3 measure-change-consistency", rep.reweighted_pass && rep.weight_pass, os.str(),
               secs);
    }
    {
        std::ostringstream os;
        os << "L1 " << fmt(rep.tilt_l1) << " vs frozen bound " << fmt(rep.tilt_l1_bound)
           << "; corrupted control " << fmt(rep.corrupted_l1)
           << (rep.corruption_detected ? " flagged" : " NOT flagged");
        record("4 tilt-regression-bound", rep.tilt_pass && rep.corruption_detected, os.str(),
               secs);
    }
}

void criterion_2(const ScenarioConfig& cfg) {
    const Timer timer;
    SimSettings s;
    s.particle_count = 100000;
    s.time_step = 1e-4;
    s.horizon = 200.0;
    s.seed = 1;
    s.histogram_bin = 1.0;
    s.far_field_acceleration = true;
    const HitHistogram h = simulate_absorbing(cfg, zero_waveform(), s);

    const double gap = cfg.tx_distance() - cfg.rx_radius;
    const double capture = cfg.rx_radius / cfg.tx_distance();
    // The statistical reference is the horizon-limited analytic mass; the
    // residual tail beyond 200 s (~1% of the capture probability) is itself
    // larger than 3 standard errors at N=1e5.
    const double truncated =
        capture * std::erfc(gap / std::sqrt(4.0 * cfg.diffusion * s.horizon));
    const double se =
        std::sqrt(truncated * (1.0 - truncated) / static_cast<double>(s.particle_count));
    const bool mc_ok = std::abs(h.total_hit_fraction - truncated) <= 3.0 * se;

    auto integrand = [&](double u) {
        const double t = std::pow((1.0 - u) / u, 2.0);
        if (t <= 0.0) return 0.0;
        const double jac = 2.0 * (1.0 - u) / (u * u * u);
        return fht_zero_drift(cfg, t) * jac;
    };
    const double mass = oracles::simpson_panel(integrand, 1e-9, 1.0 - 1e-9, 200000);
    const bool mass_ok = std::abs(mass - capture) <= 1e-6;

    std::ostringstream os;
    os << "MC " << fmt(h.total_hit_fraction) << " vs analytic-mass(200 s) " << fmt(truncated)
       << " (3 se = " << fmt(3.0 * se) << "); density mass " << fmt(mass) << " vs "
       << fmt(capture) << " within 1e-6";
    record("2 zero-drift-capture", mc_ok && mass_ok, os.str(), timer.seconds());
}

void criterion_5(const ScenarioConfig& cfg) {
    const Timer timer;
    // (a) absorbing response non-decreasing over ten aligned drifts spanning
    // the gap-bridging speed; slack at the slot quadrature tolerance.
    const double bridge = (cfg.tx_distance() - cfg.rx_radius) / cfg.peak_time;
    bool monotone = true;
    double prev = -1.0;
    for (int k = 0; k <= 9; ++k) {
        const DriftWaveform w = constant_drift({bridge * k / 9.0, 0.0, 0.0});
        const double p1 =
            slot_probabilities(cfg, w, Receiver::kFullyAbsorbing, 1).p(1);
        if (p1 < prev - 3e-8) monotone = false;
        prev = p1;
    }
    // (b) passive response drops somewhere along an increasing sweep.
    bool decrease = false;
    double best = -1.0;
    double pair_a = 0.0, pair_b = 0.0;
    for (int k = 0; k <= 20; ++k) {
        const double v = 6e-4 * k / 20.0;
        const double p = pa_cir_exact(cfg, constant_drift({v, 0, 0}), cfg.sample_time);
        if (!decrease && p < best - 1e-15) {
            decrease = true;
            pair_b = v;
        }
        if (p >= best) {
            best = p;
            if (!decrease) pair_a = v;
        }
    }
    std::ostringstream os;
    os << "absorbing p1 non-decreasing over 10 drifts: " << (monotone ? "yes" : "no")
       << "; passive decrease pair v=" << fmt(pair_a) << " -> v=" << fmt(pair_b) << " m/s: "
       << (decrease ? "found" : "none");
    record("5 receiver-response-shapes", monotone && decrease, os.str(), timer.seconds());
}

void criterion_6() {
    const Timer timer;
    auto close = [](double a, double b) {
        return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    };
    const auto [s1_v1, s1_v2] = mrp({2.0, 1.0, 0.1, 0.4, 25.0});
    const auto [s2_v1, s2_v2] = mrp({100.0, 1.0, 0.1, 0.4, 25.0});
    const auto [s3_v1, s3_v2] = mrp({5.0, 1.0, 0.1, 0.4, 0.0});
    const bool ok = close(s1_v1, 2.0) && close(s1_v2, -std::sqrt(24.6 / 0.4)) &&
                    close(s2_v1, std::sqrt(250.0)) && s2_v2 == 0.0 && s3_v1 == 0.0 &&
                    s3_v2 == 0.0;
    std::ostringstream os;
    os << "(2, " << fmt(s1_v2) << "), (" << fmt(s2_v1) << ", 0), (0, 0) vs hand traces";
    record("6 allocator-branch-arithmetic", ok, os.str(), timer.seconds());
}

void criterion_7(const ScenarioConfig& cfg) {
    const Timer timer;
    const std::vector<double> grid = {0.0, 5.0, 10.0, 25.0, 50.0, 100.0, 200.0};

    SweepSpec fa;
    fa.receiver = Receiver::kFullyAbsorbing;
    fa.values = grid;
    ScenarioConfig fa_cfg = cfg;
    fa_cfg.particles_per_bit = 100;
    const auto fa_rows = run_sweep(fa, fa_cfg);

    SweepSpec pa;
    pa.receiver = Receiver::kPassive;
    pa.values = grid;
    ScenarioConfig pa_cfg = cfg;
    pa_cfg.particles_per_bit = 1000;
    const auto pa_rows = run_sweep(pa, pa_cfg);

    // (a) absorbing designed separation: non-decreasing and >= 0.7 at 200.
    bool a_monotone = true;
    double prev = -1.0;
    for (double xi : grid) {
        const auto& r = find_row(fa_rows, xi, "mhp-0.8");
        const double diff = r.p1 - r.p2;
        if (diff < prev - 3e-8) a_monotone = false;
        prev = diff;
    }
    const double a_final = [&] {
        const auto& r = find_row(fa_rows, 200.0, "mhp-0.8");
        return r.p1 - r.p2;
    }();
    const bool a_pass = a_monotone && a_final >= 0.7;
    {
        std::ostringstream os;
        os << "p1-p2 non-decreasing: " << (a_monotone ? "yes" : "no") << "; at xi=200: "
           << fmt(a_final) << " (need >= 0.7)";
        record("7a absorbing-separation-band", a_pass, os.str(), timer.seconds());
    }

    // (b) passive designed separation at 200 within [0.09, 0.13].
    const auto& pb = find_row(pa_rows, 200.0, "msp");
    const double b_diff = pb.p1 - pb.p2;
    const bool b_pass = b_diff >= 0.09 && b_diff <= 0.13;
    {
        std::ostringstream os;
        os << "msp p1-p2 at xi=200: " << fmt(b_diff) << " (need within [0.09, 0.13])";
        record("7b passive-separation-band", b_pass, os.str(), timer.seconds());
    }

    // (c) late suppression onset no worse than early for xi >= 50.
    bool c_pass = true;
    std::ostringstream c_os;
    for (double xi : grid) {
        if (xi < 50.0) continue;
        const double late = find_row(fa_rows, xi, "mhp-0.8").bep_analytic;
        const double early = find_row(fa_rows, xi, "mhp-0.5").bep_analytic;
        if (!(late <= early + 1e-18)) {
            c_pass = false;
            c_os << " xi=" << fmt(xi) << ": " << fmt(late) << " > " << fmt(early) << ";";
        }
    }
    record("7c late-suppression-dominance", c_pass,
           c_pass ? "bep(beta=0.8) <= bep(beta=0.5) for all xi >= 50"
                  : "violations:" + c_os.str(),
           timer.seconds());

    // (d) designed methods no worse than both baselines for xi >= 5.
    bool d_pass = true;
    std::ostringstream d_os;
    for (double xi : grid) {
        if (xi < 5.0) continue;
        const double mhp = find_row(fa_rows, xi, "mhp-0.8").bep_analytic;
        const double fa_none = find_row(fa_rows, xi, "none").bep_analytic;
        const double fa_und = find_row(fa_rows, xi, "undesign").bep_analytic;
        if (!(mhp <= fa_none && mhp <= fa_und)) {
            d_pass = false;
            d_os << " fa xi=" << fmt(xi) << " mhp " << fmt(mhp) << " vs none " << fmt(fa_none)
                 << " / undesign " << fmt(fa_und) << ";";
        }
        const double msp = find_row(pa_rows, xi, "msp").bep_analytic;
        const double pa_none = find_row(pa_rows, xi, "none").bep_analytic;
        const double pa_und = find_row(pa_rows, xi, "undesign").bep_analytic;
        if (!(msp <= pa_none && msp <= pa_und)) {
            d_pass = false;
            d_os << " pa xi=" << fmt(xi) << " msp " << fmt(msp) << " vs none " << fmt(pa_none)
                 << " / undesign " << fmt(pa_und) << ";";
        }
    }
    record("7d designed-beats-baselines", d_pass,
           d_pass ? "mhp-0.8 and msp at or below both baselines for all xi >= 5"
                  : "violations:" + d_os.str(),
           timer.seconds());
}

void criterion_8(const ScenarioConfig& cfg) {
    const Timer timer;
    ScenarioConfig point = cfg;
    point.particles_per_bit = 100;
    point.energy_budget = 25.0;
    const DriftWaveform w =
        design_waveform(point, {DesignKind::kMhp, 0.8}, Receiver::kFullyAbsorbing);
    const CirTable cir = slot_probabilities(point, w, Receiver::kFullyAbsorbing, 3);
    const BepResult analytic = bep(cir, point);
    const BepResult mc = bep_bitlevel_mc(cir, point, 100000, 1);
    const bool pass = analytic.per_slot.back() >= mc.mc_ci_low &&
                      analytic.per_slot.back() <= mc.mc_ci_high;
    std::ostringstream os;
    os << "analytic " << fmt(analytic.per_slot.back()) << " in Wilson [" << fmt(mc.mc_ci_low)
       << ", " << fmt(mc.mc_ci_high) << "] from " << mc.mc_errors << "/" << mc.mc_bits
       << " errors";
    record("8 gaussian-vs-binomial", pass, os.str(), timer.seconds());
}

void criterion_9(const ScenarioConfig& cfg) {
    namespace fs = std::filesystem;
    const Timer timer;
    SweepSpec spec;
    spec.receiver = Receiver::kFullyAbsorbing;
    spec.values = {0.0, 25.0};
    spec.designs = {{DesignKind::kNoDrift, 0.0}, {DesignKind::kMhp, 0.8}};
    spec.with_mc = true;
    spec.mc_particles = 20000;
    spec.mc_time_step = 1e-3;
    spec.mc_bits = 50000;
    spec.seed = 1;

    const fs::path base = fs::temp_directory_path() / "famc_acceptance_determinism";
    fs::remove_all(base);
    auto run_into = [&](unsigned threads, const char* sub) {
        SweepSpec s = spec;
        s.threads = threads;
        const auto rows = run_sweep(s, cfg);
        write_sweep_outputs(s, cfg, rows, (base / sub).string(), 0.0);
        std::ifstream in(base / sub / "sweep_xi_fa.csv");
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    };
    const std::string csv1 = run_into(1, "t1");
    const std::string csv2 = run_into(2, "t2");
    const std::string csv2_again = run_into(2, "t2_again");
    fs::remove_all(base);

    const bool pass = csv1 == csv2 && csv2 == csv2_again && !csv1.empty();
    std::ostringstream os;
    os << "csv bytes identical across 1 vs 2 workers and across reruns: "
       << (pass ? "yes" : "no");
    record("9 sweep-determinism", pass, os.str(), timer.seconds());
}

}  // namespace

int main() {
    const ScenarioConfig cfg = ScenarioConfig::defaults();
    std::printf("acceptance battery, %s\n", kVersion);

    criteria_1_3_4(cfg);
    criterion_2(cfg);
    criterion_5(cfg);
    criterion_6();
    criterion_7(cfg);
    criterion_8(cfg);
    criterion_9(cfg);

    int failures = 0;
    for (const auto& o : g_outcomes) failures += o.pass ? 0 : 1;
    std::printf("%d/%zu criteria passed\n", static_cast<int>(g_outcomes.size()) - failures,
                g_outcomes.size());
    return failures == 0 ? 0 : 1;
}
