#include <doctest.h>

#include <cmath>

#include "famc/analytic_cir.hpp"
#include "famc/particle_sim.hpp"

using namespace famc;

namespace {

DriftWaveform constant_drift(const Vec3& v) {
    DriftWaveform w;
    PiecewiseConstantField f;
    f.breakpoints = {0.0};
    f.values = {v};
    w.raw_drift = std::move(f);
    return w;
}

SimSettings quick(uint64_t n, double dt, double horizon, uint64_t seed = 1) {
    SimSettings s;
    s.particle_count = n;
    s.time_step = dt;
    s.horizon = horizon;
    s.seed = seed;
    s.histogram_bin = std::max(dt, 0.05);
    return s;
}

double capture_cdf(const ScenarioConfig& cfg, double t) {
    const double gap = cfg.tx_distance() - cfg.rx_radius;
    return cfg.rx_radius / cfg.tx_distance() *
           std::erfc(gap / std::sqrt(4.0 * cfg.diffusion * t));
}

double binom_se(double p, double n) { return std::sqrt(std::max(0.0, p * (1.0 - p)) / n); }

}  // namespace

TEST_CASE("settings validation") {
    SimSettings s = quick(1000, 1e-3, 1.0);
    CHECK_NOTHROW(s.validate());
    s.particle_count = 0;
    CHECK_THROWS_AS(s.validate(), SimError);
    s = quick(10, 2e-2, 1.0);  // dt > horizon/100
    CHECK_THROWS_AS(s.validate(), SimError);
    s = quick(10, 1e-3, 1.0);
    s.histogram_bin = 1e-4;  // finer than the step
    CHECK_THROWS_AS(s.validate(), SimError);
}

TEST_CASE("histograms are bit-identical across runs and worker counts") {
    const ScenarioConfig cfg = ScenarioConfig::defaults();
    const DriftWaveform w = verification_drift_fixture();
    SimSettings s = quick(9000, 1e-3, 0.4, 77);  // spans multiple chunks

    SimSettings s1 = s;
    s1.threads = 1;
    SimSettings s3 = s;
    s3.threads = 3;
    const HitHistogram a = simulate_absorbing(cfg, w, s1);
    const HitHistogram b = simulate_absorbing(cfg, w, s3);
    const HitHistogram c = simulate_absorbing(cfg, w, s);  // auto threads
    CHECK(a.total_hit_fraction == b.total_hit_fraction);
    CHECK(a.density == b.density);
    CHECK(a.density == c.density);
    CHECK(a.std_error == b.std_error);

    const auto ra = girsanov_reweighted_hit(cfg, w, s1);
    const auto rb = girsanov_reweighted_hit(cfg, w, s3);
    CHECK(ra.hist.density == rb.hist.density);
    CHECK(ra.weight.mean == rb.weight.mean);
}

TEST_CASE("zero-drift capture fraction matches the closed-form mass") {
    const ScenarioConfig cfg = ScenarioConfig::defaults();
    SimSettings s = quick(20000, 5e-4, 2.0, 11);
    const HitHistogram h = simulate_absorbing(cfg, zero_waveform(), s);
    const double expected = capture_cdf(cfg, 2.0);
    const double se = binom_se(expected, static_cast<double>(s.particle_count));
    CHECK(std::abs(h.total_hit_fraction - expected) < 3.0 * se);

    // Histogram mass equals the total fraction.
    double mass = 0.0;
    for (int b = 0; b < h.bins(); ++b)
        mass += h.density[static_cast<size_t>(b)] *
                (h.bin_edges[static_cast<size_t>(b) + 1] - h.bin_edges[static_cast<size_t>(b)]);
    CHECK(mass == doctest::Approx(h.total_hit_fraction).epsilon(1e-12));
}

TEST_CASE("hit fraction is non-decreasing in the horizon under a shared seed") {
    const ScenarioConfig cfg = ScenarioConfig::defaults();
    const HitHistogram h1 = simulate_absorbing(cfg, zero_waveform(), quick(4000, 1e-3, 0.5, 5));
    const HitHistogram h2 = simulate_absorbing(cfg, zero_waveform(), quick(4000, 1e-3, 1.0, 5));
    const HitHistogram h3 = simulate_absorbing(cfg, zero_waveform(), quick(4000, 1e-3, 2.0, 5));
    CHECK(h1.total_hit_fraction <= h2.total_hit_fraction);
    CHECK(h2.total_hit_fraction <= h3.total_hit_fraction);
}

TEST_CASE("outward drift shrinks the capture fraction") {
    const ScenarioConfig cfg = ScenarioConfig::defaults();
    const SimSettings s = quick(6000, 1e-3, 1.0, 9);
    const HitHistogram still = simulate_absorbing(cfg, zero_waveform(), s);
    const HitHistogram away =
        simulate_absorbing(cfg, constant_drift({-2e-4, 0.0, 0.0}), s);
    const double n = static_cast<double>(s.particle_count);
    const double se = std::sqrt(binom_se(still.total_hit_fraction, n) *
                                    binom_se(still.total_hit_fraction, n) +
                                binom_se(away.total_hit_fraction, n) *
                                    binom_se(away.total_hit_fraction, n));
    CHECK(away.total_hit_fraction < still.total_hit_fraction - 3.0 * se);
}

TEST_CASE("passive snapshot estimates") {
    const ScenarioConfig cfg = ScenarioConfig::defaults();

    SUBCASE("cloud released outside senses nothing immediately") {
        SimSettings s = quick(2000, 1e-5, 1e-3, 3);
        s.histogram_bin = 1e-5;
        const auto est = simulate_passive(cfg, zero_waveform(), {1e-4}, s);
        CHECK(est[0].probability == 0.0);
    }

    SUBCASE("zero drift at t_s matches the exact closed form within 3 std errors") {
        SimSettings s = quick(20000, 1e-3, 0.1, 13);
        s.histogram_bin = 1e-3;
        const auto est = simulate_passive(cfg, zero_waveform(), {0.1}, s);
        const double exact = pa_cir_exact(cfg, zero_waveform(), 0.1);
        CHECK(std::abs(est[0].probability - exact) < 3.0 * est[0].std_error + 1e-12);
        CHECK(est[0].std_error > 0.0);
    }

    SUBCASE("exactness holds across 20 waveform/time pairs") {
        const std::vector<DriftWaveform> waveforms = {
            verification_drift_fixture(), zero_waveform(),
            constant_drift({8e-5, -2e-5, 3e-5}), constant_drift({-5e-5, 0.0, 1e-4})};
        const std::vector<double> times = {0.05, 0.1, 0.5, 1.0, 2.0};
        int checked = 0;
        for (size_t wi = 0; wi < waveforms.size(); ++wi) {
            SimSettings s = quick(6000, 5e-4, 2.0, 100 + wi);
            const auto est = simulate_passive(cfg, waveforms[wi], times, s);
            for (const auto& e : est) {
                const double exact = pa_cir_exact(cfg, waveforms[wi], e.time);
                CHECK(std::abs(e.probability - exact) < 3.0 * e.std_error + 5e-4);
                ++checked;
            }
        }
        CHECK(checked == 20);
    }

    SUBCASE("sample time beyond the horizon is rejected") {
        SimSettings s = quick(100, 1e-3, 0.5, 1);
        CHECK_THROWS_AS(simulate_passive(cfg, zero_waveform(), {0.9}, s), SimError);
    }
}

TEST_CASE("reweighted estimator") {
    const ScenarioConfig cfg = ScenarioConfig::defaults();

    SUBCASE("zero drift reduces to the direct simulation bit for bit") {
        const SimSettings s = quick(3000, 1e-3, 0.6, 21);
        const HitHistogram direct = simulate_absorbing(cfg, zero_waveform(), s);
        const auto rw = girsanov_reweighted_hit(cfg, zero_waveform(), s);
        CHECK(direct.density == rw.hist.density);
        CHECK(direct.total_hit_fraction == rw.hist.total_hit_fraction);
        CHECK(rw.weight.mean == 1.0);
        CHECK(rw.weight.std_error == 0.0);
    }

    SUBCASE("constant drift agrees with direct simulation within 3 sigma per bin") {
        const DriftWaveform w = constant_drift({6e-5, 0.0, 2e-5});
        SimSettings sd = quick(20000, 5e-4, 1.0, 31);
        SimSettings sr = quick(20000, 5e-4, 1.0, 32);
        const HitHistogram direct = simulate_absorbing(cfg, w, sd);
        const auto rw = girsanov_reweighted_hit(cfg, w, sr, 0.5);
        for (int b = 0; b < direct.bins(); ++b) {
            const auto i = static_cast<size_t>(b);
            const double se =
                std::sqrt(direct.std_error[i] * direct.std_error[i] +
                          rw.hist.std_error[i] * rw.hist.std_error[i]);
            CHECK(std::abs(direct.density[i] - rw.hist.density[i]) <= 3.0 * se + 1e-9);
        }
        // Martingale check: mean weight over all paths is 1.
        CHECK(std::abs(rw.weight.mean - 1.0) <= 3.0 * rw.weight.std_error);
        CHECK(rw.weight.time == 0.5);
    }

    SUBCASE("far-field acceleration is for the direct path only") {
        SimSettings s = quick(100, 1e-3, 1.0, 1);
        s.far_field_acceleration = true;
        CHECK_THROWS_AS(girsanov_reweighted_hit(cfg, zero_waveform(), s), SimError);
    }
}

TEST_CASE("far-field acceleration reproduces the plain estimate") {
    const ScenarioConfig cfg = ScenarioConfig::defaults();
    SimSettings plain = quick(12000, 5e-4, 2.0, 41);
    SimSettings fast = plain;
    fast.seed = 42;
    fast.far_field_acceleration = true;
    const HitHistogram a = simulate_absorbing(cfg, zero_waveform(), plain);
    const HitHistogram b = simulate_absorbing(cfg, zero_waveform(), fast);
    const double n = static_cast<double>(plain.particle_count);
    const double se =
        std::sqrt(binom_se(a.total_hit_fraction, n) * binom_se(a.total_hit_fraction, n) +
                  binom_se(b.total_hit_fraction, n) * binom_se(b.total_hit_fraction, n));
    CHECK(std::abs(a.total_hit_fraction - b.total_hit_fraction) < 3.0 * se);
}

TEST_CASE("halving the step changes the capture fraction within combined errors") {
    const ScenarioConfig cfg = ScenarioConfig::defaults();
    const HitHistogram coarse =
        simulate_absorbing(cfg, zero_waveform(), quick(15000, 1e-3, 1.0, 51));
    const HitHistogram fine =
        simulate_absorbing(cfg, zero_waveform(), quick(15000, 5e-4, 1.0, 52));
    const double n = 15000;
    const double se = std::sqrt(binom_se(coarse.total_hit_fraction, n) *
                                    binom_se(coarse.total_hit_fraction, n) +
                                binom_se(fine.total_hit_fraction, n) *
                                    binom_se(fine.total_hit_fraction, n));
    CHECK(std::abs(coarse.total_hit_fraction - fine.total_hit_fraction) < 3.0 * se);
}
