#include "famc/detection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "famc/parallel.hpp"
#include "famc/rng.hpp"

namespace famc {

namespace {
constexpr int kMaxMemory = 16;  // enumeration guard: 2^(L-1) sequences
}

DetectionStats gaussian_stats(const CirTable& cir, const std::vector<uint8_t>& seq, double n) {
    if (static_cast<int>(seq.size()) > cir.slots() - 1)
        throw std::invalid_argument("ISI sequence longer than the CIR table covers");
    DetectionStats st;
    st.isi_sequence = seq;
    double mu0 = 0.0;
    double var0 = 0.0;
    for (size_t j = 0; j < seq.size(); ++j) {
        if (!seq[j]) continue;
        const double pk = cir.p(static_cast<int>(j) + 2);
        mu0 += n * pk;
        var0 += n * pk * (1.0 - pk);
    }
    const double p1 = cir.p(1);
    st.mu0 = mu0;
    st.mu1 = mu0 + n * p1;
    st.sigma0 = std::sqrt(var0);
    st.sigma1 = std::sqrt(var0 + n * p1 * (1.0 - p1));
    return st;
}

double map_threshold(double mu0, double mu1, double s0, double s1, double prior_one,
                     bool* fallback) {
    if (!(mu1 > mu0)) throw std::invalid_argument("map_threshold needs mu1 > mu0");
    if (!(s1 > 0.0)) throw std::invalid_argument("map_threshold needs sigma1 > 0");
    if (s0 > s1) throw std::invalid_argument("map_threshold needs sigma0 <= sigma1");
    if (!(prior_one > 0.0 && prior_one < 1.0))
        throw std::invalid_argument("prior must lie in (0,1)");
    if (fallback) *fallback = false;
    const double p0 = 1.0 - prior_one;

    if (s0 == 0.0) {
        // Limit of the crossing as s0 -> 0+: the H0 density collapses onto
        // mu0, so any threshold just above mu0 yields P_FA = 0 and maximal
        // P_D. Offset scaled to the problem so integer counts at mu0 decide 0.
        return mu0 + 1e-9 * (mu1 - mu0);
    }

    if (s0 == s1) {
        return 0.5 * (mu0 + mu1) + s0 * s0 * std::log(p0 / prior_one) / (mu1 - mu0);
    }

    // Crossing of p1 N(mu1,s1^2) and p0 N(mu0,s0^2): quadratic in y.
    const double a = 0.5 / (s0 * s0) - 0.5 / (s1 * s1);
    const double b = mu1 / (s1 * s1) - mu0 / (s0 * s0);
    const double c = 0.5 * mu0 * mu0 / (s0 * s0) - 0.5 * mu1 * mu1 / (s1 * s1) -
                     std::log(p0 * s1 / (prior_one * s0));
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        if (fallback) *fallback = true;
        return 0.5 * (mu0 + mu1);
    }
    const double sq = std::sqrt(disc);
    const double r1 = (-b - sq) / (2.0 * a);
    const double r2 = (-b + sq) / (2.0 * a);
    const double lo = std::min(r1, r2);
    const double hi = std::max(r1, r2);
    if (hi > mu0 && hi < mu1) return hi;
    if (lo > mu0 && lo < mu1) return lo;
    // No crossing inside (mu0, mu1): the upper root is the single point where
    // the likelihood ordering flips along increasing y.
    return hi;
}

void false_alarm_detection(DetectionStats* st) {
    if (st->sigma0 > 0.0) {
        st->p_fa = q_function((st->threshold - st->mu0) / st->sigma0);
    } else {
        st->p_fa = st->threshold <= st->mu0 ? 1.0 : 0.0;
    }
    st->p_d = q_function((st->threshold - st->mu1) / st->sigma1);
}

DetectionStats detect(const CirTable& cir, const std::vector<uint8_t>& seq, double n,
                      double prior_one, int slot_index) {
    DetectionStats st = gaussian_stats(cir, seq, n);
    st.slot_index = slot_index;
    st.threshold = map_threshold(st.mu0, st.mu1, st.sigma0, st.sigma1, prior_one,
                                 &st.threshold_fallback);
    false_alarm_detection(&st);
    return st;
}

BepResult bep(const CirTable& cir, const ScenarioConfig& cfg) {
    const int memory = cfg.isi_memory;
    if (memory > kMaxMemory) throw std::invalid_argument("ISI memory exceeds enumeration guard");
    if (cir.slots() < memory) throw std::invalid_argument("CIR table shorter than ISI memory");
    const double n = cfg.particles_per_bit;
    const double p1_prior = cfg.prior_one;
    const double p0_prior = 1.0 - p1_prior;

    BepResult res;
    res.method = BepMethod::kAnalytic;
    res.isi_free_pd = 1.0 - q_function(std::sqrt(n * cir.p(1)));

    for (int slot = 1; slot <= memory; ++slot) {
        const int bits = std::min(slot - 1, memory - 1);
        const uint32_t combos = 1u << bits;
        double pe = 0.0;
        double weight_sum = 0.0;
        for (uint32_t j = 0; j < combos; ++j) {
            std::vector<uint8_t> seq(static_cast<size_t>(bits));
            double weight = 1.0;
            for (int b = 0; b < bits; ++b) {
                seq[static_cast<size_t>(b)] = (j >> b) & 1u;
                weight *= seq[static_cast<size_t>(b)] ? p1_prior : p0_prior;
            }
            weight_sum += weight;
            if (n * cir.p(1) <= 0.0) {
                // Signal-free channel: always decide the prior-favored bit.
                pe += weight * std::min(p0_prior, p1_prior);
                continue;
            }
            const DetectionStats st = detect(cir, seq, n, p1_prior, slot);
            pe += weight * (p0_prior * st.p_fa + p1_prior * (1.0 - st.p_d));
        }
        // Enumeration completeness: the sequence priors form a distribution.
        if (std::abs(weight_sum - 1.0) > 1e-12)
            throw std::logic_error("ISI sequence weights do not sum to 1");
        res.per_slot.push_back(pe);
    }
    return res;
}

void wilson_interval(uint64_t errors, uint64_t total, double z, double* lo, double* hi) {
    if (total == 0) {
        *lo = 0.0;
        *hi = 1.0;
        return;
    }
    const double nd = static_cast<double>(total);
    const double p = static_cast<double>(errors) / nd;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nd;
    const double center = (p + z2 / (2.0 * nd)) / denom;
    const double rad = z * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd)) / denom;
    *lo = std::max(0.0, center - rad);
    *hi = std::min(1.0, center + rad);
}

BepResult bep_bitlevel_mc(const CirTable& cir, const ScenarioConfig& cfg, uint64_t bits,
                          uint64_t seed, unsigned threads) {
    if (bits < 10000) throw std::invalid_argument("bit-level oracle needs >= 1e4 bits");
    const int memory = cfg.isi_memory;
    if (cir.slots() < memory) throw std::invalid_argument("CIR table shorter than ISI memory");
    const auto n_particles = static_cast<uint64_t>(cfg.particles_per_bit);
    const double prior = cfg.prior_one;

    // Stateless per-index bit: the first uniform of stream i decides b_i, so
    // any worker can rebuild its neighbors' bits without shared state.
    auto bit_at = [&](uint64_t i) {
        RandomStream rng(seed, i);
        return rng.uniform() < prior;
    };

    struct Partial {
        uint64_t errors = 0;
        uint64_t count = 0;
    };

    Partial total;
    run_deterministic_chunks<Partial>(
        bits, threads,
        [&](uint64_t lo, uint64_t hi) {
            Partial part;
            for (uint64_t i = std::max<uint64_t>(lo, static_cast<uint64_t>(memory)); i < hi;
                 ++i) {
                RandomStream rng(seed, i);
                const bool b_i = rng.uniform() < prior;

                // Observed count: binomial signal plus one binomial per live
                // ISI emission (marginals of the per-emission split are
                // binomial, and distinct emissions are independent).
                uint64_t y = 0;
                if (b_i) {
                    const double p1 = cir.p(1);
                    for (uint64_t m = 0; m < n_particles; ++m)
                        if (rng.uniform() < p1) ++y;
                }
                std::vector<uint8_t> seq(static_cast<size_t>(memory - 1));
                for (int k = 1; k <= memory - 1; ++k) {
                    const bool b_prev = bit_at(i - static_cast<uint64_t>(k));
                    seq[static_cast<size_t>(k - 1)] = b_prev ? 1 : 0;
                    if (!b_prev) continue;
                    const double pk = cir.p(k + 1);
                    for (uint64_t m = 0; m < n_particles; ++m)
                        if (rng.uniform() < pk) ++y;
                }

                // Genie-aided feedback: threshold from the true history.
                bool decided_one;
                if (cfg.particles_per_bit * cir.p(1) <= 0.0) {
                    decided_one = prior > 0.5;
                } else {
                    const DetectionStats st =
                        detect(cir, seq, cfg.particles_per_bit, prior, static_cast<int>(i));
                    decided_one = static_cast<double>(y) > st.threshold;
                }
                part.errors += (decided_one != b_i) ? 1u : 0u;
                ++part.count;
            }
            return part;
        },
        [&](Partial&& part) {
            total.errors += part.errors;
            total.count += part.count;
        });

    BepResult res;
    res.method = BepMethod::kBitLevelMc;
    res.mc_bits = total.count;
    res.mc_errors = total.errors;
    res.per_slot = {total.count ? static_cast<double>(total.errors) /
                                      static_cast<double>(total.count)
                                : 0.0};
    res.isi_free_pd = 1.0 - q_function(std::sqrt(cfg.particles_per_bit * cir.p(1)));
    wilson_interval(total.errors, total.count, 3.0, &res.mc_ci_low, &res.mc_ci_high);
    return res;
}

}  // namespace famc
