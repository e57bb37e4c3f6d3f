#pragma once

#include <cstdint>
#include <vector>

#include "famc/analytic_cir.hpp"
#include "famc/config.hpp"

namespace famc {

// Gaussian count statistics for slot i conditioned on one candidate ISI
// sequence. mu1 = mu0 + N p_R[1]; sigma_k^2 = N p_R[k](1 - p_R[k]).
struct DetectionStats {
    int slot_index = 1;
    std::vector<uint8_t> isi_sequence;  // [0] = immediately preceding bit
    double mu0 = 0.0;
    double mu1 = 0.0;
    double sigma0 = 0.0;
    double sigma1 = 0.0;
    double threshold = 0.0;
    bool threshold_fallback = false;  // no real crossing; midpoint used
    double p_fa = 0.0;
    double p_d = 0.0;
};

enum class BepMethod { kAnalytic, kBitLevelMc };

struct BepResult {
    BepMethod method = BepMethod::kAnalytic;
    // Analytic: P_e for slots 1..L. Bit-level MC: one entry, the steady-state
    // error rate of slots with full ISI memory.
    std::vector<double> per_slot;
    double isi_free_pd = 0.0;  // 1 - Q(sqrt(N p_R[1]))
    uint64_t mc_bits = 0;
    uint64_t mc_errors = 0;
    double mc_ci_low = 0.0;  // Wilson, z = 3
    double mc_ci_high = 0.0;
};

// Conditional means/deviations for the given preceding-bit sequence.
// seq may be shorter than L-1; missing older bits count as zero.
DetectionStats gaussian_stats(const CirTable& cir, const std::vector<uint8_t>& seq, double n);

// MAP threshold between N(mu0, s0^2) and N(mu1, s1^2) with prior p(b=1).
// Equal variances give the classic shifted midpoint; unequal variances give
// the quadratic-crossing root inside (mu0, mu1) when it exists. s0 = 0 is
// the continuity limit of that crossing: gamma just above mu0, making the
// false-alarm probability exactly zero. *fallback reports the no-real-root
// case, where the midpoint is used.
double map_threshold(double mu0, double mu1, double s0, double s1, double prior_one,
                     bool* fallback = nullptr);

// Q-function pair for a computed threshold; s0 = 0 degenerates to the
// indicator P_FA = 1{gamma <= mu0}.
void false_alarm_detection(DetectionStats* stats);

// Fills a DetectionStats end to end for one sequence.
DetectionStats detect(const CirTable& cir, const std::vector<uint8_t>& seq, double n,
                      double prior_one, int slot_index = 0);

// Exact BEP by marginalizing the Gaussian MAP-DFE error over all
// 2^(min(i,L)-1) preceding sequences with i.i.d. priors, for i = 1..L.
BepResult bep(const CirTable& cir, const ScenarioConfig& cfg);

// Independent bit-level oracle: binomial particle counts (no Gaussian
// approximation), genie-aided decision feedback, empirical steady-state BEP
// with a Wilson interval at z = 3. Deterministic per (seed, bit index).
BepResult bep_bitlevel_mc(const CirTable& cir, const ScenarioConfig& cfg, uint64_t bits,
                          uint64_t seed, unsigned threads = 0);

// Wilson score interval for errors/total at z standard deviations.
void wilson_interval(uint64_t errors, uint64_t total, double z, double* lo, double* hi);

}  // namespace famc
