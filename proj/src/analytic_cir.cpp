#include "famc/analytic_cir.hpp"

#include <cmath>
#include <stdexcept>

#include "famc/quadrature.hpp"

namespace famc {

namespace {
constexpr double kSqrtPi = 1.7724538509055160273;
constexpr double kSlotQuadTol = 1e-8;
constexpr double kSlotTimeFloor = 1e-6;  // s; below this the density underflows
}  // namespace

void CirTable::validate() const {
    if (slot_probs.empty()) throw std::invalid_argument("cir table has no slots");
    double sum = 0.0;
    for (double p : slot_probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("slot probability outside [0,1]");
        sum += p;
    }
    if (receiver == Receiver::kFullyAbsorbing && sum > 1.0 + 1e-6)
        throw std::invalid_argument("absorbing slot probabilities exceed total mass 1");
}

TiltWeight tilt_weight(const ScenarioConfig& cfg, const DriftWaveform& w, const Vec3& x,
                       double T) {
    if (!(T > 0.0)) throw std::invalid_argument("tilt weight needs T > 0");
    TiltWeight tw;
    tw.time = T;
    tw.endpoint = x;
    tw.effective_drift = w.effective_drift(T);
    const double two_d = 2.0 * cfg.diffusion;
    tw.log_weight = dot(tw.effective_drift, x - cfg.tx_position) / two_d -
                    norm_sq(tw.effective_drift) * T / (2.0 * two_d);
    return tw;
}

Vec3 peak_receiving_point(const ScenarioConfig& cfg) {
    return cfg.tx_position * (cfg.rx_radius / cfg.tx_distance());
}

double fht_zero_drift(const ScenarioConfig& cfg, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("hitting density needs t > 0");
    const double d0 = cfg.tx_distance();
    const double gap = d0 - cfg.rx_radius;
    const double four_dt = 4.0 * cfg.diffusion * t;
    const double arg = gap * gap / four_dt;
    if (arg > 700.0) return 0.0;
    return (cfg.rx_radius / d0) * gap / (kSqrtPi * std::sqrt(four_dt) * t) * std::exp(-arg);
}

double fa_cir_tilted(const ScenarioConfig& cfg, const DriftWaveform& w, double T) {
    const double f0 = fht_zero_drift(cfg, T);
    if (w.is_zero()) return f0;
    const TiltWeight tw = tilt_weight(cfg, w, peak_receiving_point(cfg), T);
    // Combine in log space: both factors can under/overflow separately while
    // the product stays representable.
    if (f0 <= 0.0) {
        const double d0 = cfg.tx_distance();
        const double gap = d0 - cfg.rx_radius;
        const double four_dt = 4.0 * cfg.diffusion * T;
        const double log_f0 = std::log(cfg.rx_radius / d0 * gap / (kSqrtPi * std::sqrt(four_dt) * T)) -
                              gap * gap / four_dt;
        const double log_val = log_f0 + tw.log_weight;
        return log_val < -700.0 ? 0.0 : std::exp(log_val);
    }
    return std::exp(tw.log_weight + std::log(f0));
}

double effective_separation(const ScenarioConfig& cfg, const DriftWaveform& w, double T) {
    // Cloud center after time T is x0 plus the cumulative drift displacement.
    return norm(cfg.tx_position + w.displacement(T));
}

double pa_cir_exact(const ScenarioConfig& cfg, const DriftWaveform& w, double T) {
    if (!(T > 0.0)) throw std::invalid_argument("sensing probability needs T > 0");
    const double r = cfg.rx_radius;
    const double dt4 = 4.0 * cfg.diffusion * T;
    const double s = std::sqrt(dt4);
    const double d_eff = effective_separation(cfg, w, T);

    if (d_eff < 1e-6 * r) {
        // Removable singularity at zero separation; analytic limit.
        const double x = r / s;
        return std::erf(x) - 2.0 * x / kSqrtPi * std::exp(-x * x);
    }

    const double a = (r - d_eff) / s;
    const double b = (r + d_eff) / s;
    const double bracket = 0.5 * (std::erfc(-a) - std::erfc(b));
    // exp(-a^2) - exp(-b^2) in paired form: the difference of exponents is
    // r*d_eff/(D T), which keeps the subtraction stable when both are ~1.
    const double expo = std::exp(-a * a) * (-std::expm1(-r * d_eff / (cfg.diffusion * T)));
    const double second = std::sqrt(cfg.diffusion * T) / (d_eff * kSqrtPi) * expo;
    double p = bracket - second;
    if (p < 0.0 && p > -1e-15) p = 0.0;  // round-off guard near zero
    return p;
}

namespace {

void append_field_knots(const PiecewiseConstantField& f, double lo, double hi,
                        std::vector<double>* knots) {
    if (f.extension == Extension::kPeriodic) {
        const double first = std::floor(lo / f.extent);
        const double last = std::ceil(hi / f.extent);
        for (double k = first; k < last; k += 1.0)
            for (double b : f.breakpoints)
                if (k * f.extent + b > lo && k * f.extent + b < hi)
                    knots->push_back(k * f.extent + b);
    } else {
        for (double b : f.breakpoints)
            if (b > lo && b < hi) knots->push_back(b);
        if (f.extension == Extension::kZero && f.extent > lo && f.extent < hi)
            knots->push_back(f.extent);
    }
}

// Slot window split at field discontinuities plus a geometric ladder, so
// adaptive refinement cannot overlook a hitting-density peak much narrower
// than the window (strong drift sweeps concentrate the mass early).
std::vector<double> slot_partition(const DriftWaveform& w, double lo, double hi) {
    std::vector<double> knots{lo, hi};
    if (w.efield) append_field_knots(*w.efield, lo, hi, &knots);
    if (w.raw_drift) append_field_knots(*w.raw_drift, lo, hi, &knots);
    const double ladder_lo = std::max(lo, 1e-4);
    if (hi / ladder_lo > 4.0) {
        const double ratio = hi / ladder_lo;
        for (int k = 1; k < 12; ++k) {
            const double t = ladder_lo * std::pow(ratio, k / 12.0);
            if (t > lo && t < hi) knots.push_back(t);
        }
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end(),
                            [](double a, double b) { return b - a < 1e-12; }),
                knots.end());
    return knots;
}

}  // namespace

CirTable slot_probabilities(const ScenarioConfig& cfg, const DriftWaveform& w,
                            Receiver receiver, int slots) {
    if (slots < 1) throw std::invalid_argument("slot count must be >= 1");
    CirTable table;
    table.receiver = receiver;
    table.method = CirMethod::kAnalytic;
    table.slot_probs.reserve(static_cast<size_t>(slots));
    const double tb = cfg.symbol_duration;
    for (int i = 1; i <= slots; ++i) {
        if (receiver == Receiver::kPassive) {
            table.slot_probs.push_back(pa_cir_exact(cfg, w, cfg.sample_time + (i - 1) * tb));
        } else {
            const double lo = std::max((i - 1) * tb, kSlotTimeFloor);
            const double hi = i * tb;
            const std::vector<double> parts = slot_partition(w, lo, hi);
            const double tol = kSlotQuadTol / static_cast<double>(parts.size() - 1);
            double p = 0.0;
            for (size_t k = 0; k + 1 < parts.size(); ++k) {
                p += integrate_adaptive([&](double t) { return fa_cir_tilted(cfg, w, t); },
                                        parts[k], parts[k + 1], tol);
            }
            table.slot_probs.push_back(std::max(0.0, p));
        }
    }
    table.validate();
    return table;
}

}  // namespace famc
