#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace famc {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// Chosen over std engines so that every particle owns an independent,
// cheaply-seekable stream keyed by (seed, stream id): parallel execution
// cannot reorder draws, which the determinism contract requires.
namespace philox {

inline constexpr uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr uint32_t kWeyl1 = 0xBB67AE85u;
inline constexpr uint32_t kMul0 = 0xD2511F53u;
inline constexpr uint32_t kMul1 = 0xCD9E8D57u;

inline std::array<uint32_t, 4> block(uint64_t key, const std::array<uint32_t, 4>& counter) {
    uint32_t c0 = counter[0], c1 = counter[1], c2 = counter[2], c3 = counter[3];
    uint32_t k0 = static_cast<uint32_t>(key);
    uint32_t k1 = static_cast<uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        const uint64_t p0 = static_cast<uint64_t>(kMul0) * c0;
        const uint64_t p1 = static_cast<uint64_t>(kMul1) * c2;
        const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
        const uint32_t lo0 = static_cast<uint32_t>(p0);
        const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
        const uint32_t lo1 = static_cast<uint32_t>(p1);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return {c0, c1, c2, c3};
}

}  // namespace philox

// One logical random stream: stream_id selects the particle (or bit, or
// grid point), the block counter advances as values are consumed.
// uniform() returns doubles in the open interval (0,1); gauss() returns
// standard normals via Box-Muller, two per uniform pair.
class RandomStream {
public:
    RandomStream(uint64_t seed, uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {}

    double uniform() {
        if (uniform_cache_count_ == 0) refill_uniforms();
        return uniform_cache_[--uniform_cache_count_];
    }

    double gauss() {
        if (gauss_cache_count_ == 0) refill_gauss();
        return gauss_cache_[--gauss_cache_count_];
    }

private:
    static double to_unit_open(uint32_t hi, uint32_t lo) {
        const uint64_t v = (static_cast<uint64_t>(hi) << 32) | lo;
        // 53 significant bits, offset by half an ulp: strictly inside (0,1).
        return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
    }

    std::array<uint32_t, 4> next_block() {
        const std::array<uint32_t, 4> ctr = {
            static_cast<uint32_t>(stream_id_),
            static_cast<uint32_t>(stream_id_ >> 32),
            static_cast<uint32_t>(block_index_),
            static_cast<uint32_t>(block_index_ >> 32)};
        ++block_index_;
        return philox::block(seed_, ctr);
    }

    void refill_uniforms() {
        const auto b = next_block();
        uniform_cache_[1] = to_unit_open(b[0], b[1]);
        uniform_cache_[0] = to_unit_open(b[2], b[3]);
        uniform_cache_count_ = 2;
    }

    void refill_gauss() {
        const auto b = next_block();
        const double u1 = to_unit_open(b[0], b[1]);
        const double u2 = to_unit_open(b[2], b[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        gauss_cache_[1] = r * std::cos(theta);
        gauss_cache_[0] = r * std::sin(theta);
        gauss_cache_count_ = 2;
    }

    uint64_t seed_;
    uint64_t stream_id_;
    uint64_t block_index_ = 0;
    double uniform_cache_[2] = {0.0, 0.0};
    double gauss_cache_[2] = {0.0, 0.0};
    int uniform_cache_count_ = 0;
    int gauss_cache_count_ = 0;
};

}  // namespace famc
