#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace sfda {

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel Random
// Numbers: As Easy as 1, 2, 3", SC'11). Multiplier and Weyl constants are the
// published ones. Every random decision in the project flows through keyed
// streams of this generator, so data, views and shuffles are reproducible
// bit-for-bit from a single seed.
struct Philox4x32 {
    static constexpr uint32_t kMul0 = 0xD2511F53u;
    static constexpr uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

    static std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const uint64_t p0 = static_cast<uint64_t>(kMul0) * ctr[0];
            const uint64_t p1 = static_cast<uint64_t>(kMul1) * ctr[2];
            ctr = {static_cast<uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<uint32_t>(p1),
                   static_cast<uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<uint32_t>(p0)};
        }
        return ctr;
    }
};

// SplitMix64 finalizer, used only to fold stream tags into a 64-bit stream id.
inline uint64_t mix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Named purposes for substreams. Tag values are part of the reproducibility
// contract: changing them changes every derived random sequence.
enum StreamTag : uint64_t {
    kTagGenSource = 1,
    kTagGenTarget = 2,
    kTagInit = 3,
    kTagShuffle = 4,
    kTagWeakView = 5,
    kTagStrongView = 6,
    kTagSelect = 7,
};

// Fold an ordered tag path into a stream id.
template <class... Tags>
uint64_t stream_id(Tags... tags) {
    uint64_t id = 0;
    ((id = mix64(id ^ static_cast<uint64_t>(tags))), ...);
    return id;
}

// One independent random stream: Philox keyed by (seed, stream id), counting
// blocks from zero. Streams with distinct (seed, id) pairs never overlap.
class RngStream {
public:
    RngStream(uint64_t seed, uint64_t id)
        : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
          id_lo_(static_cast<uint32_t>(id)), id_hi_(static_cast<uint32_t>(id >> 32)) {}

    template <class... Tags>
    RngStream(uint64_t seed, StreamTag tag, Tags... tags) : RngStream(seed, stream_id(tag, tags...)) {}

    uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    uint64_t next_u64() {
        const uint64_t lo = next_u32();
        const uint64_t hi = next_u32();
        return lo | (hi << 32);
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe as a log argument.
    double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Standard normal via Box-Muller; consumes exactly two 64-bit draws.
    double gaussian() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Uniform integer in [0, n) by 128-bit multiply-shift.
    uint64_t index(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    void refill() {
        buf_ = Philox4x32::block({static_cast<uint32_t>(counter_), static_cast<uint32_t>(counter_ >> 32), id_lo_, id_hi_}, key_);
        ++counter_;
        pos_ = 0;
    }

    std::array<uint32_t, 2> key_;
    uint32_t id_lo_, id_hi_;
    uint64_t counter_ = 0;
    std::array<uint32_t, 4> buf_{};
    int pos_ = 4;
};

// FNV-1a 64-bit, used for dataset/spec hashes in run manifests.
inline uint64_t fnv1a64(std::span<const char> bytes) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

} // namespace sfda
