#pragma once

#include <cstdint>
#include <string>

#include "levelarray/common.hpp"

namespace levelarray {

enum class RngKind { LehmerParkMiller, MarsagliaXorshift };

inline const char* to_string(RngKind kind) {
    return kind == RngKind::LehmerParkMiller ? "lehmer" : "marsaglia";
}

inline RngKind rng_kind_from_string(const std::string& s) {
    if (s == "lehmer" || s == "park-miller" || s == "lehmer-park-miller")
        return RngKind::LehmerParkMiller;
    if (s == "marsaglia" || s == "xorshift" || s == "marsaglia-xorshift")
        return RngKind::MarsagliaXorshift;
    throw ConfigError("unknown rng kind: " + s);
}

struct RngSpec {
    RngKind kind = RngKind::LehmerParkMiller;
    std::uint64_t seed = 1;

    bool operator==(const RngSpec&) const = default;
};

namespace detail {

// One scramble round (the splitmix64 finalizer). Used to derive per-caller
// streams from a master seed; documented as part of the splitting rule.
inline std::uint64_t scramble64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

// Minimal-standard Lehmer generator: state' = state * 48271 mod (2^31 - 1).
class LehmerRng {
  public:
    static constexpr std::uint64_t kModulus = 2147483647ull; // 2^31 - 1
    static constexpr std::uint64_t kMultiplier = 48271ull;

    explicit LehmerRng(std::uint64_t seed) {
        state_ = seed % kModulus;
        if (state_ == 0)
            state_ = 1; // the zero state is absorbing
    }

    // Uniform over [1, kModulus - 1] at full period.
    std::uint64_t next_raw() {
        state_ = (state_ * kMultiplier) % kModulus;
        return state_;
    }

    // Number of equally likely raw outputs.
    static constexpr std::uint64_t raw_range() { return kModulus - 1; }

    // Raw output shifted to [0, raw_range()).
    std::uint64_t next_zero_based() { return next_raw() - 1; }

  private:
    std::uint64_t state_;
};

// Marsaglia xorshift64 (shifts 13, 7, 17). Never visits zero.
class XorshiftRng {
  public:
    explicit XorshiftRng(std::uint64_t seed)
        : state_(seed ? seed : 0x9E3779B97F4A7C15ull) {}

    std::uint64_t next_raw() {
        state_ ^= state_ << 13;
        state_ ^= state_ >> 7;
        state_ ^= state_ << 17;
        return state_;
    }

    static constexpr std::uint64_t raw_range() {
        return ~std::uint64_t{0}; // 2^64 - 1 nonzero states
    }

    std::uint64_t next_zero_based() { return next_raw() - 1; }

  private:
    std::uint64_t state_;
};

// A seedable stream of one of the supported kinds. Single-owner: streams are
// never shared between threads; derive one per caller instead.
class Rng {
  public:
    explicit Rng(RngSpec spec) : spec_(spec), lehmer_(0), xorshift_(0) {
        if (spec.seed == 0)
            throw ConfigError("rng seed must be nonzero");
        if (spec.kind == RngKind::LehmerParkMiller)
            lehmer_ = LehmerRng(spec.seed);
        else
            xorshift_ = XorshiftRng(spec.seed);
    }

    const RngSpec& spec() const { return spec_; }

    // Uniform over [lo, hi], both inclusive. Rejection sampling; no modulo
    // bias. Wide spans are composed from two draws.
    std::uint64_t next_in_range(std::uint64_t lo, std::uint64_t hi) {
        if (lo > hi)
            throw ConfigError("next_in_range: lo > hi");
        const std::uint64_t span = hi - lo + 1; // 0 means the full 2^64 span
        return lo + next_below(span);
    }

    // Uniform over [0, span). span == 0 requests the full 64-bit range.
    std::uint64_t next_below(std::uint64_t span) {
        if (span == 1)
            return 0;
        if (spec_.kind == RngKind::LehmerParkMiller)
            return draw_below(lehmer_, span);
        return draw_below(xorshift_, span);
    }

  private:
    template <class Gen>
    std::uint64_t draw_below(Gen& gen, std::uint64_t span) {
        const std::uint64_t range = Gen::raw_range();
        if (span == 0 || span > range) {
            // Compose two draws; range^2 >= 2^61 covers every span we use,
            // and overflow-free rejection keeps the result exact.
            const unsigned __int128 wide_range =
                (unsigned __int128)range * range;
            const unsigned __int128 wide_span =
                span == 0 ? ((unsigned __int128)1 << 64) : span;
            if (wide_span > wide_range)
                throw ConfigError("next_in_range: span too wide for generator");
            const unsigned __int128 limit =
                wide_range - wide_range % wide_span;
            for (;;) {
                const unsigned __int128 u =
                    (unsigned __int128)gen.next_zero_based() * range +
                    gen.next_zero_based();
                if (u < limit)
                    return (std::uint64_t)(u % wide_span);
            }
        }
        const std::uint64_t limit = range - range % span;
        for (;;) {
            const std::uint64_t u = gen.next_zero_based();
            if (u < limit)
                return u % span;
        }
    }

    RngSpec spec_;
    LehmerRng lehmer_;
    XorshiftRng xorshift_;
};

// Splitting rule: master seed XOR caller index, through one scramble round.
// Guaranteed nonzero so the derived spec stays valid for both kinds.
inline RngSpec split_stream(const RngSpec& master, std::uint64_t caller_index) {
    std::uint64_t derived = detail::scramble64(master.seed ^ caller_index);
    if (derived == 0)
        derived = 0x9E3779B97F4A7C15ull;
    return RngSpec{master.kind, derived};
}

inline Rng make_stream(const RngSpec& master, std::uint64_t caller_index) {
    return Rng(split_stream(master, caller_index));
}

} // namespace levelarray
