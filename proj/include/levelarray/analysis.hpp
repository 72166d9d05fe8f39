#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "levelarray/common.hpp"

namespace levelarray {

// Exact arithmetic for the balance machinery. Occupancy thresholds are sharp
// integer comparisons, so every bound here is an exact rational; floats
// appear only in reporting.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

namespace analysis {

// Batch indices above this are far outside any monitored range and their
// bounds would need gigabit denominators.
inline constexpr std::uint32_t kMaxBatchIndex = 64;

inline BigInt pow2(std::uint64_t e) { return BigInt(1) << e; }

// Batch-reach probability bound: 1 for batch 0, 1/2^(2^j + 5) for j >= 1.
inline Rational pi(std::uint32_t j) {
    if (j > kMaxBatchIndex)
        throw ConfigError("batch index too large for exact bounds");
    if (j == 0)
        return Rational(1);
    return Rational(BigInt(1), pow2((std::uint64_t{1} << j) + 5));
}

// Expected-headcount scale n_j = pi_j * n.
inline Rational n_j(std::uint64_t n, std::uint32_t j) {
    return pi(j) * Rational(n);
}

// Overcrowding threshold 16 * n_j. For j >= 1 this equals n / 2^(2^j + 1);
// for j = 0 it is 16n, which exceeds the batch size, so batch 0 can never
// be overcrowded.
inline Rational overcrowd_threshold(std::uint64_t n, std::uint32_t j) {
    if (!std::has_single_bit(n))
        throw ConfigError("threshold requires a power-of-two capacity");
    return Rational(16) * n_j(n, j);
}

// A threshold below one slot cannot be met and the batch is outside the
// monitored range.
inline bool threshold_vacuous(std::uint64_t n, std::uint32_t j) {
    return overcrowd_threshold(n, j) < 1;
}

// Integer form for the simulator's occupancy comparisons. Empty when the
// threshold is vacuous. Batch 0 reports its (unreachable) 16n threshold.
inline std::optional<std::uint64_t>
overcrowd_threshold_int(std::uint64_t n, std::uint32_t j) {
    const Rational t = overcrowd_threshold(n, j);
    if (t < 1)
        return std::nullopt;
    // 16 * pi(j) * n is a power of two times n, hence integral here.
    return (std::uint64_t)boost::multiprecision::numerator(t);
}

// Highest batch index the balance definitions cover: floor(log2 log2 n) - 1.
// Negative (empty) for n < 4; for n < 16 the range is just batch 0, where
// balance is vacuous.
inline std::optional<std::uint32_t> monitored_batch_limit(std::uint64_t n) {
    if (n < 4)
        return std::nullopt;
    const auto log2n = (std::uint32_t)std::bit_width(n) - 1;
    const auto loglog = (std::uint32_t)std::bit_width(log2n) - 1;
    if (loglog == 0)
        return std::nullopt;
    return loglog - 1;
}

// Probability that an operation fails every trial in batch 0 and therefore
// reaches batch 1: (2/3)^c0, valid whenever at most n - 1 of the 3n/2 slots
// are taken.
inline Rational batch0_fail_bound(std::uint64_t c0) {
    if (c0 == 0)
        throw ConfigError("probe count must be positive");
    return Rational(pow2(c0), boost::multiprecision::pow(BigInt(3), (unsigned)c0));
}

// Probability bound for reaching batch k, i.e. failing every trial in batch
// k-1 of a non-overcrowded array: (1/2)^(c_k (2^(k-1) - k + 1)) for k >= 2.
// k = 1 is the batch-0 case above.
inline Rational batch_fail_bound(std::uint32_t k, std::uint64_t c_k) {
    if (k == 0)
        throw ConfigError("batch_fail_bound needs k >= 1");
    if (k > kMaxBatchIndex)
        throw ConfigError("batch index too large for exact bounds");
    if (c_k == 0)
        throw ConfigError("probe count must be positive");
    if (k == 1)
        return batch0_fail_bound(c_k);
    const std::uint64_t exponent =
        c_k * ((std::uint64_t{1} << (k - 1)) - k + 1);
    return Rational(BigInt(1), pow2(exponent));
}

// True when the stated bound is at most pi(k), which the analysis needs from
// theory-mode probe counts (c >= 16; automatic for k >= 2, and the batch-0
// bound clears pi(1) = 1/128 as well).
inline bool fail_bound_meets_pi(std::uint32_t k, std::uint64_t c_k) {
    return batch_fail_bound(k, c_k) <= pi(k);
}

// Probability bound that a fixed process holds a name in batch j.
inline Rational hold_probability_bound(std::uint32_t j, std::uint64_t c_j) {
    return Rational(c_j) * pi(j);
}

// Smallest last-batch trial count the stopping argument accepts:
// ceil(2 (alpha + gamma + 1)).
inline std::uint64_t min_probe_count_for_whp(double alpha, double gamma) {
    if (alpha < 1 || gamma < 1)
        throw ConfigError("whp exponents require alpha >= 1 and gamma >= 1");
    return (std::uint64_t)std::ceil(2.0 * (alpha + gamma + 1.0));
}

// Tail constant from the concentration step; the analysis only pins it below
// 1/(45 * 2^5). Reported, never used as a sharp threshold.
inline Rational beta_upper_bound() { return Rational(1, 45 * 32); }

// mu = n^B log2 log2 n / 2^(beta sqrt n), as a double purely for reporting;
// at desk scales it exceeds 1 and carries no information.
inline double mu_estimate(std::uint64_t n, double B) {
    const double log2n = std::log2((double)n);
    const double loglog = std::log2(log2n);
    const double beta = 1.0 / 1440.0;
    const double log2mu =
        B * log2n + std::log2(loglog) - beta * std::sqrt((double)n);
    return std::exp2(log2mu);
}

inline std::string to_fraction_string(const Rational& r) {
    std::ostringstream out;
    out << r;
    return out.str();
}

struct BatchBounds {
    std::uint32_t j = 0;
    Rational pi_j;
    Rational n_j;
    Rational overcrowd_threshold;
    bool vacuous = false;
    std::uint64_t probe_count = 0;
    Rational hold_bound;
};

struct BoundConstants {
    std::uint64_t n = 0;
    std::vector<BatchBounds> batches; // up to and including the first vacuous j
    std::optional<std::uint32_t> monitored_limit;
    double alpha = 1.0;
    double gamma = 1.0;
    double B = 2.0;
    Rational beta;
    double mu = 0.0;
    std::uint64_t min_last_batch_probes = 0;
};

inline BoundConstants bound_constants(std::uint64_t n, std::uint64_t probes,
                                      double alpha = 1.0, double gamma = 1.0,
                                      double B = 2.0) {
    if (!std::has_single_bit(n) || n < 2)
        throw ConfigError("bounds require a power-of-two n >= 2");
    BoundConstants out;
    out.n = n;
    out.monitored_limit = monitored_batch_limit(n);
    out.alpha = alpha;
    out.gamma = gamma;
    out.B = B;
    out.beta = beta_upper_bound();
    out.mu = mu_estimate(n, B);
    out.min_last_batch_probes = min_probe_count_for_whp(alpha, gamma);

    const auto batch_count = (std::uint32_t)std::countr_zero(n);
    for (std::uint32_t j = 0; j < batch_count; ++j) {
        BatchBounds row;
        row.j = j;
        row.pi_j = pi(j);
        row.n_j = n_j(n, j);
        row.overcrowd_threshold = overcrowd_threshold(n, j);
        row.vacuous = threshold_vacuous(n, j);
        row.probe_count = probes;
        row.hold_bound = hold_probability_bound(j, probes);
        out.batches.push_back(std::move(row));
        if (out.batches.back().vacuous)
            break; // deeper thresholds only shrink further
    }
    return out;
}

} // namespace analysis
} // namespace levelarray
