#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "levelarray/analysis.hpp"
#include "levelarray/level_array.hpp"

namespace levelarray {

// One-sided 99% normal quantile, for binomial upper-confidence bounds.
inline constexpr double kZ99 = 2.3263478740408408;

// Wilson score upper bound for a binomial proportion.
inline double binomial_upper_confidence(std::uint64_t successes,
                                        std::uint64_t trials,
                                        double z = kZ99) {
    if (trials == 0)
        return 1.0;
    const double n = (double)trials;
    const double p = (double)successes / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = p + z2 / (2.0 * n);
    const double spread =
        z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return (centre + spread) / denom;
}

struct RegularityResult {
    std::uint64_t n = 0;
    std::uint64_t probes_per_batch = 0;
    std::uint64_t standing_holders = 0;
    std::uint64_t samples = 0;
    // reach_counts[k]: probe operations that reached batch k (probed at
    // least one of its slots). Index batch_count holds the backup region.
    std::vector<std::uint64_t> reach_counts;
    std::vector<std::uint64_t> standing_occupancy; // per batch, the fill
    bool balanced_before = false;
    bool balanced_after = false;
    std::uint64_t total_probe_sum = 0;

    double reach_fraction(std::uint32_t k) const {
        return samples ? (double)reach_counts[k] / (double)samples : 0.0;
    }
    double reach_upper_confidence(std::uint32_t k, double z = kZ99) const {
        return binomial_upper_confidence(reach_counts[k], samples, z);
    }
};

namespace detail {

inline bool occupancy_balanced(const BatchLayout& layout,
                               const std::vector<std::uint64_t>& occupancy) {
    const auto limit = analysis::monitored_batch_limit(layout.capacity_n);
    if (!limit)
        return true;
    for (std::uint32_t j = 1; j <= *limit; ++j) {
        const auto threshold =
            analysis::overcrowd_threshold_int(layout.capacity_n, j);
        if (threshold && occupancy[j] >= *threshold)
            return false;
    }
    return true;
}

inline std::vector<std::uint64_t> occupancy_of(const LevelArray& array) {
    std::vector<std::uint64_t> occupancy(array.layout().batch_count + 1, 0);
    for (const Name name : array.collect()) {
        const std::uint32_t b = batch_of(array.layout(), name);
        ++occupancy[b == kBackupBatch ? array.layout().batch_count : b];
    }
    return occupancy;
}

} // namespace detail

// Measures the one-shot batch-reach distribution: a standing population of
// `standing_holders` names is acquired and kept (the array stays balanced;
// verified), then `samples` probe operations run get-then-free against that
// steady state, recording the highest batch each one touched.
inline RegularityResult run_regularity_experiment(std::uint64_t n,
                                                  std::uint64_t probes_per_batch,
                                                  std::uint64_t standing_holders,
                                                  std::uint64_t samples,
                                                  RngSpec rng_spec) {
    const BatchLayout layout = build_layout(n, probes_per_batch);
    if (standing_holders >= 3 * layout.capacity_n)
        throw ConfigError("standing population exceeds the name space");
    LevelArray array(layout);
    Rng rng(rng_spec);

    RegularityResult result;
    result.n = layout.capacity_n;
    result.probes_per_batch = probes_per_batch;
    result.standing_holders = standing_holders;
    result.samples = samples;
    result.reach_counts.assign(layout.batch_count + 1, 0);

    for (std::uint64_t i = 0; i < standing_holders; ++i)
        array.get(rng);
    result.standing_occupancy = detail::occupancy_of(array);
    result.balanced_before =
        detail::occupancy_balanced(layout, result.standing_occupancy);

    for (std::uint64_t i = 0; i < samples; ++i) {
        const Acquired got = array.get(rng);
        result.total_probe_sum += got.stats.probes;
        const std::uint32_t reached = got.stats.used_backup
                                          ? layout.batch_count
                                          : got.stats.batch_reached;
        for (std::uint32_t k = 0; k <= reached; ++k)
            ++result.reach_counts[k];
        array.free(got.name);
    }

    result.balanced_after =
        detail::occupancy_balanced(layout, detail::occupancy_of(array));
    return result;
}

} // namespace levelarray
