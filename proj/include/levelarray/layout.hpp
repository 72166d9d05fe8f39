#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "levelarray/common.hpp"

namespace levelarray {

// Slot arithmetic for the batched main array plus its backup region.
//
// For capacity n (a power of two) the main array is split into
// batch_count = log2(n) contiguous batches: batch 0 takes floor(3n/2) slots
// and batch i, i >= 1, takes floor(n/2^{i+1}). The total stays <= 2n. The
// backup region holds exactly n more slots; backup names are encoded as
// 2n + backup index, so the name space is [0, 3n) with an unused gap
// [main_size, 2n).
struct BatchLayout {
    std::uint64_t capacity_n = 0;  // power of two, >= 2
    std::uint32_t batch_count = 0; // log2(capacity_n)
    std::vector<std::uint64_t> batch_offset;
    std::vector<std::uint64_t> batch_size;
    std::vector<std::uint64_t> probe_count;  // c[i], per batch
    std::vector<std::uint64_t> probe_prefix; // c-hat[j] = sum of c[b], b < j
    std::uint64_t main_size = 0;
    std::uint64_t backup_size = 0;

    std::uint64_t backup_name_base() const { return 2 * capacity_n; }
    std::uint64_t name_space_size() const { return 3 * capacity_n; }
    std::uint64_t cell_count() const { return main_size + backup_size; }

    // Upper bound on test-and-set steps per acquire: all main trials plus a
    // full backup scan.
    std::uint64_t max_probe_steps() const {
        return probe_prefix[batch_count] + backup_size;
    }

    bool is_backup_name(Name name) const { return name >= backup_name_base(); }

    // Cell index backing a name. Backup names live after the main region.
    std::uint64_t cell_of_name(Name name) const {
        if (name < main_size)
            return name;
        if (name >= backup_name_base() && name < name_space_size())
            return main_size + (name - backup_name_base());
        throw InvalidNameError("name " + std::to_string(name) +
                               " is not valid for capacity " +
                               std::to_string(capacity_n));
    }

    Name name_of_cell(std::uint64_t cell) const {
        if (cell < main_size)
            return cell;
        return backup_name_base() + (cell - main_size);
    }
};

inline std::uint64_t round_up_to_power_of_two(std::uint64_t n) {
    return std::bit_ceil(n);
}

// Builds the layout for a requested capacity, rounding non-powers of two up.
// probe_counts must contain one positive entry per batch; the uniform-count
// overload below covers the common case.
inline BatchLayout build_layout(std::uint64_t n,
                                const std::vector<std::uint64_t>& probe_counts) {
    if (n < 2)
        throw ConfigError("capacity must be at least 2");
    BatchLayout layout;
    layout.capacity_n = round_up_to_power_of_two(n);
    layout.batch_count =
        (std::uint32_t)std::countr_zero(layout.capacity_n); // log2, exact
    if (probe_counts.size() != layout.batch_count)
        throw ConfigError("need one probe count per batch (" +
                          std::to_string(layout.batch_count) + " batches)");

    const std::uint64_t cap = layout.capacity_n;
    std::uint64_t offset = 0;
    layout.batch_offset.reserve(layout.batch_count);
    layout.batch_size.reserve(layout.batch_count);
    for (std::uint32_t i = 0; i < layout.batch_count; ++i) {
        const std::uint64_t size = i == 0 ? 3 * cap / 2 : cap >> (i + 1);
        layout.batch_offset.push_back(offset);
        layout.batch_size.push_back(size);
        offset += size;
    }
    layout.main_size = offset;
    layout.backup_size = cap;

    layout.probe_count = probe_counts;
    layout.probe_prefix.assign(layout.batch_count + 1, 0);
    for (std::uint32_t i = 0; i < layout.batch_count; ++i) {
        if (probe_counts[i] == 0)
            throw ConfigError("probe count for batch " + std::to_string(i) +
                              " must be positive");
        layout.probe_prefix[i + 1] = layout.probe_prefix[i] + probe_counts[i];
    }
    return layout;
}

inline BatchLayout build_layout(std::uint64_t n, std::uint64_t uniform_probes) {
    if (n < 2)
        throw ConfigError("capacity must be at least 2");
    const std::uint64_t cap = round_up_to_power_of_two(n);
    const auto batches = (std::size_t)std::countr_zero(cap);
    return build_layout(
        n, std::vector<std::uint64_t>(batches, uniform_probes));
}

// Batch index owning a main-array name, or kBackupBatch for backup names.
inline std::uint32_t batch_of(const BatchLayout& layout, Name name) {
    if (layout.is_backup_name(name)) {
        if (name >= layout.name_space_size())
            throw InvalidNameError("name " + std::to_string(name) +
                                   " is out of range");
        return kBackupBatch;
    }
    if (name >= layout.main_size)
        throw InvalidNameError("name " + std::to_string(name) +
                               " falls in the unused gap");
    // Batch sizes shrink geometrically, so a linear scan beats binary search
    // for every practical batch count.
    for (std::uint32_t i = layout.batch_count; i-- > 0;) {
        if (name >= layout.batch_offset[i])
            return i;
    }
    return 0;
}

} // namespace levelarray
