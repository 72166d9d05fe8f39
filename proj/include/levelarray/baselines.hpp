#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <vector>

#include "levelarray/cells.hpp"
#include "levelarray/common.hpp"
#include "levelarray/level_array.hpp"
#include "levelarray/rng.hpp"

namespace levelarray {

// Comparison algorithms over a flat array of slot_count cells, no batches.
// Names are the cell indices; uniqueness and collect validity follow from
// the same single-word cell protocol the level array uses.

enum class FlatProbeKind {
    Random,        // uniform trials until one wins
    LinearProbe,   // random start, then +1 with wraparound
    Deterministic, // scan from slot 0
};

template <class Cells>
class BasicFlatArray {
  public:
    using CellStore = Cells;

    BasicFlatArray(FlatProbeKind kind, std::uint64_t slot_count)
        : kind_(kind), slots_(slot_count), cells_(slot_count) {
        if (slot_count == 0)
            throw ConfigError("slot count must be positive");
    }

    FlatProbeKind kind() const { return kind_; }
    std::uint64_t slot_count() const { return slots_; }
    Cells& cells() { return cells_; }
    const Cells& cells() const { return cells_; }

    std::optional<ProbeTarget> next_probe_target(ProbeCursor& cursor,
                                                 Rng& rng) const {
        switch (kind_) {
        case FlatProbeKind::Random:
            // Random probing alone cannot recognize a full array, so after
            // enough losses fall back to one deterministic sweep; only if
            // the sweep also loses everywhere is capacity truly exhausted.
            if (!cursor.flag) {
                if (cursor.pos < kRandomSweepFactor * slots_) {
                    ++cursor.pos;
                    return ProbeTarget{rng.next_below(slots_), 0};
                }
                cursor.flag = true;
                cursor.aux = 0;
            }
            if (cursor.aux < slots_)
                return ProbeTarget{cursor.aux++, 0};
            return std::nullopt;
        case FlatProbeKind::LinearProbe:
            if (!cursor.flag) {
                cursor.flag = true;
                cursor.aux = rng.next_below(slots_);
            }
            if (cursor.pos < slots_) {
                const std::uint64_t cell = (cursor.aux + cursor.pos) % slots_;
                ++cursor.pos;
                return ProbeTarget{cell, 0};
            }
            return std::nullopt;
        case FlatProbeKind::Deterministic:
            if (cursor.pos < slots_)
                return ProbeTarget{cursor.pos++, 0};
            return std::nullopt;
        }
        return std::nullopt;
    }

    Acquired get(Rng& rng, HolderTag tag = kAnonymousTag) {
        return detail::run_probe_plan(*this, rng, tag);
    }

    void free(Name name) { cells_.release(cell_of_name(name)); }

    void free_checked(Name name, HolderTag tag) {
        if (!cells_.release_checked(cell_of_name(name), tag))
            throw MisuseError("free of name " + std::to_string(name) +
                              " not held with the caller's tag");
    }

    std::vector<Name> collect() const {
        std::vector<Name> held;
        for (std::uint64_t cell = 0; cell < slots_; ++cell) {
            if (cells_.load(cell) != kFreeTag)
                held.push_back(cell);
        }
        return held;
    }

    std::vector<TaggedName> collect_tagged() const {
        std::vector<TaggedName> held;
        for (std::uint64_t cell = 0; cell < slots_; ++cell) {
            const HolderTag tag = cells_.load(cell);
            if (tag != kFreeTag)
                held.push_back(TaggedName{cell, tag});
        }
        return held;
    }

    Name name_of_cell(std::uint64_t cell) const { return cell; }

    std::uint64_t cell_of_name(Name name) const {
        if (name >= slots_)
            throw InvalidNameError("name " + std::to_string(name) +
                                   " is out of range");
        return name;
    }

    std::uint64_t total_gets() const {
        return total_gets_.load(std::memory_order_relaxed);
    }

    void note_get(const ProbeStats&) {
        total_gets_.fetch_add(1, std::memory_order_relaxed);
    }

  private:
    static constexpr std::uint64_t kRandomSweepFactor = 4;

    FlatProbeKind kind_;
    std::uint64_t slots_;
    Cells cells_;
    std::atomic<std::uint64_t> total_gets_{0};
};

using FlatArray = BasicFlatArray<CellArray>;
using PaddedFlatArray = BasicFlatArray<PaddedCellArray>;

} // namespace levelarray
