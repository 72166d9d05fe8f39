#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <vector>

#include "levelarray/cells.hpp"
#include "levelarray/common.hpp"
#include "levelarray/layout.hpp"
#include "levelarray/rng.hpp"

namespace levelarray {

// One probe target: the cell to test-and-set and the batch it belongs to
// (kBackupBatch once the main array is exhausted).
struct ProbeTarget {
    std::uint64_t cell = 0;
    std::uint32_t batch = 0;
};

// Type-erased per-operation probe state. Each algorithm interprets the
// fields its own way; keeping it POD lets the simulator suspend and resume
// an acquire one shared-memory step at a time.
struct ProbeCursor {
    std::uint64_t pos = 0;  // trial within batch / attempt count / scan index
    std::uint64_t aux = 0;  // backup scan index / sweep index / start slot
    std::uint32_t batch = 0;
    bool flag = false;
};

struct Acquired {
    Name name = 0;
    ProbeStats stats;
};

namespace detail {

// Drives a probe plan to completion at full speed: one test-and-set per
// target until one wins. Shared by every algorithm's concurrent get().
template <class Algo>
Acquired run_probe_plan(Algo& algo, Rng& rng, HolderTag tag) {
    ProbeCursor cursor;
    ProbeStats stats;
    while (auto target = algo.next_probe_target(cursor, rng)) {
        ++stats.probes;
        stats.batch_reached = target->batch;
        if (target->batch == kBackupBatch)
            stats.used_backup = true;
        if (algo.cells().try_acquire(target->cell, tag)) {
            algo.note_get(stats);
            return Acquired{algo.name_of_cell(target->cell), stats};
        }
    }
    throw CapacityError("no free slot: concurrent holders exceed capacity");
}

} // namespace detail

// The level-structured activity array.
//
// Get walks the batches in increasing order, spending probe_count[i] uniform
// random test-and-set trials in batch i, and falls back to a left-to-right
// scan of the backup region if every main trial loses. Free resets the
// name's cell in one step. Collect reads every cell once, main region first.
//
// Safe for concurrent use by up to capacity_n callers. Get is wait-free with
// at most max_probe_steps() shared-memory steps; free and each probe are one
// step, so nothing blocks on other callers.
template <class Cells>
class BasicLevelArray {
  public:
    using CellStore = Cells;

    explicit BasicLevelArray(BatchLayout layout)
        : layout_(std::move(layout)), cells_(layout_.cell_count()) {}

    const BatchLayout& layout() const { return layout_; }
    Cells& cells() { return cells_; }
    const Cells& cells() const { return cells_; }

    // Draws each trial's randomness at the trial itself, which is what the
    // step-wise simulator replays.
    std::optional<ProbeTarget> next_probe_target(ProbeCursor& cursor,
                                                 Rng& rng) const {
        while (cursor.batch < layout_.batch_count) {
            if (cursor.pos < layout_.probe_count[cursor.batch]) {
                ++cursor.pos;
                const std::uint64_t cell =
                    layout_.batch_offset[cursor.batch] +
                    rng.next_below(layout_.batch_size[cursor.batch]);
                return ProbeTarget{cell, cursor.batch};
            }
            ++cursor.batch;
            cursor.pos = 0;
        }
        if (cursor.aux < layout_.backup_size) {
            const std::uint64_t cell = layout_.main_size + cursor.aux++;
            return ProbeTarget{cell, kBackupBatch};
        }
        return std::nullopt;
    }

    Acquired get(Rng& rng, HolderTag tag = kAnonymousTag) {
        return detail::run_probe_plan(*this, rng, tag);
    }

    // Production path: unconditional reset, unit cost.
    void free(Name name) { cells_.release(layout_.cell_of_name(name)); }

    // Checked path for debug builds and the simulator: detects double frees
    // and frees of names held by someone else.
    void free_checked(Name name, HolderTag tag) {
        if (!cells_.release_checked(layout_.cell_of_name(name), tag))
            throw MisuseError("free of name " + std::to_string(name) +
                              " not held with the caller's tag");
    }

    // Reads every cell once, left to right, main region then backup. Any
    // name returned was held by some caller at the instant its cell was
    // read (single atomic load per cell).
    std::vector<Name> collect() const {
        std::vector<Name> held;
        for (std::uint64_t cell = 0; cell < cells_.size(); ++cell) {
            if (cells_.load(cell) != kFreeTag)
                held.push_back(layout_.name_of_cell(cell));
        }
        return held;
    }

    std::vector<TaggedName> collect_tagged() const {
        std::vector<TaggedName> held;
        for (std::uint64_t cell = 0; cell < cells_.size(); ++cell) {
            const HolderTag tag = cells_.load(cell);
            if (tag != kFreeTag)
                held.push_back(TaggedName{layout_.name_of_cell(cell), tag});
        }
        return held;
    }

    Name name_of_cell(std::uint64_t cell) const {
        return layout_.name_of_cell(cell);
    }

    std::uint64_t total_gets() const {
        return total_gets_.load(std::memory_order_relaxed);
    }
    std::uint64_t backup_uses() const {
        return backup_uses_.load(std::memory_order_relaxed);
    }

    void note_get(const ProbeStats& stats) {
        total_gets_.fetch_add(1, std::memory_order_relaxed);
        if (stats.used_backup)
            backup_uses_.fetch_add(1, std::memory_order_relaxed);
    }

  private:
    BatchLayout layout_;
    Cells cells_;
    std::atomic<std::uint64_t> total_gets_{0};
    std::atomic<std::uint64_t> backup_uses_{0};
};

using LevelArray = BasicLevelArray<CellArray>;
using PaddedLevelArray = BasicLevelArray<PaddedCellArray>;

} // namespace levelarray
