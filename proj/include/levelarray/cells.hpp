#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <new>

#include "levelarray/common.hpp"

namespace levelarray {

// A cell is one machine word: kFreeTag when free, otherwise the holder's tag.
// Acquire is a single compare-and-swap from free, release a single store, so
// every operation is one shared-memory step.

struct PlainCell {
    std::atomic<HolderTag> word{kFreeTag};
};

// Cache-line padded variant; trades 8x memory for no false sharing.
struct alignas(64) PaddedCell {
    std::atomic<HolderTag> word{kFreeTag};
};

template <class Cell>
class CellArrayT {
  public:
    explicit CellArrayT(std::uint64_t count)
        : count_(count), cells_(std::make_unique<Cell[]>(count)) {}

    std::uint64_t size() const { return count_; }

    // Wins iff the cell transitions free -> tag. One step.
    bool try_acquire(std::uint64_t index, HolderTag tag) {
        HolderTag expected = kFreeTag;
        return cells_[index].word.compare_exchange_strong(
            expected, tag, std::memory_order_acq_rel,
            std::memory_order_relaxed);
    }

    // Unconditional reset; the production free path. One step.
    void release(std::uint64_t index) {
        cells_[index].word.store(kFreeTag, std::memory_order_release);
    }

    // Reset that verifies ownership; used by the debug ownership checker.
    bool release_checked(std::uint64_t index, HolderTag tag) {
        HolderTag expected = tag;
        return cells_[index].word.compare_exchange_strong(
            expected, kFreeTag, std::memory_order_acq_rel,
            std::memory_order_relaxed);
    }

    HolderTag load(std::uint64_t index) const {
        return cells_[index].word.load(std::memory_order_acquire);
    }

  private:
    std::uint64_t count_;
    std::unique_ptr<Cell[]> cells_;
};

using CellArray = CellArrayT<PlainCell>;
using PaddedCellArray = CellArrayT<PaddedCell>;

} // namespace levelarray
