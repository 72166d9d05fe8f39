#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "levelarray/baselines.hpp"
#include "levelarray/common.hpp"
#include "levelarray/level_array.hpp"
#include "levelarray/rng.hpp"

namespace levelarray {

enum class AlgoKind { Level, Random, Linear, Deterministic };

inline const char* to_string(AlgoKind kind) {
    switch (kind) {
    case AlgoKind::Level: return "level";
    case AlgoKind::Random: return "random";
    case AlgoKind::Linear: return "linear";
    case AlgoKind::Deterministic: return "det";
    }
    return "?";
}

inline AlgoKind algo_kind_from_string(const std::string& s) {
    if (s == "level") return AlgoKind::Level;
    if (s == "random") return AlgoKind::Random;
    if (s == "linear") return AlgoKind::Linear;
    if (s == "det" || s == "deterministic") return AlgoKind::Deterministic;
    throw ConfigError("unknown algorithm: " + s);
}

// Runtime view of a renaming algorithm. The virtual dispatch sits at
// operation granularity (the probe loop inside get() is not virtual); the
// per-probe entry points exist for the simulator, which is single-threaded.
class Renamer {
  public:
    virtual ~Renamer() = default;

    virtual AlgoKind algo() const = 0;
    virtual std::uint64_t cell_count() const = 0;

    // Null for the flat baselines; they have no batch structure.
    virtual const BatchLayout* batch_layout() const = 0;

    virtual Acquired get(Rng& rng, HolderTag tag) = 0;
    virtual void free(Name name) = 0;
    virtual void free_checked(Name name, HolderTag tag) = 0;
    virtual std::vector<Name> collect() const = 0;
    virtual std::vector<TaggedName> collect_tagged() const = 0;

    // Step-wise path: plan one probe, attempt it, read one cell.
    virtual std::optional<ProbeTarget> next_probe_target(ProbeCursor& cursor,
                                                         Rng& rng) const = 0;
    virtual bool try_acquire_cell(std::uint64_t cell, HolderTag tag) = 0;
    virtual void release_cell(std::uint64_t cell) = 0;
    virtual HolderTag load_cell(std::uint64_t cell) const = 0;
    virtual Name name_of_cell(std::uint64_t cell) const = 0;
    virtual std::uint64_t cell_of_name(Name name) const = 0;

    virtual std::uint64_t total_gets() const = 0;
    virtual std::uint64_t backup_uses() const = 0;
};

namespace detail {

template <class Impl>
class RenamerAdapter final : public Renamer {
  public:
    template <class... Args>
    explicit RenamerAdapter(AlgoKind kind, Args&&... args)
        : kind_(kind), impl_(std::forward<Args>(args)...) {}

    Impl& impl() { return impl_; }

    AlgoKind algo() const override { return kind_; }
    std::uint64_t cell_count() const override { return impl_.cells().size(); }

    const BatchLayout* batch_layout() const override {
        if constexpr (requires { impl_.layout(); })
            return &impl_.layout();
        else
            return nullptr;
    }

    Acquired get(Rng& rng, HolderTag tag) override {
        return impl_.get(rng, tag);
    }
    void free(Name name) override { impl_.free(name); }
    void free_checked(Name name, HolderTag tag) override {
        impl_.free_checked(name, tag);
    }
    std::vector<Name> collect() const override { return impl_.collect(); }
    std::vector<TaggedName> collect_tagged() const override {
        return impl_.collect_tagged();
    }

    std::optional<ProbeTarget> next_probe_target(ProbeCursor& cursor,
                                                 Rng& rng) const override {
        return impl_.next_probe_target(cursor, rng);
    }
    bool try_acquire_cell(std::uint64_t cell, HolderTag tag) override {
        return impl_.cells().try_acquire(cell, tag);
    }
    void release_cell(std::uint64_t cell) override {
        impl_.cells().release(cell);
    }
    HolderTag load_cell(std::uint64_t cell) const override {
        return impl_.cells().load(cell);
    }
    Name name_of_cell(std::uint64_t cell) const override {
        return impl_.name_of_cell(cell);
    }
    std::uint64_t cell_of_name(Name name) const override {
        if constexpr (requires { impl_.cell_of_name(name); })
            return impl_.cell_of_name(name);
        else
            return impl_.layout().cell_of_name(name);
    }

    std::uint64_t total_gets() const override { return impl_.total_gets(); }
    std::uint64_t backup_uses() const override {
        if constexpr (requires { impl_.backup_uses(); })
            return impl_.backup_uses();
        else
            return 0;
    }

  private:
    AlgoKind kind_;
    Impl impl_;
};

} // namespace detail

struct RenamerConfig {
    AlgoKind algo = AlgoKind::Level;
    // Level: requested capacity (rounded up to a power of two).
    // Baselines: exact flat slot count L.
    std::uint64_t size = 0;
    // Level only: per-batch trial count, uniform.
    std::uint64_t probes_per_batch = 1;
    bool padded_cells = false;
};

inline std::unique_ptr<Renamer> make_renamer(const RenamerConfig& config) {
    if (config.size < 2)
        throw ConfigError("renamer size must be at least 2");
    if (config.algo == AlgoKind::Level) {
        auto layout = build_layout(config.size, config.probes_per_batch);
        if (config.padded_cells)
            return std::make_unique<detail::RenamerAdapter<PaddedLevelArray>>(
                AlgoKind::Level, std::move(layout));
        return std::make_unique<detail::RenamerAdapter<LevelArray>>(
            AlgoKind::Level, std::move(layout));
    }
    const FlatProbeKind kind =
        config.algo == AlgoKind::Random      ? FlatProbeKind::Random
        : config.algo == AlgoKind::Linear    ? FlatProbeKind::LinearProbe
                                             : FlatProbeKind::Deterministic;
    if (config.padded_cells)
        return std::make_unique<detail::RenamerAdapter<PaddedFlatArray>>(
            config.algo, kind, config.size);
    return std::make_unique<detail::RenamerAdapter<FlatArray>>(
        config.algo, kind, config.size);
}

} // namespace levelarray
