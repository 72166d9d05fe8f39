#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "levelarray/common.hpp"
#include "levelarray/layout.hpp"
#include "levelarray/renamer.hpp"
#include "levelarray/rng.hpp"
#include "levelarray/schedule.hpp"
#include "levelarray/simulator.hpp"

namespace levelarray {

struct BatchFill {
    std::uint32_t batch = 0;
    double fraction = 0.0;
};

// Parses "b0=0.25,b1=0.5".
inline std::vector<BatchFill> parse_fill_spec(const std::string& text) {
    std::vector<BatchFill> fills;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty())
            continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos || item.size() < 4 || item[0] != 'b')
            throw ConfigError("fill spec items look like b<batch>=<fraction>");
        BatchFill fill;
        fill.batch = (std::uint32_t)std::stoul(item.substr(1, eq - 1));
        fill.fraction = std::stod(item.substr(eq + 1));
        fills.push_back(fill);
    }
    return fills;
}

// Picks floor(fraction * batch_size) distinct random slots per requested
// batch. One virtual holder per slot; their Frees are scheduled inside the
// churn, within the compact bound.
inline std::vector<Name> pick_injection_names(const BatchLayout& layout,
                                              const std::vector<BatchFill>& fills,
                                              Rng& rng) {
    std::vector<Name> names;
    for (const auto& fill : fills) {
        if (fill.batch >= layout.batch_count)
            throw ConfigError("fill batch " + std::to_string(fill.batch) +
                              " does not exist");
        if (fill.fraction < 0.0 || fill.fraction > 1.0)
            throw ConfigError("fill fraction must lie in [0, 1]");
        const std::uint64_t size = layout.batch_size[fill.batch];
        const auto want = (std::uint64_t)(fill.fraction * (double)size);
        if (want > size)
            throw ConfigError("fill request exceeds batch size");
        std::vector<std::uint64_t> slots(size);
        for (std::uint64_t i = 0; i < size; ++i)
            slots[i] = layout.batch_offset[fill.batch] + i;
        // Partial Fisher-Yates: the first `want` entries become the sample.
        for (std::uint64_t i = 0; i < want; ++i)
            std::swap(slots[i], slots[i + rng.next_below(size - i)]);
        for (std::uint64_t i = 0; i < want; ++i)
            names.push_back(layout.name_of_cell(slots[i]));
    }
    return names;
}

// Directly acquires the requested slots on the structure, owned by virtual
// holders tagged pid+1 in assignment order. Returns one name per holder.
inline std::vector<Name>
inject_unbalanced_state(Renamer& renamer, const std::vector<BatchFill>& fills,
                        Rng& rng) {
    const BatchLayout* layout = renamer.batch_layout();
    if (!layout)
        throw ConfigError("injection requires the level structure");
    auto names = pick_injection_names(*layout, fills, rng);
    for (std::uint32_t pid = 0; pid < names.size(); ++pid) {
        if (!renamer.try_acquire_cell(layout->cell_of_name(names[pid]),
                                      pid + 1))
            throw ConfigError("injection target cell already held");
    }
    return names;
}

struct HealingConfig {
    std::uint64_t n = 0;
    std::vector<BatchFill> fills;
    CompactnessSpec compactness{2.0};
    std::uint64_t total_ops = 100000;
    std::uint64_t snapshot_interval = 4000;
    RngSpec rng;
    // Theory-mode trials per batch. The balance thresholds are a
    // 16-trials-per-batch construct; at one trial per batch the churn
    // steady state keeps deep batches at or above them, so full balance is
    // not reachable there.
    std::uint64_t probes_per_batch = 16;
};

struct HealingReport {
    HealingConfig config;
    std::vector<BalanceReport> snapshots; // every snapshot_interval ops
    BalanceReport initial_state;
    BalanceReport final_state;
    // First op count at which full balance holds and persists to the end.
    std::optional<std::uint64_t> convergence_op;
    // Y_j: balanced up to j throughout the window [j*W, (j+1)*W) of steps.
    std::vector<bool> interval_indicators;
    std::uint64_t indicator_window_steps = 0;
    std::uint64_t ops_executed = 0;
    std::uint64_t steps_executed = 0;
    std::uint64_t holder_count = 0;
};

namespace detail {

inline std::optional<std::uint64_t>
convergence_from_timeline(const std::vector<BalanceTransition>& timeline) {
    if (timeline.empty() || !timeline.back().fully_balanced)
        return std::nullopt;
    // Walk back through the final fully-balanced run.
    std::size_t i = timeline.size();
    while (i > 0 && timeline[i - 1].fully_balanced)
        --i;
    return timeline[i].step == kInjectedStep ? 0
                                             : timeline[i].ops_linearized;
}

inline std::vector<bool>
interval_indicators_from_timeline(const std::vector<BalanceTransition>& timeline,
                                  std::uint64_t total_steps,
                                  std::uint64_t window,
                                  std::uint32_t monitored_limit) {
    std::vector<bool> indicators;
    std::size_t cursor = 0;
    std::uint32_t current = timeline.empty() ? 0 : timeline[0].balanced_up_to;
    for (std::uint32_t j = 0; j <= monitored_limit; ++j) {
        const std::uint64_t from = (std::uint64_t)j * window;
        const std::uint64_t to = from + window;
        if (from >= total_steps) {
            indicators.push_back(false); // window beyond the run
            continue;
        }
        // State at the window start.
        while (cursor + 1 < timeline.size() &&
               timeline[cursor + 1].step < (std::int64_t)from)
            current = timeline[++cursor].balanced_up_to;
        std::uint32_t min_up_to = current;
        std::size_t look = cursor;
        while (look + 1 < timeline.size() &&
               timeline[look + 1].step < (std::int64_t)to) {
            ++look;
            min_up_to = std::min(min_up_to, timeline[look].balanced_up_to);
        }
        indicators.push_back(min_up_to >= j);
    }
    return indicators;
}

} // namespace detail

// The injected state, described before any step executes.
inline BalanceReport balance_report_from_injection(const ExecutionTrace& trace,
                                                   const BatchLayout& layout) {
    detail::BalanceTracker tracker(&layout, layout.capacity_n);
    for (const auto& [pid, name] : trace.injected)
        tracker.on_acquire(batch_of(layout, name));
    return tracker.report(kInjectedStep, 0);
}

// Injects the requested unbalanced state, drives a compact churn (every
// virtual holder alternates Free and Get, scheduled in shuffled rounds),
// and samples the batch histogram every snapshot_interval operations.
inline HealingReport run_healing_experiment(const HealingConfig& config) {
    HealingReport report;
    report.config = config;

    const BatchLayout layout =
        build_layout(config.n, config.probes_per_batch);
    Rng inject_rng = make_stream(config.rng, kInjectionStreamSalt);
    const auto names = pick_injection_names(layout, config.fills, inject_rng);
    if (names.empty())
        throw ConfigError("healing needs at least one injected holder");
    report.holder_count = names.size();

    Schedule schedule;
    schedule.structure_size = config.n;
    schedule.algo = AlgoKind::Level;
    schedule.probes_per_batch = config.probes_per_batch;
    schedule.compactness_B = config.compactness.exponent_B;
    schedule.process_count = (std::uint32_t)names.size();
    schedule.rng = config.rng;
    schedule.cyclic_inputs = true;
    schedule.inputs.assign(schedule.process_count,
                           {ScheduleOp::Free, ScheduleOp::Get});
    schedule.injected_hold.assign(names.begin(), names.end());

    // The churn must not stall before the op budget: pad the step string and
    // widen it if an unlucky probe distribution consumes it early.
    std::uint64_t step_budget = 3 * config.total_ops + 4 * names.size();
    Rng step_rng = make_stream(config.rng, kScheduleStreamSalt);
    for (;;) {
        schedule.steps = detail::shuffled_rounds(schedule.process_count,
                                                 step_budget, step_rng);
        SimOptions options;
        options.sample_every_ops = config.snapshot_interval;
        options.stop_after_ops = config.total_ops;
        options.record_ops = false;

        auto renamer = make_renamer_for(schedule);
        Simulator sim(*renamer, schedule, options);
        ExecutionTrace trace = sim.run();
        if (trace.gets_linearized + trace.frees_linearized <
                config.total_ops &&
            trace.steps_executed == schedule.steps.size()) {
            step_budget *= 2;
            continue;
        }

        report.ops_executed =
            trace.gets_linearized + trace.frees_linearized;
        report.steps_executed = trace.steps_executed;
        report.snapshots = std::move(trace.balance_samples);
        report.initial_state = balance_report_from_injection(trace, layout);
        report.final_state = sim.balance().report(
            (std::int64_t)trace.steps_executed, report.ops_executed);
        report.convergence_op =
            detail::convergence_from_timeline(trace.balance_timeline);
        const auto limit = analysis::monitored_batch_limit(layout.capacity_n);
        if (limit) {
            const std::uint64_t bound = config.compactness.bound_steps(
                layout.capacity_n);
            std::uint64_t window = std::min<std::uint64_t>(
                bound, trace.steps_executed / (*limit + 1));
            window = std::max<std::uint64_t>(window, 1);
            report.indicator_window_steps = window;
            report.interval_indicators =
                detail::interval_indicators_from_timeline(
                    trace.balance_timeline, trace.steps_executed, window,
                    *limit);
        }
        return report;
    }
}

// Histogram CSV: one row per (snapshot, main batch).
inline void write_healing_csv(const HealingReport& report, std::ostream& out) {
    out << "op_count,batch_index,occupancy\n";
    auto emit = [&out](const BalanceReport& sample) {
        for (std::size_t j = 0; j < sample.occupancy.size(); ++j)
            out << sample.ops_linearized << ',' << j << ','
                << sample.occupancy[j] << '\n';
    };
    emit(report.initial_state);
    for (const auto& sample : report.snapshots)
        emit(sample);
}

} // namespace levelarray
