#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "levelarray/analysis.hpp"
#include "levelarray/common.hpp"
#include "levelarray/renamer.hpp"
#include "levelarray/rng.hpp"
#include "levelarray/schedule.hpp"

namespace levelarray {

// Step index used for injected holds, which precede the schedule.
inline constexpr std::int64_t kInjectedStep = -1;

struct OpRecord {
    std::uint32_t pid = 0;
    ScheduleOp kind = ScheduleOp::Call;
    std::uint64_t start_step = 0;
    std::int64_t lin_step = -1; // winning test-and-set (Get) / reset (Free)
    std::uint64_t end_step = 0;
    Name name = 0;
    ProbeStats stats;
    bool completed = false;
};

struct CollectRecord {
    std::uint32_t pid = 0;
    std::uint64_t start_step = 0;
    std::uint64_t end_step = 0;
    bool completed = false;
    // Names read as held, with the global step of each read.
    std::vector<std::pair<Name, std::uint64_t>> observed;
};

// Batch occupancy against the overcrowding thresholds at one instant.
struct BalanceReport {
    std::int64_t at_step = 0;
    std::uint64_t ops_linearized = 0;
    std::vector<std::uint64_t> occupancy; // per batch
    std::uint64_t backup_occupancy = 0;
    std::vector<bool> overcrowded;               // within monitored range
    std::optional<std::uint32_t> monitored_limit; // nullopt: vacuous (n < 16)
    std::uint32_t balanced_up_to = 0;
    bool fully_balanced = true;
};

// (op_count, balanced_up_to) transition; the timeline starts with the state
// before step 0.
struct BalanceTransition {
    std::int64_t step = kInjectedStep;
    std::uint64_t ops_linearized = 0;
    std::uint32_t balanced_up_to = 0;
    bool fully_balanced = true;
};

struct ExecutionTrace {
    Schedule schedule;
    std::vector<std::pair<std::uint32_t, Name>> injected;
    std::vector<OpRecord> ops;          // completion order; Calls not recorded
    std::vector<CollectRecord> collects;
    std::vector<BalanceReport> balance_samples;
    std::vector<BalanceTransition> balance_timeline;
    std::uint64_t steps_executed = 0;
    std::uint64_t calls_executed = 0;
    std::uint64_t implicit_calls = 0; // exhausted-input padding steps
    std::uint64_t gets_linearized = 0;
    std::uint64_t frees_linearized = 0;
    std::uint64_t final_held_count = 0;
};

struct SimOptions {
    std::uint64_t sample_every_ops = 0;        // 0 disables periodic samples
    std::vector<std::uint64_t> sample_at_steps; // sorted ascending
    std::uint64_t stop_after_ops = 0;          // 0 = run all steps
    bool record_ops = true;
    bool track_balance = true;
};

namespace detail {

// Occupancy bookkeeping at linearization points, against the exact integer
// thresholds. Balance is only defined for the level structure; the flat
// baselines skip it.
class BalanceTracker {
  public:
    BalanceTracker(const BatchLayout* layout, std::uint64_t capacity) {
        if (!layout)
            return;
        layout_ = layout;
        occupancy_.assign(layout->batch_count, 0);
        limit_ = analysis::monitored_batch_limit(capacity);
        if (limit_) {
            for (std::uint32_t j = 0; j <= *limit_; ++j) {
                auto t = analysis::overcrowd_threshold_int(capacity, j);
                thresholds_.push_back(t ? *t : ~std::uint64_t{0});
            }
        }
    }

    bool enabled() const { return layout_ != nullptr; }

    void on_acquire(std::uint32_t batch) {
        if (batch == kBackupBatch)
            ++backup_;
        else
            ++occupancy_[batch];
    }
    void on_release(std::uint32_t batch) {
        if (batch == kBackupBatch)
            --backup_;
        else
            --occupancy_[batch];
    }

    // Highest j in the monitored range with batches 0..j all below their
    // thresholds. Batch 0's threshold (16n) is unreachable by construction.
    std::uint32_t balanced_up_to() const {
        if (!limit_)
            return 0;
        std::uint32_t j = 0;
        while (j < *limit_ && occupancy_[j + 1] < thresholds_[j + 1])
            ++j;
        return j;
    }

    bool fully_balanced() const {
        return !limit_ || balanced_up_to() == *limit_;
    }

    BalanceReport report(std::int64_t step, std::uint64_t ops) const {
        BalanceReport rep;
        rep.at_step = step;
        rep.ops_linearized = ops;
        rep.occupancy = occupancy_;
        rep.backup_occupancy = backup_;
        rep.monitored_limit = limit_;
        if (limit_) {
            for (std::uint32_t j = 0; j <= *limit_; ++j)
                rep.overcrowded.push_back(occupancy_[j] >= thresholds_[j]);
        }
        rep.balanced_up_to = balanced_up_to();
        rep.fully_balanced = fully_balanced();
        return rep;
    }

  private:
    const BatchLayout* layout_ = nullptr;
    std::vector<std::uint64_t> occupancy_;
    std::uint64_t backup_ = 0;
    std::optional<std::uint32_t> limit_;
    std::vector<std::uint64_t> thresholds_; // indexed by batch, 0..limit
};

} // namespace detail

// Single-threaded deterministic replay: one schedule entry consumes exactly
// one shared-memory step of the named process (a Get spans one entry per
// probe, a Collect one entry per cell read, Free and Call one entry each).
// The engine keeps its own holder map and verifies the structure against it
// at every linearization, which makes it the ground-truth oracle for the
// concurrent implementation.
class Simulator {
  public:
    Simulator(Renamer& renamer, const Schedule& schedule,
              SimOptions options = {})
        : renamer_(renamer), schedule_(schedule), options_(options),
          balance_(options.track_balance ? renamer.batch_layout() : nullptr,
                   round_up_to_power_of_two(schedule.structure_size)) {
        validate_schedule(schedule);
        holder_.assign(renamer_.cell_count(), kNoHolder);
        for (std::uint32_t pid = 0; pid < schedule.process_count; ++pid)
            procs_.emplace_back(Rng(split_stream(schedule.rng, pid)));
        trace_.schedule = schedule;
        apply_injection();
        trace_.balance_timeline.push_back(
            BalanceTransition{kInjectedStep, 0, balance_.balanced_up_to(),
                              balance_.fully_balanced()});
    }

    ExecutionTrace run() {
        std::uint64_t sample_cursor = 0;
        for (std::uint64_t t = 0; t < schedule_.steps.size(); ++t) {
            if (options_.stop_after_ops &&
                ops_linearized() >= options_.stop_after_ops)
                break;
            execute_step(t, schedule_.steps[t]);
            ++trace_.steps_executed;
            while (sample_cursor < options_.sample_at_steps.size() &&
                   options_.sample_at_steps[sample_cursor] <= t) {
                trace_.balance_samples.push_back(
                    balance_.report((std::int64_t)t, ops_linearized()));
                ++sample_cursor;
            }
        }
        finish_incomplete_ops();
        trace_.final_held_count = held_count_;
        return std::move(trace_);
    }

    std::uint64_t ops_linearized() const {
        return trace_.gets_linearized + trace_.frees_linearized;
    }

    const detail::BalanceTracker& balance() const { return balance_; }

  private:
    static constexpr std::int64_t kNoHolder = -1;

    struct ProcState {
        explicit ProcState(Rng stream) : rng(std::move(stream)) {}

        Rng rng;
        std::uint64_t input_pos = 0;
        std::optional<Name> held;
        bool op_active = false;
        OpRecord op;
        ProbeCursor cursor;
        std::uint64_t collect_read_pos = 0;
        std::vector<std::pair<Name, std::uint64_t>> collect_seen;
    };

    void apply_injection() {
        for (std::uint32_t pid = 0;
             pid < schedule_.injected_hold.size() && pid < procs_.size();
             ++pid) {
            const auto& hold = schedule_.injected_hold[pid];
            if (!hold)
                continue;
            const std::uint64_t cell = renamer_.cell_of_name(*hold);
            const HolderTag tag = pid + 1;
            const HolderTag current = renamer_.load_cell(cell);
            if (current == kFreeTag) {
                if (!renamer_.try_acquire_cell(cell, tag))
                    throw ConfigError("injection lost a race on a free cell");
            } else if (current != tag) {
                throw ConfigError("injected cell already held by another tag");
            }
            holder_[cell] = pid;
            ++held_count_;
            procs_[pid].held = *hold;
            if (balance_.enabled())
                balance_.on_acquire(batch_of_name(*hold));
            trace_.injected.emplace_back(pid, *hold);
        }
    }

    std::uint32_t batch_of_name(Name name) const {
        const BatchLayout* layout = renamer_.batch_layout();
        return layout ? batch_of(*layout, name) : 0;
    }

    std::optional<ScheduleOp> next_input_op(std::uint32_t pid) {
        auto& proc = procs_[pid];
        const auto& input = schedule_.inputs[pid];
        if (proc.input_pos >= input.size()) {
            if (!schedule_.cyclic_inputs || input.empty())
                return std::nullopt;
            proc.input_pos = 0;
        }
        return input[proc.input_pos++];
    }

    void execute_step(std::uint64_t t, std::uint32_t pid) {
        auto& proc = procs_[pid];
        if (!proc.op_active) {
            const auto op = next_input_op(pid);
            if (!op) {
                ++trace_.implicit_calls; // exhausted input idles as a Call
                return;
            }
            begin_op(t, pid, *op);
        }
        advance_op(t, pid);
    }

    void begin_op(std::uint64_t t, std::uint32_t pid, ScheduleOp kind) {
        auto& proc = procs_[pid];
        // validate_schedule already vetted the inputs; these guard cyclic
        // wraps and future input sources.
        if (kind == ScheduleOp::Get && proc.held)
            throw ScheduleError("process " + std::to_string(pid) +
                                    " issued Get while holding",
                                proc.input_pos - 1);
        if (kind == ScheduleOp::Free && !proc.held)
            throw ScheduleError("process " + std::to_string(pid) +
                                    " issued Free without a held name",
                                proc.input_pos - 1);
        proc.op_active = true;
        proc.op = OpRecord{};
        proc.op.pid = pid;
        proc.op.kind = kind;
        proc.op.start_step = t;
        proc.cursor = ProbeCursor{};
        proc.collect_read_pos = 0;
        proc.collect_seen.clear();
    }

    void advance_op(std::uint64_t t, std::uint32_t pid) {
        auto& proc = procs_[pid];
        switch (proc.op.kind) {
        case ScheduleOp::Call:
            ++trace_.calls_executed;
            proc.op_active = false;
            return;
        case ScheduleOp::Get:
            step_get(t, pid);
            return;
        case ScheduleOp::Free:
            step_free(t, pid);
            return;
        case ScheduleOp::Collect:
            step_collect(t, pid);
            return;
        }
    }

    void step_get(std::uint64_t t, std::uint32_t pid) {
        auto& proc = procs_[pid];
        const auto target = renamer_.next_probe_target(proc.cursor, proc.rng);
        if (!target)
            throw CapacityError(
                "simulated Get exhausted every slot; the execution violates "
                "the concurrency bound");
        ++proc.op.stats.probes;
        proc.op.stats.batch_reached = target->batch;
        if (target->batch == kBackupBatch)
            proc.op.stats.used_backup = true;
        const HolderTag tag = pid + 1;
        if (!renamer_.try_acquire_cell(target->cell, tag))
            return; // lost this trial; the Get stays active
        if (holder_[target->cell] != kNoHolder)
            throw Error("oracle disagreement: won a test-and-set on a cell "
                        "the holder map considers taken");
        const Name name = renamer_.name_of_cell(target->cell);
        holder_[target->cell] = pid;
        ++held_count_;
        proc.held = name;
        proc.op.name = name;
        proc.op.lin_step = (std::int64_t)t;
        proc.op.end_step = t;
        proc.op.completed = true;
        ++trace_.gets_linearized;
        on_linearization(t, target->batch, true);
        if (options_.record_ops)
            trace_.ops.push_back(proc.op);
        proc.op_active = false;
    }

    void step_free(std::uint64_t t, std::uint32_t pid) {
        auto& proc = procs_[pid];
        const Name name = *proc.held;
        const std::uint64_t cell = renamer_.cell_of_name(name);
        if (holder_[cell] != (std::int64_t)pid)
            throw Error("oracle disagreement: freeing a cell the holder map "
                        "assigns elsewhere");
        if (renamer_.load_cell(cell) != (HolderTag)(pid + 1))
            throw Error("oracle disagreement: cell tag does not match the "
                        "holder map at free");
        renamer_.release_cell(cell);
        holder_[cell] = kNoHolder;
        --held_count_;
        proc.held.reset();
        proc.op.name = name;
        proc.op.lin_step = (std::int64_t)t;
        proc.op.end_step = t;
        proc.op.completed = true;
        ++trace_.frees_linearized;
        on_linearization(t, batch_of_name(name), false);
        if (options_.record_ops)
            trace_.ops.push_back(proc.op);
        proc.op_active = false;
    }

    void step_collect(std::uint64_t t, std::uint32_t pid) {
        auto& proc = procs_[pid];
        const std::uint64_t cell = proc.collect_read_pos++;
        if (renamer_.load_cell(cell) != kFreeTag)
            proc.collect_seen.emplace_back(renamer_.name_of_cell(cell), t);
        if (proc.collect_read_pos < renamer_.cell_count())
            return;
        CollectRecord rec;
        rec.pid = pid;
        rec.start_step = proc.op.start_step;
        rec.end_step = t;
        rec.completed = true;
        rec.observed = std::move(proc.collect_seen);
        trace_.collects.push_back(std::move(rec));
        proc.collect_seen.clear();
        proc.op_active = false;
    }

    void on_linearization(std::uint64_t t, std::uint32_t batch,
                          bool acquire) {
        // Conservation at every linearization point.
        const std::uint64_t injected = trace_.injected.size();
        if (held_count_ !=
            injected + trace_.gets_linearized - trace_.frees_linearized)
            throw Error("conservation failure: held-cell count diverged from "
                        "linearized Gets minus Frees");
        if (balance_.enabled()) {
            if (acquire)
                balance_.on_acquire(batch);
            else
                balance_.on_release(batch);
            const std::uint32_t up_to = balance_.balanced_up_to();
            const bool full = balance_.fully_balanced();
            const auto& last = trace_.balance_timeline.back();
            if (up_to != last.balanced_up_to ||
                full != last.fully_balanced)
                trace_.balance_timeline.push_back(BalanceTransition{
                    (std::int64_t)t, ops_linearized(), up_to, full});
        }
        if (options_.sample_every_ops &&
            ops_linearized() % options_.sample_every_ops == 0)
            trace_.balance_samples.push_back(
                balance_.report((std::int64_t)t, ops_linearized()));
    }

    // Partially executed collects still observed valid names; keep them.
    void finish_incomplete_ops() {
        for (std::uint32_t pid = 0; pid < procs_.size(); ++pid) {
            auto& proc = procs_[pid];
            if (!proc.op_active)
                continue;
            if (proc.op.kind == ScheduleOp::Collect) {
                CollectRecord rec;
                rec.pid = pid;
                rec.start_step = proc.op.start_step;
                rec.end_step = trace_.steps_executed;
                rec.completed = false;
                rec.observed = std::move(proc.collect_seen);
                trace_.collects.push_back(std::move(rec));
            } else if (proc.op.kind == ScheduleOp::Get &&
                       options_.record_ops) {
                proc.op.end_step = trace_.steps_executed;
                trace_.ops.push_back(proc.op); // incomplete, no linearization
            }
            proc.op_active = false;
        }
    }

    Renamer& renamer_;
    const Schedule& schedule_;
    SimOptions options_;
    detail::BalanceTracker balance_;
    std::vector<ProcState> procs_;
    std::vector<std::int64_t> holder_; // cell -> pid
    std::uint64_t held_count_ = 0;
    ExecutionTrace trace_;
};

inline std::unique_ptr<Renamer> make_renamer_for(const Schedule& schedule,
                                                 bool padded = false) {
    return make_renamer(RenamerConfig{schedule.algo, schedule.structure_size,
                                      schedule.probes_per_batch, padded});
}

inline ExecutionTrace run_schedule(Renamer& renamer, const Schedule& schedule,
                                   const SimOptions& options = {}) {
    return Simulator(renamer, schedule, options).run();
}

inline ExecutionTrace run_schedule(const Schedule& schedule,
                                   const SimOptions& options = {}) {
    auto renamer = make_renamer_for(schedule);
    return Simulator(*renamer, schedule, options).run();
}

// ---------------------------------------------------------------------------
// Trace checkers
// ---------------------------------------------------------------------------

struct UniquenessViolation {
    std::int64_t step = 0;
    Name name = 0;
    std::vector<std::uint32_t> holders;
};

struct HolderEvent {
    std::int64_t step = 0;
    std::uint32_t pid = 0;
    Name name = 0;
    bool acquire = true;
};

inline std::vector<HolderEvent> holder_events(const ExecutionTrace& trace) {
    std::vector<HolderEvent> events;
    for (const auto& [pid, name] : trace.injected)
        events.push_back(HolderEvent{kInjectedStep, pid, name, true});
    for (const auto& op : trace.ops) {
        if (!op.completed || op.lin_step < 0)
            continue;
        if (op.kind == ScheduleOp::Get)
            events.push_back(HolderEvent{op.lin_step, op.pid, op.name, true});
        else if (op.kind == ScheduleOp::Free)
            events.push_back(HolderEvent{op.lin_step, op.pid, op.name, false});
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const HolderEvent& a, const HolderEvent& b) {
                         return a.step < b.step;
                     });
    return events;
}

// Scans the holder map over time; reports the first name held by two
// processes at once.
inline std::optional<UniquenessViolation>
check_uniqueness(const ExecutionTrace& trace) {
    std::map<Name, std::uint32_t> holder;
    for (const auto& ev : holder_events(trace)) {
        if (ev.acquire) {
            auto [it, inserted] = holder.emplace(ev.name, ev.pid);
            if (!inserted)
                return UniquenessViolation{ev.step, ev.name,
                                           {it->second, ev.pid}};
        } else {
            auto it = holder.find(ev.name);
            if (it == holder.end() || it->second != ev.pid)
                return UniquenessViolation{ev.step, ev.name, {ev.pid}};
            holder.erase(it);
        }
    }
    return std::nullopt;
}

// Held-cell count must equal linearized Gets minus Frees (plus injected
// holds) at every instant, and match the trace's final count.
inline bool check_conservation(const ExecutionTrace& trace) {
    std::int64_t held = 0;
    std::int64_t gets = 0, frees = 0;
    const std::int64_t injected = (std::int64_t)trace.injected.size();
    for (const auto& ev : holder_events(trace)) {
        if (ev.step == kInjectedStep) {
            ++held;
            continue;
        }
        if (ev.acquire) {
            ++gets;
            ++held;
        } else {
            ++frees;
            --held;
        }
        if (held != injected + gets - frees || held < 0)
            return false;
    }
    return held == (std::int64_t)trace.final_held_count &&
           gets == (std::int64_t)trace.gets_linearized &&
           frees == (std::int64_t)trace.frees_linearized;
}

struct CollectViolation {
    std::uint32_t pid = 0;
    Name name = 0;
    std::uint64_t read_step = 0;
};

// Validity: every name a Collect returned must have been held by some
// process at the instant its cell was read. A read at step s sees the state
// left by steps < s.
inline std::optional<CollectViolation>
check_collect_validity(const ExecutionTrace& trace) {
    struct Interval {
        std::int64_t visible_from; // acquire step + 1
        std::int64_t visible_to;   // release step (inclusive), or max
    };
    std::map<Name, std::vector<Interval>> intervals;
    std::map<Name, std::int64_t> open;
    for (const auto& ev : holder_events(trace)) {
        if (ev.acquire) {
            open[ev.name] = ev.step + 1;
        } else {
            auto it = open.find(ev.name);
            if (it != open.end()) {
                intervals[ev.name].push_back(Interval{it->second, ev.step});
                open.erase(it);
            }
        }
    }
    constexpr std::int64_t kForever = std::numeric_limits<std::int64_t>::max();
    for (const auto& [name, from] : open)
        intervals[name].push_back(Interval{from, kForever});

    for (const auto& collect : trace.collects) {
        for (const auto& [name, read_step] : collect.observed) {
            const auto it = intervals.find(name);
            bool valid = false;
            if (it != intervals.end()) {
                for (const auto& iv : it->second) {
                    if (iv.visible_from <= (std::int64_t)read_step &&
                        (std::int64_t)read_step <= iv.visible_to) {
                        valid = true;
                        break;
                    }
                }
            }
            if (!valid)
                return CollectViolation{collect.pid, name, read_step};
        }
    }
    return std::nullopt;
}

// Occupancy per batch at time t (state after executing steps 0..t), from the
// trace's holder events. Only meaningful for the level structure.
inline BalanceReport balance_report(const ExecutionTrace& trace,
                                    std::int64_t t) {
    if (trace.schedule.algo != AlgoKind::Level)
        throw ConfigError("balance is defined only for the level structure");
    if (t > (std::int64_t)trace.steps_executed)
        throw ConfigError("balance_report time beyond the trace");
    const BatchLayout layout = build_layout(trace.schedule.structure_size,
                                            trace.schedule.probes_per_batch);
    detail::BalanceTracker tracker(&layout, layout.capacity_n);
    std::uint64_t ops = 0;
    for (const auto& ev : holder_events(trace)) {
        if (ev.step > t)
            break;
        if (ev.step != kInjectedStep)
            ++ops;
        if (ev.acquire)
            tracker.on_acquire(batch_of(layout, ev.name));
        else
            tracker.on_release(batch_of(layout, ev.name));
    }
    return tracker.report(t, ops);
}

// Exact compactness check on an executed trace: every completed Get's Free
// finishes strictly within n^B steps. Gets never freed inside the trace are
// violations only if the trace itself already ran past their deadline.
inline bool validate_compact_trace(const ExecutionTrace& trace,
                                   std::string* why = nullptr) {
    const std::uint64_t bound = CompactnessSpec{trace.schedule.compactness_B}
        .bound_steps(round_up_to_power_of_two(trace.schedule.structure_size));
    std::map<std::uint32_t, std::uint64_t> open_get_start;
    for (const auto& op : trace.ops) {
        if (op.kind == ScheduleOp::Get && op.completed) {
            open_get_start[op.pid] = op.start_step;
        } else if (op.kind == ScheduleOp::Free && op.completed) {
            auto it = open_get_start.find(op.pid);
            if (it == open_get_start.end())
                continue; // frees an injected hold
            if (op.end_step >= it->second + bound) {
                if (why)
                    *why = "process " + std::to_string(op.pid) +
                           ": Free at step " + std::to_string(op.end_step) +
                           " misses deadline for Get at step " +
                           std::to_string(it->second);
                return false;
            }
            open_get_start.erase(it);
        }
    }
    for (const auto& [pid, start] : open_get_start) {
        if (trace.steps_executed >= start + bound) {
            if (why)
                *why = "process " + std::to_string(pid) + ": Get at step " +
                       std::to_string(start) + " still unfreed past deadline";
            return false;
        }
    }
    return true;
}

} // namespace levelarray
