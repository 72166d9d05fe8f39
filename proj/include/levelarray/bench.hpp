#pragma once

#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "levelarray/common.hpp"
#include "levelarray/renamer.hpp"
#include "levelarray/rng.hpp"

namespace levelarray {

// Probe counts above this land in the histogram's overflow bucket.
inline constexpr std::size_t kProbeHistogramMax = 64;

struct BenchConfig {
    AlgoKind algo = AlgoKind::Level;
    std::uint32_t threads = 1;
    std::uint64_t emulated = 0; // N; each thread holds up to N/threads names
    std::uint64_t slots = 0;    // L; defaults to 2N
    double prefill_pct = 50.0;  // share of each thread's registers done first
    double seconds = 10.0;      // duration mode (when ops_budget is zero)
    double warmup_seconds = 1.0;
    std::uint64_t ops_budget = 0; // total Get+Free target; deterministic mode
    RngSpec rng;
    std::uint64_t probes_per_batch = 1;
    bool padded_cells = false;
    bool ownership_checks = false;
};

struct BenchResult {
    BenchConfig config; // normalized: N rounded, slots resolved
    std::uint64_t structure_cells = 0;
    std::uint32_t hardware_threads = 0;
    double elapsed_seconds = 0.0;
    std::uint64_t gets = 0;
    std::uint64_t frees = 0;
    std::uint64_t total_ops = 0;
    double throughput = 0.0; // recorded ops per second
    double avg_probes = 0.0;
    double stddev_probes = 0.0;
    std::uint64_t max_probes_global = 0;
    // Worst case averaged over threads, the presentation style of the
    // original experiments; the raw global maximum sits alongside it.
    double max_probes_thread_avg = 0.0;
    std::uint64_t backup_uses = 0;
    std::vector<std::uint64_t> batch_histogram; // acquisitions per batch
    std::vector<std::uint64_t> probe_histogram; // index = probe count
    std::uint64_t prefill_ops = 0;
    std::uint64_t warmup_ops = 0;
    std::uint64_t ownership_violations = 0;
    bool aborted = false;
    std::string error;
};

namespace detail {

struct WorkerStats {
    std::uint64_t gets = 0;
    std::uint64_t frees = 0;
    std::uint64_t probe_sum = 0;
    std::uint64_t probe_sq_sum = 0;
    std::uint64_t max_probes = 0;
    std::uint64_t backup_uses = 0;
    std::vector<std::uint64_t> batch_hist;
    std::vector<std::uint64_t> probe_hist;

    explicit WorkerStats(std::size_t batches)
        : batch_hist(batches, 0), probe_hist(kProbeHistogramMax + 1, 0) {}

    void record_get(const ProbeStats& stats) {
        ++gets;
        probe_sum += stats.probes;
        probe_sq_sum += stats.probes * stats.probes;
        max_probes = std::max(max_probes, stats.probes);
        if (stats.used_backup) {
            ++backup_uses;
            ++batch_hist.back();
        } else {
            ++batch_hist[stats.batch_reached];
        }
        ++probe_hist[std::min<std::uint64_t>(stats.probes,
                                             kProbeHistogramMax)];
    }
};

} // namespace detail

inline BenchConfig normalize_bench_config(BenchConfig config) {
    if (config.threads == 0)
        throw ConfigError("bench needs at least one thread");
    if (config.emulated == 0)
        config.emulated = 1000ull * config.threads;
    // Round N up so every thread emulates the same number of holders.
    const std::uint64_t per_thread =
        (config.emulated + config.threads - 1) / config.threads;
    config.emulated = per_thread * config.threads;
    if (per_thread < 1)
        throw ConfigError("each thread needs at least one emulated holder");
    if (config.slots == 0)
        config.slots = 2 * config.emulated;
    if (config.slots < 2 * config.emulated)
        throw ConfigError("slots must be at least 2N");
    if (config.prefill_pct < 0.0 || config.prefill_pct > 100.0)
        throw ConfigError("prefill percentage must lie in [0, 100]");
    if (config.ops_budget == 0 && config.seconds <= 0.0)
        throw ConfigError("need a positive duration or an op budget");
    return config;
}

// Runs the register/deregister benchmark: every thread pre-fills its share,
// then loops acquiring up to its quota and releasing back down to the
// pre-fill watermark, releasing in LIFO order. Probes and batch placement
// are recorded per thread and merged after the join.
inline BenchResult run_bench(const BenchConfig& raw_config) {
    const BenchConfig config = normalize_bench_config(raw_config);

    RenamerConfig rconfig;
    rconfig.algo = config.algo;
    rconfig.size = config.algo == AlgoKind::Level
                       ? round_up_to_power_of_two(config.slots / 2)
                       : config.slots;
    rconfig.probes_per_batch = config.probes_per_batch;
    rconfig.padded_cells = config.padded_cells;
    auto renamer = make_renamer(rconfig);

    const std::uint64_t quota = config.emulated / config.threads;
    std::uint64_t prefill_count =
        (std::uint64_t)(quota * config.prefill_pct / 100.0);
    if (prefill_count >= quota)
        prefill_count = quota - 1; // the churn needs at least one name
    const bool ops_mode = config.ops_budget != 0;
    const std::uint64_t gets_budget_per_thread =
        ops_mode ? std::max<std::uint64_t>(
                       config.ops_budget / (2 * config.threads), 1)
                 : 0;

    const std::size_t batches =
        renamer->batch_layout() ? renamer->batch_layout()->batch_count + 1
                                : 1;

    std::atomic<bool> stop{false};
    std::atomic<bool> recording{ops_mode || config.warmup_seconds <= 0.0};
    std::atomic<std::uint32_t> budget_reached{0};
    std::atomic<std::uint64_t> ownership_violations{0};
    std::atomic<bool> aborted{false};
    std::string abort_error;
    std::mutex abort_mutex;

    std::barrier sync((std::ptrdiff_t)config.threads + 1);

    std::vector<detail::WorkerStats> warm_stats(config.threads,
                                                detail::WorkerStats(batches));
    std::vector<detail::WorkerStats> main_stats(config.threads,
                                                detail::WorkerStats(batches));
    std::vector<std::uint64_t> prefill_ops_per_thread(config.threads, 0);

    auto worker = [&](std::uint32_t tid) {
        const HolderTag tag = tid + 1;
        Rng rng = make_stream(config.rng, tid);
        std::vector<Name> held;
        held.reserve(quota);
        auto do_free = [&](Name name) {
            if (config.ownership_checks) {
                try {
                    renamer->free_checked(name, tag);
                } catch (const MisuseError&) {
                    ownership_violations.fetch_add(
                        1, std::memory_order_relaxed);
                }
            } else {
                renamer->free(name);
            }
        };
        auto record_abort = [&](const Error& e) {
            {
                std::lock_guard<std::mutex> lock(abort_mutex);
                if (!aborted.load())
                    abort_error = e.what();
            }
            aborted.store(true);
            stop.store(true);
        };
        // Both barrier arrivals happen on every path; a throw that skipped
        // one would hang the coordinating thread.
        sync.arrive_and_wait();
        try {
            for (std::uint64_t i = 0; i < prefill_count; ++i) {
                held.push_back(renamer->get(rng, tag).name);
                ++prefill_ops_per_thread[tid];
            }
        } catch (const Error& e) {
            record_abort(e);
        }
        sync.arrive_and_wait();
        try {
            std::uint64_t recorded_gets = 0;
            bool registering = true;
            bool budget_met = false;
            while (!stop.load(std::memory_order_relaxed)) {
                // A thread that has met its budget keeps churning without
                // recording until every thread has, so stragglers measure
                // against an undisturbed load.
                if (ops_mode &&
                    budget_reached.load(std::memory_order_relaxed) ==
                        config.threads)
                    break;
                auto& stats =
                    (recording.load(std::memory_order_relaxed) && !budget_met)
                        ? main_stats[tid]
                        : warm_stats[tid];
                if (registering) {
                    const Acquired got = renamer->get(rng, tag);
                    held.push_back(got.name);
                    stats.record_get(got.stats);
                    if (&stats == &main_stats[tid])
                        ++recorded_gets;
                    if (held.size() >= quota)
                        registering = false;
                } else {
                    do_free(held.back());
                    held.pop_back();
                    ++stats.frees;
                    if (held.size() <= prefill_count) {
                        registering = true;
                        if (ops_mode && !budget_met &&
                            recorded_gets >= gets_budget_per_thread) {
                            budget_met = true;
                            budget_reached.fetch_add(
                                1, std::memory_order_relaxed);
                        }
                    }
                }
            }
        } catch (const Error& e) {
            record_abort(e);
        }
        // Leave the structure quiescent.
        while (!held.empty()) {
            do_free(held.back());
            held.pop_back();
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(config.threads);
    for (std::uint32_t tid = 0; tid < config.threads; ++tid)
        threads.emplace_back(worker, tid);

    sync.arrive_and_wait(); // prefill begins
    sync.arrive_and_wait(); // prefill done
    const auto main_start = std::chrono::steady_clock::now();
    auto recorded_start = main_start;
    if (!ops_mode) {
        if (config.warmup_seconds > 0.0) {
            std::this_thread::sleep_for(
                std::chrono::duration<double>(config.warmup_seconds));
            recording.store(true, std::memory_order_relaxed);
            recorded_start = std::chrono::steady_clock::now();
        }
        const auto deadline =
            recorded_start + std::chrono::duration<double>(config.seconds);
        while (std::chrono::steady_clock::now() < deadline &&
               !stop.load(std::memory_order_relaxed))
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        stop.store(true, std::memory_order_relaxed);
    }
    for (auto& t : threads)
        t.join();
    const auto main_end = std::chrono::steady_clock::now();

    BenchResult result;
    result.config = config;
    result.structure_cells = renamer->cell_count();
    result.hardware_threads = std::thread::hardware_concurrency();
    result.elapsed_seconds =
        std::chrono::duration<double>(main_end - recorded_start).count();
    result.batch_histogram.assign(batches, 0);
    result.probe_histogram.assign(kProbeHistogramMax + 1, 0);

    double thread_max_sum = 0.0;
    for (std::uint32_t tid = 0; tid < config.threads; ++tid) {
        const auto& s = main_stats[tid];
        result.gets += s.gets;
        result.frees += s.frees;
        result.backup_uses += s.backup_uses;
        result.max_probes_global =
            std::max(result.max_probes_global, s.max_probes);
        thread_max_sum += (double)s.max_probes;
        for (std::size_t i = 0; i < batches; ++i)
            result.batch_histogram[i] += s.batch_hist[i];
        for (std::size_t i = 0; i <= kProbeHistogramMax; ++i)
            result.probe_histogram[i] += s.probe_hist[i];
        result.warmup_ops += warm_stats[tid].gets + warm_stats[tid].frees;
        result.prefill_ops += prefill_ops_per_thread[tid];
    }
    result.total_ops = result.gets + result.frees;
    result.max_probes_thread_avg = thread_max_sum / config.threads;
    if (result.elapsed_seconds > 0)
        result.throughput = (double)result.total_ops / result.elapsed_seconds;

    std::uint64_t probe_sum = 0, probe_sq = 0;
    for (std::uint32_t tid = 0; tid < config.threads; ++tid) {
        probe_sum += main_stats[tid].probe_sum;
        probe_sq += main_stats[tid].probe_sq_sum;
    }
    if (result.gets > 0) {
        result.avg_probes = (double)probe_sum / (double)result.gets;
        const double mean_sq = (double)probe_sq / (double)result.gets;
        result.stddev_probes = std::sqrt(
            std::max(0.0, mean_sq - result.avg_probes * result.avg_probes));
    }
    result.ownership_violations =
        ownership_violations.load(std::memory_order_relaxed);
    result.aborted = aborted.load();
    result.error = abort_error;
    return result;
}

} // namespace levelarray
