#pragma once

#include <ostream>
#include <string>

#include <json.hpp>

#include "levelarray/analysis.hpp"
#include "levelarray/bench.hpp"
#include "levelarray/healing.hpp"
#include "levelarray/simulator.hpp"

// JSON emission for every report the CLI prints. nlohmann::json objects keep
// keys sorted, so serialized output is byte-stable for identical inputs.

namespace levelarray {

using Json = nlohmann::json;

inline Json to_json(const RngSpec& spec) {
    return Json{{"kind", to_string(spec.kind)}, {"seed", spec.seed}};
}

inline Json to_json(const Schedule& schedule, bool include_steps = true) {
    Json j;
    j["n"] = schedule.structure_size;
    j["algo"] = to_string(schedule.algo);
    j["probes"] = schedule.probes_per_batch;
    j["B"] = schedule.compactness_B;
    j["process_count"] = schedule.process_count;
    j["rng"] = to_json(schedule.rng);
    j["cyclic_inputs"] = schedule.cyclic_inputs;
    Json inputs = Json::array();
    for (const auto& input : schedule.inputs) {
        std::string tokens;
        tokens.reserve(input.size());
        for (ScheduleOp op : input)
            tokens.push_back(to_token(op));
        inputs.push_back(tokens);
    }
    j["inputs"] = std::move(inputs);
    if (include_steps)
        j["steps"] = schedule.steps;
    else
        j["step_count"] = schedule.steps.size();
    return j;
}

inline Json to_json(const BalanceReport& report) {
    Json j;
    j["at_step"] = report.at_step;
    j["ops_linearized"] = report.ops_linearized;
    j["occupancy"] = report.occupancy;
    j["backup_occupancy"] = report.backup_occupancy;
    j["overcrowded"] = report.overcrowded;
    if (report.monitored_limit)
        j["monitored_limit"] = *report.monitored_limit;
    else
        j["monitored_limit"] = nullptr;
    j["balanced_up_to"] = report.balanced_up_to;
    j["fully_balanced"] = report.fully_balanced;
    return j;
}

inline Json to_json(const ExecutionTrace& trace, bool include_steps = true) {
    Json j;
    j["schedule"] = to_json(trace.schedule, include_steps);
    Json injected = Json::array();
    for (const auto& [pid, name] : trace.injected)
        injected.push_back(Json::array({pid, name}));
    j["injected"] = std::move(injected);

    Json ops = Json::array();
    for (const auto& op : trace.ops) {
        Json o;
        o["pid"] = op.pid;
        o["kind"] = std::string(1, to_token(op.kind));
        o["start_step"] = op.start_step;
        o["lin_step"] = op.lin_step;
        o["end_step"] = op.end_step;
        o["name"] = op.name;
        o["completed"] = op.completed;
        if (op.kind == ScheduleOp::Get) {
            o["probes"] = op.stats.probes;
            o["batch_reached"] = op.stats.batch_reached;
            o["used_backup"] = op.stats.used_backup;
        }
        ops.push_back(std::move(o));
    }
    j["ops"] = std::move(ops);

    Json collects = Json::array();
    for (const auto& rec : trace.collects) {
        Json c;
        c["pid"] = rec.pid;
        c["start_step"] = rec.start_step;
        c["end_step"] = rec.end_step;
        c["completed"] = rec.completed;
        Json observed = Json::array();
        for (const auto& [name, step] : rec.observed)
            observed.push_back(Json::array({name, step}));
        c["observed"] = std::move(observed);
        collects.push_back(std::move(c));
    }
    j["collects"] = std::move(collects);

    Json samples = Json::array();
    for (const auto& sample : trace.balance_samples)
        samples.push_back(to_json(sample));
    j["balance_samples"] = std::move(samples);

    Json timeline = Json::array();
    for (const auto& tr : trace.balance_timeline) {
        timeline.push_back(Json{{"step", tr.step},
                                {"ops_linearized", tr.ops_linearized},
                                {"balanced_up_to", tr.balanced_up_to},
                                {"fully_balanced", tr.fully_balanced}});
    }
    j["balance_timeline"] = std::move(timeline);

    j["steps_executed"] = trace.steps_executed;
    j["calls_executed"] = trace.calls_executed;
    j["implicit_calls"] = trace.implicit_calls;
    j["gets_linearized"] = trace.gets_linearized;
    j["frees_linearized"] = trace.frees_linearized;
    j["final_held_count"] = trace.final_held_count;
    return j;
}

// ---------------------------------------------------------------------------
// Bounds table
// ---------------------------------------------------------------------------

inline Json to_json(const analysis::BoundConstants& bounds) {
    Json j;
    j["n"] = bounds.n;
    if (bounds.monitored_limit)
        j["monitored_limit"] = *bounds.monitored_limit;
    else
        j["monitored_limit"] = nullptr;
    Json rows = Json::array();
    for (const auto& row : bounds.batches) {
        Json r;
        r["j"] = row.j;
        r["pi"] = analysis::to_fraction_string(row.pi_j);
        r["n_j"] = analysis::to_fraction_string(row.n_j);
        r["overcrowd_threshold"] =
            analysis::to_fraction_string(row.overcrowd_threshold);
        r["vacuous"] = row.vacuous;
        r["probes"] = row.probe_count;
        r["hold_bound"] = analysis::to_fraction_string(row.hold_bound);
        rows.push_back(std::move(r));
    }
    j["batches"] = std::move(rows);
    j["alpha"] = bounds.alpha;
    j["gamma"] = bounds.gamma;
    j["B"] = bounds.B;
    j["beta"] = analysis::to_fraction_string(bounds.beta);
    j["mu"] = bounds.mu;
    j["min_last_batch_probes"] = bounds.min_last_batch_probes;
    return j;
}

inline void write_bounds_csv(const analysis::BoundConstants& bounds,
                             std::ostream& out) {
    out << "n,j,pi,n_j,overcrowd_threshold,vacuous,probes,hold_bound,"
           "alpha,gamma,B,beta,mu,min_last_batch_probes\n";
    for (const auto& row : bounds.batches) {
        out << bounds.n << ',' << row.j << ','
            << analysis::to_fraction_string(row.pi_j) << ','
            << analysis::to_fraction_string(row.n_j) << ','
            << analysis::to_fraction_string(row.overcrowd_threshold) << ','
            << (row.vacuous ? 1 : 0) << ',' << row.probe_count << ','
            << analysis::to_fraction_string(row.hold_bound) << ','
            << bounds.alpha << ',' << bounds.gamma << ',' << bounds.B << ','
            << analysis::to_fraction_string(bounds.beta) << ',' << bounds.mu
            << ',' << bounds.min_last_batch_probes << '\n';
    }
}

// ---------------------------------------------------------------------------
// Healing reports
// ---------------------------------------------------------------------------

inline Json to_json(const HealingReport& report) {
    Json j;
    Json config;
    config["n"] = report.config.n;
    Json fills = Json::array();
    for (const auto& fill : report.config.fills)
        fills.push_back(Json{{"batch", fill.batch},
                             {"fraction", fill.fraction}});
    config["fills"] = std::move(fills);
    config["B"] = report.config.compactness.exponent_B;
    config["total_ops"] = report.config.total_ops;
    config["snapshot_interval"] = report.config.snapshot_interval;
    config["rng"] = to_json(report.config.rng);
    config["probes"] = report.config.probes_per_batch;
    j["config"] = std::move(config);

    j["holder_count"] = report.holder_count;
    j["ops_executed"] = report.ops_executed;
    j["steps_executed"] = report.steps_executed;
    j["initial_state"] = to_json(report.initial_state);
    j["final_state"] = to_json(report.final_state);
    if (report.convergence_op)
        j["convergence_op"] = *report.convergence_op;
    else
        j["convergence_op"] = nullptr;
    j["interval_indicators"] = report.interval_indicators;
    j["indicator_window_steps"] = report.indicator_window_steps;
    Json snapshots = Json::array();
    for (const auto& snapshot : report.snapshots)
        snapshots.push_back(to_json(snapshot));
    j["snapshots"] = std::move(snapshots);
    return j;
}

// ---------------------------------------------------------------------------
// Bench results
// ---------------------------------------------------------------------------

inline Json to_json(const BenchResult& result) {
    Json j;
    Json config;
    config["algo"] = to_string(result.config.algo);
    config["threads"] = result.config.threads;
    config["emulated"] = result.config.emulated;
    config["slots"] = result.config.slots;
    config["prefill_pct"] = result.config.prefill_pct;
    config["seconds"] = result.config.seconds;
    config["warmup_seconds"] = result.config.warmup_seconds;
    config["ops_budget"] = result.config.ops_budget;
    config["rng"] = to_json(result.config.rng);
    config["probes"] = result.config.probes_per_batch;
    config["padded_cells"] = result.config.padded_cells;
    config["ownership_checks"] = result.config.ownership_checks;
    j["config"] = std::move(config);

    j["structure_cells"] = result.structure_cells;
    j["hardware_threads"] = result.hardware_threads;
    j["elapsed_seconds"] = result.elapsed_seconds;
    j["gets"] = result.gets;
    j["frees"] = result.frees;
    j["total_ops"] = result.total_ops;
    j["throughput"] = result.throughput;
    j["avg_probes"] = result.avg_probes;
    j["stddev_probes"] = result.stddev_probes;
    j["max_probes_global"] = result.max_probes_global;
    j["max_probes_thread_avg"] = result.max_probes_thread_avg;
    j["backup_uses"] = result.backup_uses;
    j["batch_histogram"] = result.batch_histogram;
    j["probe_histogram"] = result.probe_histogram;
    j["prefill_ops"] = result.prefill_ops;
    j["warmup_ops"] = result.warmup_ops;
    j["ownership_violations"] = result.ownership_violations;
    j["aborted"] = result.aborted;
    j["error"] = result.error;
    return j;
}

inline constexpr const char* kBenchCsvHeader =
    "algo,threads,N,L,prefill,throughput,avg_probes,stddev_probes,"
    "max_probes,backup_uses";

// One row per run; max_probes is the raw global maximum (the JSON carries
// the thread-averaged variant as well).
inline void write_bench_csv(const std::vector<BenchResult>& results,
                            std::ostream& out) {
    out << kBenchCsvHeader << '\n';
    for (const auto& r : results) {
        out << to_string(r.config.algo) << ',' << r.config.threads << ','
            << r.config.emulated << ',' << r.config.slots << ','
            << r.config.prefill_pct << ',' << r.throughput << ','
            << r.avg_probes << ',' << r.stddev_probes << ','
            << r.max_probes_global << ',' << r.backup_uses << '\n';
    }
}

// Parse-back validation used by tests and by consumers that reload results.
inline BenchResult bench_result_from_json(const Json& j) {
    BenchResult result;
    const auto& config = j.at("config");
    result.config.algo = algo_kind_from_string(config.at("algo"));
    result.config.threads = config.at("threads");
    result.config.emulated = config.at("emulated");
    result.config.slots = config.at("slots");
    result.config.prefill_pct = config.at("prefill_pct");
    result.config.seconds = config.at("seconds");
    result.config.warmup_seconds = config.at("warmup_seconds");
    result.config.ops_budget = config.at("ops_budget");
    result.config.rng.kind =
        rng_kind_from_string(config.at("rng").at("kind"));
    result.config.rng.seed = config.at("rng").at("seed");
    result.config.probes_per_batch = config.at("probes");
    result.config.padded_cells = config.at("padded_cells");
    result.config.ownership_checks = config.at("ownership_checks");
    result.structure_cells = j.at("structure_cells");
    result.hardware_threads = j.at("hardware_threads");
    result.elapsed_seconds = j.at("elapsed_seconds");
    result.gets = j.at("gets");
    result.frees = j.at("frees");
    result.total_ops = j.at("total_ops");
    result.throughput = j.at("throughput");
    result.avg_probes = j.at("avg_probes");
    result.stddev_probes = j.at("stddev_probes");
    result.max_probes_global = j.at("max_probes_global");
    result.max_probes_thread_avg = j.at("max_probes_thread_avg");
    result.backup_uses = j.at("backup_uses");
    result.batch_histogram =
        j.at("batch_histogram").get<std::vector<std::uint64_t>>();
    result.probe_histogram =
        j.at("probe_histogram").get<std::vector<std::uint64_t>>();
    result.prefill_ops = j.at("prefill_ops");
    result.warmup_ops = j.at("warmup_ops");
    result.ownership_violations = j.at("ownership_violations");
    result.aborted = j.at("aborted");
    result.error = j.at("error");
    return result;
}

} // namespace levelarray
