// Command-line front end: benchmarks, simulator runs, healing experiments,
// and the analysis bounds table.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "levelarray/bench.hpp"
#include "levelarray/healing.hpp"
#include "levelarray/report.hpp"
#include "levelarray/simulator.hpp"

namespace {

using namespace levelarray;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty())
            items.push_back(item);
    return items;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open output file: " + path);
    out << content;
}

struct BenchCli {
    std::string algos = "level";
    std::string threads = "1";
    std::uint64_t emulated = 0;
    std::uint64_t slots = 0;
    double prefill = 50.0;
    double seconds = 10.0;
    double warmup = 1.0;
    std::uint64_t ops = 0;
    std::uint64_t seed = 1;
    std::string rng = "lehmer";
    std::uint64_t probes = 1;
    bool pad_cells = false;
    bool check = false;
    std::string out;
    std::string format = "csv";
};

int run_bench_command(const BenchCli& cli) {
    std::vector<BenchResult> results;
    for (const std::string& algo : split_list(cli.algos)) {
        for (const std::string& threads : split_list(cli.threads)) {
            BenchConfig config;
            config.algo = algo_kind_from_string(algo);
            config.threads = (std::uint32_t)std::stoul(threads);
            config.emulated = cli.emulated;
            config.slots = cli.slots;
            config.prefill_pct = cli.prefill;
            config.seconds = cli.seconds;
            config.warmup_seconds = cli.warmup;
            config.ops_budget = cli.ops;
            config.rng = RngSpec{rng_kind_from_string(cli.rng), cli.seed};
            config.probes_per_batch = cli.probes;
            config.padded_cells = cli.pad_cells;
            config.ownership_checks = cli.check;
            const BenchConfig normalized = normalize_bench_config(config);
            if (normalized.threads > std::thread::hardware_concurrency())
                std::cerr << "warning: " << normalized.threads
                          << " worker threads on "
                          << std::thread::hardware_concurrency()
                          << " hardware threads; throughput numbers will "
                             "reflect oversubscription\n";
            if (normalized.slots > 4 * normalized.emulated)
                std::cerr << "warning: slots exceed 4N\n";
            std::cerr << "bench: algo=" << algo
                      << " threads=" << normalized.threads
                      << " N=" << normalized.emulated
                      << " L=" << normalized.slots << " prefill=" << cli.prefill
                      << "%\n";
            results.push_back(run_bench(config));
            if (results.back().aborted) {
                std::cerr << "error: benchmark aborted: "
                          << results.back().error << "\n";
                return 2;
            }
        }
    }
    std::ostringstream body;
    if (cli.format == "json") {
        Json all = Json::array();
        for (const auto& r : results)
            all.push_back(to_json(r));
        body << all.dump(2) << "\n";
    } else {
        write_bench_csv(results, body);
    }
    write_output(cli.out, body.str());
    return 0;
}

struct SimRunCli {
    std::string config_path;
    std::string trace_out;
    bool include_steps = false;
    std::uint64_t sample_every = 0;
};

int run_sim_command(const SimRunCli& cli) {
    std::ifstream in(cli.config_path);
    if (!in)
        throw ConfigError("cannot open schedule file: " + cli.config_path);
    const Schedule schedule = parse_schedule(in);

    SimOptions options;
    options.sample_every_ops = cli.sample_every;
    const ExecutionTrace trace = run_schedule(schedule, options);

    const auto uniqueness = check_uniqueness(trace);
    const bool conservation = check_conservation(trace);
    const auto collect_validity = check_collect_validity(trace);
    std::string compact_why;
    const bool compact = validate_compact_trace(trace, &compact_why);

    std::cout << "steps executed:    " << trace.steps_executed << "\n"
              << "gets linearized:   " << trace.gets_linearized << "\n"
              << "frees linearized:  " << trace.frees_linearized << "\n"
              << "collects:          " << trace.collects.size() << "\n"
              << "final held count:  " << trace.final_held_count << "\n"
              << "uniqueness:        "
              << (uniqueness ? "VIOLATION" : "ok") << "\n"
              << "conservation:      " << (conservation ? "ok" : "VIOLATION")
              << "\n"
              << "collect validity:  "
              << (collect_validity ? "VIOLATION" : "ok") << "\n"
              << "compact (n^B):     " << (compact ? "yes" : "no") << "\n";
    if (uniqueness)
        std::cout << "  first violation: name " << uniqueness->name
                  << " at step " << uniqueness->step << "\n";
    if (!compact)
        std::cout << "  " << compact_why << "\n";

    if (!cli.trace_out.empty()) {
        std::ofstream out(cli.trace_out);
        if (!out)
            throw ConfigError("cannot open trace file: " + cli.trace_out);
        out << to_json(trace, cli.include_steps).dump(2) << "\n";
    }
    return (uniqueness || !conservation || collect_validity) ? 3 : 0;
}

struct HealCli {
    std::uint64_t n = 1ull << 16;
    std::string fill = "b0=0.25,b1=0.5";
    double B = 2.0;
    std::uint64_t ops = 100000;
    std::uint64_t interval = 4000;
    std::uint64_t seed = 1;
    std::string rng = "lehmer";
    std::uint64_t probes = 16;
    std::string out;
    std::string format = "csv";
};

int run_heal_command(const HealCli& cli) {
    HealingConfig config;
    config.n = cli.n;
    config.fills = parse_fill_spec(cli.fill);
    config.compactness = CompactnessSpec{cli.B};
    config.total_ops = cli.ops;
    config.snapshot_interval = cli.interval;
    config.rng = RngSpec{rng_kind_from_string(cli.rng), cli.seed};
    config.probes_per_batch = cli.probes;

    const HealingReport report = run_healing_experiment(config);
    std::cerr << "healing: holders=" << report.holder_count
              << " ops=" << report.ops_executed
              << " steps=" << report.steps_executed << " convergence_op=";
    if (report.convergence_op)
        std::cerr << *report.convergence_op;
    else
        std::cerr << "none";
    std::cerr << "\n";

    std::ostringstream body;
    if (cli.format == "json")
        body << to_json(report).dump(2) << "\n";
    else
        write_healing_csv(report, body);
    write_output(cli.out, body.str());
    return report.convergence_op ? 0 : 4;
}

struct BoundsCli {
    std::uint64_t n = 0;
    std::uint64_t probes = 1;
    double alpha = 1.0;
    double gamma = 1.0;
    double B = 2.0;
    std::string out;
    std::string format = "json";
};

int run_bounds_command(const BoundsCli& cli) {
    const auto bounds =
        analysis::bound_constants(cli.n, cli.probes, cli.alpha, cli.gamma,
                                  cli.B);
    std::ostringstream body;
    if (cli.format == "csv")
        write_bounds_csv(bounds, body);
    else
        body << to_json(bounds).dump(2) << "\n";
    write_output(cli.out, body.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Long-lived renaming toolkit: level-array structure, "
                 "baselines, oblivious-adversary simulator, and benchmarks"};
    app.require_subcommand(1);

    BenchCli bench_cli;
    auto* bench = app.add_subcommand("bench", "Run the register/deregister "
                                              "benchmark");
    bench->add_option("--algo", bench_cli.algos,
                      "Algorithms: level|random|linear|det, comma list");
    bench->add_option("--threads", bench_cli.threads,
                      "Worker thread counts, comma list");
    bench->add_option("--emulated", bench_cli.emulated,
                      "Emulated holder count N (default 1000 per thread)");
    bench->add_option("--slots", bench_cli.slots,
                      "Array slots L (default 2N)");
    bench->add_option("--prefill", bench_cli.prefill,
                      "Prefill percentage in [0,100]");
    bench->add_option("--seconds", bench_cli.seconds,
                      "Timed duration per run");
    bench->add_option("--warmup", bench_cli.warmup,
                      "Warmup seconds excluded from stats");
    bench->add_option("--ops", bench_cli.ops,
                      "Total op budget; overrides --seconds");
    bench->add_option("--seed", bench_cli.seed, "Master seed");
    bench->add_option("--rng", bench_cli.rng, "lehmer|marsaglia");
    bench->add_option("--probes", bench_cli.probes,
                      "Trials per batch (level only)");
    bench->add_flag("--pad-cells", bench_cli.pad_cells,
                    "Pad cells to cache-line size");
    bench->add_flag("--check", bench_cli.check,
                    "Enable the debug ownership checker");
    bench->add_option("--out", bench_cli.out, "Output file (default stdout)");
    bench->add_option("--format", bench_cli.format, "csv|json");

    auto* sim = app.add_subcommand("sim", "Deterministic simulator");
    SimRunCli sim_cli;
    auto* sim_run = sim->add_subcommand("run", "Replay a schedule file");
    sim_run->add_option("--config", sim_cli.config_path, "Schedule file")
        ->required();
    sim_run->add_option("--trace-out", sim_cli.trace_out,
                        "Write the execution trace as JSON");
    sim_run->add_flag("--steps-in-trace", sim_cli.include_steps,
                      "Embed the full step string in the trace");
    sim_run->add_option("--sample-every", sim_cli.sample_every,
                        "Balance sample interval in operations");

    HealCli heal_cli;
    auto* sim_heal =
        sim->add_subcommand("heal", "Run the self-healing experiment");
    sim_heal->add_option("--n", heal_cli.n, "Structure capacity");
    sim_heal->add_option("--fill", heal_cli.fill,
                         "Injected fill, e.g. b0=0.25,b1=0.5");
    sim_heal->add_option("--B", heal_cli.B, "Compactness exponent");
    sim_heal->add_option("--ops", heal_cli.ops, "Operation budget");
    sim_heal->add_option("--interval", heal_cli.interval,
                         "Snapshot interval in operations");
    sim_heal->add_option("--seed", heal_cli.seed, "Master seed");
    sim_heal->add_option("--rng", heal_cli.rng, "lehmer|marsaglia");
    sim_heal->add_option("--probes", heal_cli.probes,
                         "Trials per batch (16 = theory mode)");
    sim_heal->add_option("--out", heal_cli.out, "Output file");
    sim_heal->add_option("--format", heal_cli.format, "csv|json");

    BoundsCli bounds_cli;
    auto* bounds = app.add_subcommand("bounds", "Print the bound-constants "
                                                "table for a capacity");
    bounds->add_option("--n", bounds_cli.n, "Capacity (power of two)")
        ->required();
    bounds->add_option("--probes", bounds_cli.probes, "Trials per batch");
    bounds->add_option("--alpha", bounds_cli.alpha, "Execution exponent");
    bounds->add_option("--gamma", bounds_cli.gamma, "Failure exponent");
    bounds->add_option("--B", bounds_cli.B, "Compactness exponent");
    bounds->add_option("--out", bounds_cli.out, "Output file");
    bounds->add_option("--format", bounds_cli.format, "json|csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (bench->parsed())
            return run_bench_command(bench_cli);
        if (sim->parsed()) {
            if (sim_run->parsed())
                return run_sim_command(sim_cli);
            if (sim_heal->parsed())
                return run_heal_command(heal_cli);
            std::cerr << "sim needs a subcommand (run | heal)\n";
            return 1;
        }
        if (bounds->parsed())
            return run_bounds_command(bounds_cli);
    } catch (const levelarray::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
