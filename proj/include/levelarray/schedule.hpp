#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "levelarray/common.hpp"
#include "levelarray/layout.hpp"
#include "levelarray/renamer.hpp"
#include "levelarray/rng.hpp"

namespace levelarray {

enum class ScheduleOp : std::uint8_t { Get, Free, Collect, Call };

// Stream indices above 2^40 are reserved for infrastructure streams so they
// can never collide with process IDs.
inline constexpr std::uint64_t kScheduleStreamSalt = (1ull << 40) + 1;
inline constexpr std::uint64_t kGeneratorStreamSalt = (1ull << 40) + 2;
inline constexpr std::uint64_t kInjectionStreamSalt = (1ull << 40) + 3;

inline char to_token(ScheduleOp op) {
    switch (op) {
    case ScheduleOp::Get: return 'G';
    case ScheduleOp::Free: return 'F';
    case ScheduleOp::Collect: return 'C';
    case ScheduleOp::Call: return '.';
    }
    return '?';
}

inline ScheduleOp schedule_op_from_token(char token, std::uint64_t index) {
    switch (token) {
    case 'G': return ScheduleOp::Get;
    case 'F': return ScheduleOp::Free;
    case 'C': return ScheduleOp::Collect;
    case '.': return ScheduleOp::Call;
    default:
        throw ScheduleError(std::string("unknown op token '") + token + "'",
                            index);
    }
}

// Every Get's matching Free must complete within n^B steps of the Get's
// first step.
struct CompactnessSpec {
    double exponent_B = 2.0;

    std::uint64_t bound_steps(std::uint64_t n) const {
        if (exponent_B < 0)
            throw ConfigError("compactness exponent must be non-negative");
        const double b = std::pow((double)n, exponent_B);
        if (b >= 9.2e18)
            return ~std::uint64_t{0};
        return (std::uint64_t)b;
    }
};

// A full oblivious-adversary execution description: the structure under
// test, the per-process inputs, and the step string naming which process
// acts at each time step. Everything is fixed before execution.
struct Schedule {
    std::uint64_t structure_size = 0; // level capacity request / flat slots
    AlgoKind algo = AlgoKind::Level;
    std::uint64_t probes_per_batch = 1;
    double compactness_B = 2.0;
    std::uint32_t process_count = 0;
    RngSpec rng;
    std::vector<std::vector<ScheduleOp>> inputs;
    std::vector<std::uint32_t> steps;
    // Per-process name held before step 0 (injected state); such processes
    // alternate starting with Free.
    std::vector<std::optional<Name>> injected_hold;
    // When set, a process whose input runs out restarts it from the top.
    bool cyclic_inputs = false;

    bool process_injected(std::uint32_t pid) const {
        return pid < injected_hold.size() && injected_hold[pid].has_value();
    }
};

// Checks the structural invariants: one input per process, alternation
// (starting with Get, or Free for processes holding injected names), and
// step entries naming known processes.
inline void validate_schedule(const Schedule& schedule) {
    if (schedule.process_count == 0)
        throw ConfigError("schedule needs at least one process");
    if (schedule.process_count > schedule.structure_size)
        throw ConfigError("process count exceeds structure capacity");
    if (schedule.inputs.size() != schedule.process_count)
        throw ConfigError("need exactly one input sequence per process");
    for (std::uint32_t pid = 0; pid < schedule.process_count; ++pid) {
        bool holding = schedule.process_injected(pid);
        const auto& input = schedule.inputs[pid];
        for (std::uint64_t i = 0; i < input.size(); ++i) {
            if (input[i] == ScheduleOp::Get) {
                if (holding)
                    throw ScheduleError("process " + std::to_string(pid) +
                                            ": Get while already holding",
                                        i);
                holding = true;
            } else if (input[i] == ScheduleOp::Free) {
                if (!holding)
                    throw ScheduleError("process " + std::to_string(pid) +
                                            ": Free without a held name",
                                        i);
                holding = false;
            }
        }
        if (schedule.cyclic_inputs &&
            holding != schedule.process_injected(pid))
            throw ConfigError("cyclic input for process " +
                              std::to_string(pid) +
                              " does not return to its starting hold state");
    }
    for (std::uint64_t i = 0; i < schedule.steps.size(); ++i) {
        if (schedule.steps[i] >= schedule.process_count)
            throw ScheduleError("unknown process ID " +
                                    std::to_string(schedule.steps[i]),
                                i);
    }
}

// ---------------------------------------------------------------------------
// Text format
//
//   n 64
//   algo level
//   probes 1
//   B 2
//   processes 2
//   rng lehmer 12345
//   input 0 G F C .
//   input 1 G . F
//   steps 0 1 0 1 1 0
//
// `steps auto <count>` generates the step string from the header rng as
// shuffled round-robin rounds, which keeps any input compact for reasonable
// B. Lines starting with '#' are comments.
// ---------------------------------------------------------------------------

inline std::string serialize_schedule(const Schedule& schedule) {
    std::ostringstream out;
    out << "n " << schedule.structure_size << "\n";
    out << "algo " << to_string(schedule.algo) << "\n";
    out << "probes " << schedule.probes_per_batch << "\n";
    out << "B " << schedule.compactness_B << "\n";
    out << "processes " << schedule.process_count << "\n";
    out << "rng " << to_string(schedule.rng.kind) << " " << schedule.rng.seed
        << "\n";
    for (std::uint32_t pid = 0; pid < schedule.process_count; ++pid) {
        out << "input " << pid;
        for (ScheduleOp op : schedule.inputs[pid])
            out << ' ' << to_token(op);
        out << "\n";
    }
    out << "steps";
    for (std::uint32_t pid : schedule.steps)
        out << ' ' << pid;
    out << "\n";
    return out.str();
}

namespace detail {
inline std::vector<std::uint32_t>
shuffled_rounds(std::uint32_t process_count, std::uint64_t total_steps,
                Rng& rng) {
    std::vector<std::uint32_t> order(process_count);
    for (std::uint32_t i = 0; i < process_count; ++i)
        order[i] = i;
    std::vector<std::uint32_t> steps;
    steps.reserve(total_steps);
    while (steps.size() < total_steps) {
        for (std::uint32_t i = process_count - 1; i > 0; --i)
            std::swap(order[i], order[rng.next_below(i + 1)]);
        for (std::uint32_t pid : order) {
            steps.push_back(pid);
            if (steps.size() == total_steps)
                break;
        }
    }
    return steps;
}
} // namespace detail

inline Schedule parse_schedule(std::istream& in) {
    Schedule schedule;
    std::optional<std::uint64_t> auto_steps;
    std::string line;
    std::uint64_t line_no = 0;
    bool saw_processes = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        if (key.empty())
            continue;
        if (key == "n") {
            fields >> schedule.structure_size;
        } else if (key == "algo") {
            std::string v;
            fields >> v;
            schedule.algo = algo_kind_from_string(v);
        } else if (key == "probes") {
            fields >> schedule.probes_per_batch;
        } else if (key == "B") {
            fields >> schedule.compactness_B;
        } else if (key == "processes") {
            fields >> schedule.process_count;
            schedule.inputs.assign(schedule.process_count, {});
            saw_processes = true;
        } else if (key == "rng") {
            std::string kind;
            fields >> kind >> schedule.rng.seed;
            schedule.rng.kind = rng_kind_from_string(kind);
        } else if (key == "input") {
            if (!saw_processes)
                throw ScheduleError("input line before processes line",
                                    line_no);
            std::uint32_t pid = 0;
            fields >> pid;
            if (pid >= schedule.process_count)
                throw ScheduleError("input for unknown process " +
                                        std::to_string(pid),
                                    line_no);
            std::string token;
            while (fields >> token)
                schedule.inputs[pid].push_back(
                    schedule_op_from_token(token[0], line_no));
        } else if (key == "steps") {
            std::string first;
            if (!(fields >> first))
                throw ScheduleError("empty steps line", line_no);
            if (first == "auto") {
                std::uint64_t count = 0;
                fields >> count;
                auto_steps = count;
            } else {
                schedule.steps.push_back(
                    (std::uint32_t)std::stoul(first));
                std::uint32_t pid = 0;
                while (fields >> pid)
                    schedule.steps.push_back(pid);
            }
        } else {
            throw ScheduleError("unknown directive '" + key + "'", line_no);
        }
        if (fields.fail() && !fields.eof())
            throw ScheduleError("malformed line", line_no);
    }
    if (auto_steps) {
        Rng rng = make_stream(schedule.rng, kScheduleStreamSalt);
        schedule.steps = detail::shuffled_rounds(schedule.process_count,
                                                 *auto_steps, rng);
    }
    validate_schedule(schedule);
    return schedule;
}

inline Schedule parse_schedule(const std::string& text) {
    std::istringstream in(text);
    return parse_schedule(in);
}

// ---------------------------------------------------------------------------
// Compact schedule generation and validation
// ---------------------------------------------------------------------------

struct CompactGenOptions {
    std::uint64_t max_call_padding = 4;  // Calls after a Get or Free
    double collect_probability = 0.0;    // chance of a Collect between cycles
    AlgoKind algo = AlgoKind::Level;
    std::uint64_t probes_per_batch = 1;
};

// Worst-case low-level steps a single operation can consume.
inline std::uint64_t worst_op_steps(ScheduleOp op, std::uint64_t max_get_steps,
                                    std::uint64_t cell_count) {
    switch (op) {
    case ScheduleOp::Get: return max_get_steps;
    case ScheduleOp::Collect: return cell_count;
    default: return 1;
    }
}

// Builds a random well-formed schedule that is compact by construction:
// scheduling proceeds in shuffled round-robin rounds (so consecutive steps
// of one process are at most 2P-1 global steps apart) and input cycles are
// Get, a Calls, Free, b Calls with bounded padding. Fails with a config
// error when even the worst case cannot meet the n^B bound.
inline Schedule generate_compact_schedule(std::uint64_t n,
                                          std::uint32_t process_count,
                                          std::uint64_t total_steps, double B,
                                          RngSpec rng_spec,
                                          CompactGenOptions options = {}) {
    if (process_count == 0 || process_count > n)
        throw ConfigError("process count must be in [1, n]");

    Schedule schedule;
    schedule.structure_size = n;
    schedule.algo = options.algo;
    schedule.probes_per_batch = options.probes_per_batch;
    schedule.compactness_B = B;
    schedule.process_count = process_count;
    schedule.rng = rng_spec;

    std::uint64_t max_get_steps;
    std::uint64_t cell_count;
    if (options.algo == AlgoKind::Level) {
        const BatchLayout layout = build_layout(n, options.probes_per_batch);
        max_get_steps = layout.max_probe_steps();
        cell_count = layout.cell_count();
    } else {
        max_get_steps = n; // a full sweep of the flat array
        cell_count = n;
    }

    const std::uint64_t bound =
        CompactnessSpec{B}.bound_steps(round_up_to_power_of_two(n));
    // A Free lands at most (get steps + padding + 1) process-steps after its
    // Get starts, and shuffled rounds keep process-steps at most 2P-1 apart.
    const std::uint64_t worst_span =
        max_get_steps + options.max_call_padding + 1;
    const std::uint64_t max_gap = 2ull * process_count - 1;
    if (worst_span > bound / std::max<std::uint64_t>(max_gap, 1))
        throw ConfigError(
            "compactness bound n^B is infeasible for this configuration");

    Rng rng = make_stream(rng_spec, kGeneratorStreamSalt);

    // Enough input to cover the step budget even if every Get wins its
    // first probe; the engine pads exhausted inputs with implicit Calls.
    const std::uint64_t steps_per_process =
        total_steps / process_count + 2;
    schedule.inputs.assign(process_count, {});
    for (std::uint32_t pid = 0; pid < process_count; ++pid) {
        auto& input = schedule.inputs[pid];
        std::uint64_t min_steps = 0;
        while (min_steps < steps_per_process) {
            if (options.collect_probability > 0 &&
                rng.next_below(1000) <
                    (std::uint64_t)(options.collect_probability * 1000)) {
                input.push_back(ScheduleOp::Collect);
                min_steps += cell_count;
            }
            input.push_back(ScheduleOp::Get);
            const std::uint64_t pad1 =
                rng.next_below(options.max_call_padding + 1);
            input.insert(input.end(), pad1, ScheduleOp::Call);
            input.push_back(ScheduleOp::Free);
            const std::uint64_t pad2 =
                rng.next_below(options.max_call_padding + 1);
            input.insert(input.end(), pad2, ScheduleOp::Call);
            min_steps += 1 + pad1 + 1 + pad2;
        }
    }

    schedule.steps =
        detail::shuffled_rounds(process_count, total_steps, rng);
    validate_schedule(schedule);
    return schedule;
}

// Conservative structural check: assumes every operation takes its
// worst-case step count and verifies each Get-to-Free span against n^B
// using the actual per-process scheduling gaps in the step string. A pass
// guarantees the executed schedule is compact.
inline bool validate_compact_structural(const Schedule& schedule,
                                        std::string* why = nullptr) {
    std::uint64_t max_get_steps;
    std::uint64_t cell_count;
    const std::uint64_t cap = round_up_to_power_of_two(schedule.structure_size);
    if (schedule.algo == AlgoKind::Level) {
        const BatchLayout layout =
            build_layout(schedule.structure_size, schedule.probes_per_batch);
        max_get_steps = layout.max_probe_steps();
        cell_count = layout.cell_count();
    } else {
        max_get_steps = schedule.structure_size;
        cell_count = schedule.structure_size;
    }
    const std::uint64_t bound =
        CompactnessSpec{schedule.compactness_B}.bound_steps(cap);

    // Largest distance between consecutive steps of each process.
    std::vector<std::uint64_t> last_seen(schedule.process_count,
                                         ~std::uint64_t{0});
    std::vector<std::uint64_t> max_gap(schedule.process_count, 1);
    for (std::uint64_t t = 0; t < schedule.steps.size(); ++t) {
        const std::uint32_t pid = schedule.steps[t];
        if (last_seen[pid] != ~std::uint64_t{0})
            max_gap[pid] = std::max(max_gap[pid], t - last_seen[pid]);
        last_seen[pid] = t;
    }

    for (std::uint32_t pid = 0; pid < schedule.process_count; ++pid) {
        const auto& input = schedule.inputs[pid];
        bool holding = schedule.process_injected(pid);
        std::uint64_t span = holding ? 1 : 0; // injected Frees count from 0
        for (ScheduleOp op : input) {
            if (op == ScheduleOp::Get) {
                holding = true;
                span = max_get_steps;
            } else if (!holding) {
                continue;
            } else if (op == ScheduleOp::Free) {
                span += 1;
                if (span * max_gap[pid] >= bound) {
                    if (why)
                        *why = "process " + std::to_string(pid) +
                               ": worst-case Get-to-Free span of " +
                               std::to_string(span) + " steps times gap " +
                               std::to_string(max_gap[pid]) +
                               " reaches the bound " + std::to_string(bound);
                    return false;
                }
                holding = false;
            } else {
                span += worst_op_steps(op, max_get_steps, cell_count);
            }
        }
    }
    return true;
}

} // namespace levelarray
