#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "levelarray/report.hpp"
#include "levelarray/simulator.hpp"

using namespace levelarray;

namespace {

Schedule make_base(std::uint64_t n, std::uint32_t processes) {
    Schedule schedule;
    schedule.structure_size = n;
    schedule.algo = AlgoKind::Level;
    schedule.probes_per_batch = 1;
    schedule.compactness_B = 2.0;
    schedule.process_count = processes;
    schedule.rng = RngSpec{RngKind::LehmerParkMiller, 101};
    return schedule;
}

} // namespace

TEST_CASE("a single get/free schedule acquires and releases one name") {
    Schedule schedule = make_base(16, 1);
    schedule.inputs = {{ScheduleOp::Get, ScheduleOp::Free}};
    schedule.steps.assign(8, 0);

    const ExecutionTrace trace = run_schedule(schedule);
    REQUIRE(trace.gets_linearized == 1);
    REQUIRE(trace.frees_linearized == 1);
    CHECK(trace.final_held_count == 0);
    // The empty-array get wins its first probe; the free takes one step.
    REQUIRE(trace.ops.size() == 2);
    CHECK(trace.ops[0].kind == ScheduleOp::Get);
    CHECK(trace.ops[0].stats.probes == 1);
    CHECK(trace.ops[0].lin_step == 0);
    CHECK(trace.ops[1].kind == ScheduleOp::Free);
    CHECK(trace.ops[1].lin_step == 1);
    CHECK(trace.implicit_calls == 6);
    CHECK_FALSE(check_uniqueness(trace).has_value());
    CHECK(check_conservation(trace));
}

TEST_CASE("sixteen one-shot processes obtain sixteen distinct names") {
    Schedule schedule = make_base(16, 16);
    schedule.inputs.assign(16, {ScheduleOp::Get});
    for (int round = 0; round < 40; ++round)
        for (std::uint32_t pid = 0; pid < 16; ++pid)
            schedule.steps.push_back(pid);

    const ExecutionTrace trace = run_schedule(schedule);
    REQUIRE(trace.gets_linearized == 16);
    std::set<Name> names;
    for (const auto& op : trace.ops)
        if (op.kind == ScheduleOp::Get && op.completed)
            names.insert(op.name);
    CHECK(names.size() == 16);
    CHECK_FALSE(check_uniqueness(trace).has_value());
    CHECK(trace.final_held_count == 16);
}

TEST_CASE("collect reads every cell and reports held names with read steps") {
    Schedule schedule = make_base(16, 2);
    schedule.inputs = {{ScheduleOp::Get},
                       {ScheduleOp::Collect}};
    schedule.steps.push_back(0); // the get completes at step 0
    const BatchLayout layout = build_layout(16, 1);
    for (std::uint64_t i = 0; i < layout.cell_count(); ++i)
        schedule.steps.push_back(1);

    const ExecutionTrace trace = run_schedule(schedule);
    REQUIRE(trace.collects.size() == 1);
    const CollectRecord& collect = trace.collects[0];
    CHECK(collect.completed);
    REQUIRE(collect.observed.size() == 1);
    CHECK(collect.observed[0].first == trace.ops[0].name);
    CHECK_FALSE(check_collect_validity(trace).has_value());
}

TEST_CASE("schedule errors carry the offending index") {
    Schedule schedule = make_base(16, 1);
    schedule.inputs = {{ScheduleOp::Free}};
    schedule.steps.assign(2, 0);
    REQUIRE_THROWS_AS(run_schedule(schedule), ScheduleError);
}

TEST_CASE("capacity exhaustion inside the simulator is reported") {
    Schedule schedule = make_base(2, 1);
    schedule.inputs = {{ScheduleOp::Get}};
    schedule.steps.assign(16, 0);
    auto renamer = make_renamer_for(schedule);
    for (std::uint64_t cell = 0; cell < renamer->cell_count(); ++cell)
        REQUIRE(renamer->try_acquire_cell(cell, 77));
    REQUIRE_THROWS_AS(run_schedule(*renamer, schedule), CapacityError);
}

TEST_CASE("identical schedules serialize to identical traces") {
    CompactGenOptions options;
    options.collect_probability = 0.1;
    options.probes_per_batch = 2;
    const Schedule schedule = generate_compact_schedule(
        64, 6, 3000, 2.0, RngSpec{RngKind::MarsagliaXorshift, 77}, options);

    const ExecutionTrace first = run_schedule(schedule);
    const ExecutionTrace second = run_schedule(schedule);
    CHECK(to_json(first).dump() == to_json(second).dump());

    Schedule different = schedule;
    different.rng.seed = 78;
    const ExecutionTrace third = run_schedule(different);
    CHECK(to_json(first).dump() != to_json(third).dump());
}

TEST_CASE("fuzzed compact schedules uphold every invariant") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        CompactGenOptions options;
        options.collect_probability = 0.05;
        const Schedule schedule = generate_compact_schedule(
            64, 16, 20000, 2.0, RngSpec{RngKind::MarsagliaXorshift, seed},
            options);
        const ExecutionTrace trace = run_schedule(schedule);
        INFO("seed " << seed);
        CHECK_FALSE(check_uniqueness(trace).has_value());
        CHECK(check_conservation(trace));
        CHECK_FALSE(check_collect_validity(trace).has_value());
        CHECK(validate_compact_trace(trace));
    }
}

TEST_CASE("the uniqueness checker catches a corrupted trace") {
    Schedule schedule = make_base(16, 2);
    schedule.inputs = {{ScheduleOp::Get}, {ScheduleOp::Get}};
    schedule.steps = {0, 1};
    ExecutionTrace trace = run_schedule(schedule);
    REQUIRE(trace.ops.size() == 2);
    // Forge the second get to duplicate the first holder's name.
    trace.ops[1].name = trace.ops[0].name;
    const auto violation = check_uniqueness(trace);
    REQUIRE(violation.has_value());
    CHECK(violation->name == trace.ops[0].name);
    CHECK(violation->holders.size() == 2);
}

TEST_CASE("the validity checker catches a forged collect observation") {
    Schedule schedule = make_base(16, 2);
    schedule.inputs = {{ScheduleOp::Get}, {ScheduleOp::Collect}};
    schedule.steps.push_back(0);
    for (std::uint64_t i = 0; i < build_layout(16, 1).cell_count(); ++i)
        schedule.steps.push_back(1);
    ExecutionTrace trace = run_schedule(schedule);
    REQUIRE(trace.collects.size() == 1);
    trace.collects[0].observed.emplace_back(Name{7}, 3); // never held
    const auto violation = check_collect_validity(trace);
    REQUIRE(violation.has_value());
    CHECK(violation->name == 7);
}

TEST_CASE("conservation fails on a forged trace") {
    Schedule schedule = make_base(16, 1);
    schedule.inputs = {{ScheduleOp::Get, ScheduleOp::Free}};
    schedule.steps.assign(4, 0);
    ExecutionTrace trace = run_schedule(schedule);
    trace.frees_linearized = 0; // forge a mismatch
    CHECK_FALSE(check_conservation(trace));
}

TEST_CASE("balance reports apply the exact thresholds") {
    const std::uint64_t n = 1ull << 16;
    const BatchLayout layout = build_layout(n, 16);

    SECTION("occupancy at the threshold is overcrowded") {
        Schedule schedule = make_base(n, 8192);
        schedule.probes_per_batch = 16;
        schedule.inputs.assign(8192, {});
        schedule.injected_hold.resize(8192);
        for (std::uint32_t pid = 0; pid < 8192; ++pid)
            schedule.injected_hold[pid] =
                layout.name_of_cell(layout.batch_offset[1] + pid);
        const ExecutionTrace trace = run_schedule(schedule);
        const BalanceReport report = balance_report(trace, 0);
        REQUIRE(report.occupancy[1] == 8192);
        CHECK(report.overcrowded[1]);
        CHECK_FALSE(report.fully_balanced);
        CHECK(report.balanced_up_to == 0);
    }
    SECTION("one below the threshold is balanced") {
        Schedule schedule = make_base(n, 8191);
        schedule.probes_per_batch = 16;
        schedule.inputs.assign(8191, {});
        schedule.injected_hold.resize(8191);
        for (std::uint32_t pid = 0; pid < 8191; ++pid)
            schedule.injected_hold[pid] =
                layout.name_of_cell(layout.batch_offset[1] + pid);
        const ExecutionTrace trace = run_schedule(schedule);
        const BalanceReport report = balance_report(trace, 0);
        REQUIRE(report.occupancy[1] == 8191);
        CHECK_FALSE(report.overcrowded[1]);
        CHECK(report.fully_balanced);
        CHECK(report.balanced_up_to == 3);
    }
}

TEST_CASE("an empty state is fully balanced") {
    Schedule schedule = make_base(1ull << 16, 1);
    schedule.inputs = {{}};
    const ExecutionTrace trace = run_schedule(schedule);
    const BalanceReport report = balance_report(trace, 0);
    CHECK(report.fully_balanced);
    CHECK(report.balanced_up_to == 3);
}

TEST_CASE("boundary compact schedule: Get, n^B - 2 Calls, Free") {
    // n = 4, B = 2: the bound is 16 steps. On an empty array the Get wins
    // its first probe, so the Free lands at step 15 < 0 + 16.
    Schedule schedule = make_base(4, 1);
    schedule.inputs = {{ScheduleOp::Get}};
    for (int i = 0; i < 14; ++i)
        schedule.inputs[0].push_back(ScheduleOp::Call);
    schedule.inputs[0].push_back(ScheduleOp::Free);
    schedule.steps.assign(16, 0);
    const ExecutionTrace trace = run_schedule(schedule);
    CHECK(validate_compact_trace(trace));

    // One more Call pushes the Free onto the deadline.
    Schedule late = schedule;
    late.inputs[0].insert(late.inputs[0].end() - 1, ScheduleOp::Call);
    late.steps.assign(17, 0);
    const ExecutionTrace late_trace = run_schedule(late);
    CHECK_FALSE(validate_compact_trace(late_trace));
}

TEST_CASE("baseline algorithms run under the same simulator checkers") {
    for (AlgoKind algo :
         {AlgoKind::Random, AlgoKind::Linear, AlgoKind::Deterministic}) {
        CompactGenOptions options;
        options.algo = algo;
        const Schedule schedule = generate_compact_schedule(
            64, 8, 5000, 2.0, RngSpec{RngKind::LehmerParkMiller, 13},
            options);
        const ExecutionTrace trace = run_schedule(schedule);
        INFO("algo " << to_string(algo));
        CHECK_FALSE(check_uniqueness(trace).has_value());
        CHECK(check_conservation(trace));
        CHECK(trace.gets_linearized > 0);
    }
}
