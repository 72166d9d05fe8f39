#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "levelarray/schedule.hpp"

using namespace levelarray;

namespace {
Schedule tiny_schedule() {
    Schedule schedule;
    schedule.structure_size = 16;
    schedule.algo = AlgoKind::Level;
    schedule.probes_per_batch = 1;
    schedule.compactness_B = 2.0;
    schedule.process_count = 2;
    schedule.rng = RngSpec{RngKind::LehmerParkMiller, 9};
    schedule.inputs = {{ScheduleOp::Get, ScheduleOp::Free, ScheduleOp::Collect,
                        ScheduleOp::Call},
                       {ScheduleOp::Get, ScheduleOp::Call, ScheduleOp::Free}};
    schedule.steps = {0, 1, 0, 1, 1, 0, 0, 1};
    return schedule;
}
} // namespace

TEST_CASE("schedules round-trip through the text format") {
    const Schedule original = tiny_schedule();
    const std::string text = serialize_schedule(original);
    const Schedule parsed = parse_schedule(text);
    CHECK(parsed.structure_size == original.structure_size);
    CHECK(parsed.algo == original.algo);
    CHECK(parsed.probes_per_batch == original.probes_per_batch);
    CHECK(parsed.compactness_B == original.compactness_B);
    CHECK(parsed.process_count == original.process_count);
    CHECK(parsed.rng == original.rng);
    CHECK(parsed.inputs == original.inputs);
    CHECK(parsed.steps == original.steps);
    CHECK(serialize_schedule(parsed) == text);
}

TEST_CASE("the parser honours comments and auto steps") {
    const std::string text =
        "# comment\n"
        "n 16\n"
        "processes 2\n"
        "rng marsaglia 4\n"
        "input 0 G F\n"
        "input 1 G F\n"
        "steps auto 64\n";
    const Schedule parsed = parse_schedule(text);
    REQUIRE(parsed.steps.size() == 64);
    for (const std::uint32_t pid : parsed.steps)
        CHECK(pid < 2);
    // Shuffled rounds: both processes appear in every window of four.
    const Schedule again = parse_schedule(text);
    CHECK(again.steps == parsed.steps);
}

TEST_CASE("malformed schedules are rejected with an index") {
    SECTION("Free before Get") {
        Schedule s = tiny_schedule();
        s.inputs[1] = {ScheduleOp::Free};
        REQUIRE_THROWS_AS(validate_schedule(s), ScheduleError);
    }
    SECTION("double Get") {
        Schedule s = tiny_schedule();
        s.inputs[0] = {ScheduleOp::Get, ScheduleOp::Get};
        REQUIRE_THROWS_AS(validate_schedule(s), ScheduleError);
    }
    SECTION("unknown process in steps") {
        Schedule s = tiny_schedule();
        s.steps.push_back(7);
        try {
            validate_schedule(s);
            FAIL("expected a schedule error");
        } catch (const ScheduleError& e) {
            CHECK(e.index == s.steps.size() - 1);
        }
    }
    SECTION("process count above capacity") {
        Schedule s = tiny_schedule();
        s.process_count = 64;
        s.inputs.assign(64, {ScheduleOp::Get});
        REQUIRE_THROWS_AS(validate_schedule(s), ConfigError);
    }
    SECTION("unknown token") {
        REQUIRE_THROWS_AS(parse_schedule("n 4\nprocesses 1\ninput 0 G X\n"),
                          ScheduleError);
    }
}

TEST_CASE("compact generation produces valid, compact schedules") {
    CompactGenOptions options;
    options.collect_probability = 0.2;
    const Schedule schedule = generate_compact_schedule(
        64, 8, 4000, 2.0, RngSpec{RngKind::LehmerParkMiller, 5}, options);
    REQUIRE(schedule.steps.size() == 4000);
    REQUIRE(schedule.inputs.size() == 8);

    std::string why;
    CHECK(validate_compact_structural(schedule, &why));

    bool has_collect = false, has_call = false;
    for (const auto& input : schedule.inputs)
        for (const ScheduleOp op : input) {
            has_collect |= op == ScheduleOp::Collect;
            has_call |= op == ScheduleOp::Call;
        }
    CHECK(has_collect);
    CHECK(has_call);

    // Same seed, same schedule.
    const Schedule again = generate_compact_schedule(
        64, 8, 4000, 2.0, RngSpec{RngKind::LehmerParkMiller, 5}, options);
    CHECK(again.steps == schedule.steps);
    CHECK(again.inputs == schedule.inputs);
}

TEST_CASE("an infeasible compactness bound is a config error") {
    // n^0 = 1: a Free can never complete within one step of its Get.
    REQUIRE_THROWS_AS(
        generate_compact_schedule(64, 8, 100, 0.0,
                                  RngSpec{RngKind::LehmerParkMiller, 5}),
        ConfigError);
}

TEST_CASE("the structural validator flags span violations") {
    Schedule schedule;
    schedule.structure_size = 4;
    schedule.algo = AlgoKind::Level;
    schedule.probes_per_batch = 1;
    schedule.compactness_B = 1.0; // bound of 4 steps
    schedule.process_count = 1;
    schedule.rng = RngSpec{RngKind::LehmerParkMiller, 1};
    schedule.inputs = {{ScheduleOp::Get, ScheduleOp::Call, ScheduleOp::Call,
                        ScheduleOp::Call, ScheduleOp::Call, ScheduleOp::Free}};
    schedule.steps.assign(32, 0);
    std::string why;
    CHECK_FALSE(validate_compact_structural(schedule, &why));
    CHECK(!why.empty());
}
