#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "levelarray/baselines.hpp"

using namespace levelarray;

namespace {
Rng test_rng(std::uint64_t seed = 1) {
    return Rng(RngSpec{RngKind::MarsagliaXorshift, seed});
}
} // namespace

TEST_CASE("every baseline wins in one probe on an empty array") {
    for (FlatProbeKind kind :
         {FlatProbeKind::Random, FlatProbeKind::LinearProbe,
          FlatProbeKind::Deterministic}) {
        FlatArray array(kind, 32);
        Rng rng = test_rng();
        const Acquired got = array.get(rng);
        CHECK(got.stats.probes == 1);
        array.free(got.name);
    }
}

TEST_CASE("random probing matches the geometric-mean oracle at half load") {
    constexpr std::uint64_t kSlots = 1024;
    FlatArray array(FlatProbeKind::Random, kSlots);
    // Hold every even slot: the free fraction is exactly 1/2.
    for (std::uint64_t cell = 0; cell < kSlots; cell += 2)
        REQUIRE(array.cells().try_acquire(cell, 9));
    const double success = 0.5;
    const double expected = 1.0 / success; // geometric mean, the oracle

    Rng rng = test_rng(21);
    constexpr int kSamples = 20000;
    std::uint64_t probes = 0;
    for (int i = 0; i < kSamples; ++i) {
        const Acquired got = array.get(rng);
        probes += got.stats.probes;
        array.free(got.name);
    }
    const double avg = (double)probes / kSamples;
    // Standard error of the geometric at p=1/2 is about 0.01 here.
    CHECK(avg > expected - 0.1);
    CHECK(avg < expected + 0.1);
}

TEST_CASE("random probing still lands the single free cell") {
    FlatArray array(FlatProbeKind::Random, 16);
    for (std::uint64_t cell = 0; cell < 16; ++cell)
        if (cell != 11)
            REQUIRE(array.cells().try_acquire(cell, 9));
    Rng rng = test_rng(5);
    CHECK(array.get(rng).name == 11);
}

TEST_CASE("linear probing walks right from its random start") {
    constexpr std::uint64_t kSlots = 8;
    FlatArray array(FlatProbeKind::LinearProbe, kSlots);
    const std::uint64_t free_cell = 5;
    for (std::uint64_t cell = 0; cell < kSlots; ++cell)
        if (cell != free_cell)
            REQUIRE(array.cells().try_acquire(cell, 9));

    // Replay the start draw with a clone of the stream.
    const RngSpec spec{RngKind::LehmerParkMiller, 31};
    Rng probe_rng{spec};
    Rng replay{spec};
    const std::uint64_t start = replay.next_below(kSlots);
    const std::uint64_t expected_probes =
        (free_cell + kSlots - start) % kSlots + 1;

    const Acquired got = array.get(probe_rng);
    CHECK(got.name == free_cell);
    CHECK(got.stats.probes == expected_probes);
}

TEST_CASE("linear probing wraps around the end") {
    FlatArray array(FlatProbeKind::LinearProbe, 4);
    ProbeCursor cursor;
    Rng rng = test_rng(2);
    std::vector<std::uint64_t> cells;
    for (int i = 0; i < 4; ++i)
        cells.push_back(array.next_probe_target(cursor, rng)->cell);
    for (int i = 1; i < 4; ++i)
        CHECK(cells[i] == (cells[i - 1] + 1) % 4);
    CHECK_FALSE(array.next_probe_target(cursor, rng).has_value());
}

TEST_CASE("deterministic scan takes the first free index") {
    FlatArray array(FlatProbeKind::Deterministic, 16);
    Rng rng = test_rng();
    CHECK(array.get(rng).name == 0);

    for (std::uint64_t cell = 1; cell < 5; ++cell)
        REQUIRE(array.cells().try_acquire(cell, 9));
    // Cells 0..4 held: the scan stops at 5 after six probes.
    const Acquired got = array.get(rng);
    CHECK(got.name == 5);
    CHECK(got.stats.probes == 6);
}

TEST_CASE("deterministic average probes grow with load") {
    constexpr std::uint64_t kSlots = 400;
    double previous_avg = 0.0;
    for (const double load : {0.0, 0.5, 0.9}) {
        FlatArray array(FlatProbeKind::Deterministic, kSlots);
        Rng rng = test_rng(8);
        const auto held = (std::uint64_t)(load * 200);
        for (std::uint64_t i = 0; i < held; ++i)
            array.get(rng);
        std::uint64_t probes = 0;
        for (int i = 0; i < 100; ++i) {
            const Acquired got = array.get(rng);
            probes += got.stats.probes;
            array.free(got.name);
        }
        const double avg = (double)probes / 100;
        CHECK(avg >= previous_avg);
        previous_avg = avg;
    }
}

TEST_CASE("baselines report capacity exhaustion on a full array") {
    for (FlatProbeKind kind :
         {FlatProbeKind::Random, FlatProbeKind::LinearProbe,
          FlatProbeKind::Deterministic}) {
        FlatArray array(kind, 8);
        for (std::uint64_t cell = 0; cell < 8; ++cell)
            REQUIRE(array.cells().try_acquire(cell, 9));
        Rng rng = test_rng(4);
        REQUIRE_THROWS_AS(array.get(rng), CapacityError);
    }
}

TEST_CASE("flat arrays reject out-of-range names") {
    FlatArray array(FlatProbeKind::Random, 8);
    REQUIRE_THROWS_AS(array.free(8), InvalidNameError);
}
