#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <thread>
#include <vector>

#include "levelarray/level_array.hpp"

using namespace levelarray;

namespace {
Rng test_rng(std::uint64_t seed = 1) {
    return Rng(RngSpec{RngKind::LehmerParkMiller, seed});
}
} // namespace

TEST_CASE("first get on an empty array wins in batch 0 with one probe") {
    LevelArray array(build_layout(16, 1));
    Rng rng = test_rng();
    const Acquired got = array.get(rng);
    CHECK(got.stats.probes == 1);
    CHECK(got.stats.batch_reached == 0);
    CHECK_FALSE(got.stats.used_backup);
    CHECK(got.name < 24);
}

TEST_CASE("a fully held batch 0 forces progression") {
    LevelArray array(build_layout(16, 1));
    for (std::uint64_t cell = 0; cell < 24; ++cell)
        REQUIRE(array.cells().try_acquire(cell, 99));
    Rng rng = test_rng();
    const Acquired got = array.get(rng);
    CHECK(got.stats.batch_reached >= 1);
    CHECK(got.name >= 24);
}

TEST_CASE("get, free, get cycles leave no residue") {
    LevelArray array(build_layout(16, 1));
    Rng rng = test_rng(7);
    const Acquired first = array.get(rng);
    array.free(first.name);
    const Acquired second = array.get(rng);
    CHECK(second.stats.probes >= 1);
    array.free(second.name);
    CHECK(array.collect().empty());
}

TEST_CASE("one million get/free pairs end at occupancy zero") {
    LevelArray array(build_layout(16, 1));
    Rng rng = test_rng(3);
    for (int i = 0; i < 1000000; ++i)
        array.free(array.get(rng).name);
    CHECK(array.collect().empty());
    CHECK(array.total_gets() == 1000000);
}

TEST_CASE("checked free detects misuse") {
    LevelArray array(build_layout(16, 1));
    Rng rng = test_rng();
    SECTION("never-acquired name") {
        REQUIRE_THROWS_AS(array.free_checked(5, 1), MisuseError);
    }
    SECTION("double free") {
        const Acquired got = array.get(rng, 1);
        array.free_checked(got.name, 1);
        REQUIRE_THROWS_AS(array.free_checked(got.name, 1), MisuseError);
    }
    SECTION("foreign free") {
        const Acquired got = array.get(rng, 1);
        REQUIRE_THROWS_AS(array.free_checked(got.name, 2), MisuseError);
        array.free_checked(got.name, 1);
    }
}

TEST_CASE("invalid names are rejected by free") {
    LevelArray array(build_layout(16, 1));
    REQUIRE_THROWS_AS(array.free(31), InvalidNameError); // the unused gap
    REQUIRE_THROWS_AS(array.free(48), InvalidNameError); // past 3n
}

TEST_CASE("capacity exhaustion is an error, not a hang") {
    LevelArray array(build_layout(2, 1));
    for (std::uint64_t cell = 0; cell < array.cells().size(); ++cell)
        REQUIRE(array.cells().try_acquire(cell, 42));
    Rng rng = test_rng();
    REQUIRE_THROWS_AS(array.get(rng), CapacityError);
}

TEST_CASE("the backup scan finds the last free cell") {
    const BatchLayout layout = build_layout(16, 1);
    LevelArray array(layout);
    // Hold the whole main region and all backup cells but the last.
    for (std::uint64_t cell = 0; cell + 1 < array.cells().size(); ++cell)
        REQUIRE(array.cells().try_acquire(cell, 42));
    Rng rng = test_rng();
    const Acquired got = array.get(rng);
    CHECK(got.name == 47); // 2n + 15
    CHECK(got.stats.used_backup);
    CHECK(got.stats.batch_reached == kBackupBatch);
    // Four main trials (c=1 over four batches) plus a full backup scan.
    CHECK(got.stats.probes == layout.probe_prefix[layout.batch_count] + 16);
    CHECK(array.backup_uses() == 1);
}

TEST_CASE("probe counts respect the per-batch budget") {
    const BatchLayout layout = build_layout(64, 3);
    LevelArray array(layout);
    Rng rng = test_rng(11);
    // A standing load keeps later batches in play for the churned gets.
    for (int i = 0; i < 50; ++i)
        array.get(rng);
    for (int round = 0; round < 500; ++round) {
        const Acquired got = array.get(rng);
        if (!got.stats.used_backup) {
            REQUIRE(got.stats.probes <=
                    layout.probe_prefix[got.stats.batch_reached] +
                        layout.probe_count[got.stats.batch_reached]);
        }
        array.free(got.name);
    }
}

TEST_CASE("collect returns exactly the quiescent holders") {
    LevelArray array(build_layout(16, 1));
    Rng rng = test_rng(5);
    CHECK(array.collect().empty());

    std::set<Name> held;
    for (int i = 0; i < 10; ++i)
        held.insert(array.get(rng, 3).name);
    // Add a backup holder through the cell interface.
    REQUIRE(array.cells().try_acquire(31 + 4, 3));
    held.insert(array.layout().name_of_cell(31 + 4));

    const auto collected = array.collect();
    CHECK(std::set<Name>(collected.begin(), collected.end()) == held);
    CHECK(std::is_sorted(collected.begin(), collected.end()));

    for (const TaggedName& entry : array.collect_tagged())
        CHECK(entry.tag == 3);
}

TEST_CASE("padded cells expose the same behaviour") {
    PaddedLevelArray array(build_layout(16, 1));
    Rng rng = test_rng(9);
    const Acquired got = array.get(rng, 5);
    CHECK(got.stats.probes == 1);
    REQUIRE(array.collect_tagged().size() == 1);
    CHECK(array.collect_tagged()[0].tag == 5);
    array.free_checked(got.name, 5);
    CHECK(array.collect().empty());
}

TEST_CASE("concurrent churn preserves ownership") {
    LevelArray array(build_layout(64, 1));
    constexpr int kThreads = 4;
    constexpr int kIterations = 50000;
    std::atomic<std::uint64_t> violations{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < kThreads; ++t) {
        threads.emplace_back([&, t] {
            Rng rng = make_stream(RngSpec{RngKind::MarsagliaXorshift, 77},
                                  (std::uint64_t)t);
            const HolderTag tag = (HolderTag)t + 1;
            for (int i = 0; i < kIterations; ++i) {
                const Acquired got = array.get(rng, tag);
                try {
                    array.free_checked(got.name, tag);
                } catch (const MisuseError&) {
                    violations.fetch_add(1);
                }
            }
        });
    }
    for (auto& thread : threads)
        thread.join();
    CHECK(violations.load() == 0);
    CHECK(array.collect().empty());
    CHECK(array.total_gets() == kThreads * (std::uint64_t)kIterations);
}
