#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace levelarray {

// A name is a slot index in [0, 3n). Values >= 2n denote backup slots.
using Name = std::uint64_t;

// Identifies a holder in checked mode. 0 means "free"; real tags start at 1.
using HolderTag = std::uint64_t;

inline constexpr HolderTag kFreeTag = 0;
inline constexpr HolderTag kAnonymousTag = 1;

// batch_reached value for operations that ended in the backup region.
inline constexpr std::uint32_t kBackupBatch =
    std::numeric_limits<std::uint32_t>::max();

struct ProbeStats {
    std::uint64_t probes = 0;        // test-and-set attempts, backup included
    std::uint32_t batch_reached = 0; // highest batch probed, or kBackupBatch
    bool used_backup = false;
};

struct TaggedName {
    Name name = 0;
    HolderTag tag = kFreeTag;
};

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Bad constructor/CLI arguments: n too small, zero probe count, lo > hi, ...
class ConfigError : public Error {
  public:
    using Error::Error;
};

// A name outside [0, 3n) or inside the unused gap [main_size, 2n).
class InvalidNameError : public Error {
  public:
    using Error::Error;
};

// Every slot held. Only reachable when more than n callers hold at once.
class CapacityError : public Error {
  public:
    using Error::Error;
};

// Freeing a name that is not held, or held by someone else (checked mode).
class MisuseError : public Error {
  public:
    using Error::Error;
};

// Malformed schedule or input detected by the simulator.
class ScheduleError : public Error {
  public:
    ScheduleError(const std::string& what, std::uint64_t index)
        : Error(what + " (at index " + std::to_string(index) + ")"),
          index(index) {}
    std::uint64_t index = 0;
};

} // namespace levelarray
