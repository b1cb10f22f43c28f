#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace uavx::cli {

inline constexpr char kVersion[] = "uavx 0.1.0";

// Exit codes shared by all subcommands.
enum ExitCode : int { kOk = 0, kFailure = 1, kBadInput = 2 };

struct TrainArgs {
  std::string config = "simple";
  std::optional<std::string> strategy;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<std::filesystem::path> out;
};

struct CompareArgs {
  std::vector<std::filesystem::path> runs;
  std::filesystem::path out = "compare";
  bool svg = true;
};

struct RolloutArgs {
  std::filesystem::path checkpoint;
  std::optional<std::string> config;
  int episodes = 1;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out;
};

// Output directory used when --out is absent: $UAVX_OUT_ROOT (or ./runs)
// joined with "<world>_<strategy>_s<seed>".
std::filesystem::path default_out_dir(const std::string& world, const std::string& strategy, std::uint64_t seed);

// Keeps large tensor buffers on the heap instead of mmap/munmap per step.
// Call once at process start; no-op outside glibc.
void tune_allocator();

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err);
int cmd_rollout(const RolloutArgs& args, std::ostream& out, std::ostream& err);

}  // namespace uavx::cli
