#include "uavx/cli.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "uavx/config.h"
#include "uavx/errors.h"
#include "uavx/trainer.h"

namespace uavx::cli {
namespace {

namespace fs = std::filesystem;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream s(line);
  std::string cell;
  while (std::getline(s, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct RunBlocks {
  std::string label;
  std::vector<double> mean_reward;
  std::vector<double> mean_steps;
};

RunBlocks read_blocks(const fs::path& run_dir) {
  const fs::path path = run_dir / "blocks.csv";
  std::ifstream in(path);
  if (!in) throw IoError("missing " + path.string());
  std::string line;
  std::getline(in, line);
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "block_index" || header[1] != "mean_reward" ||
      header[2] != "mean_steps" || header[3] != "collision_rate") {
    throw IoError("unexpected blocks.csv header in " + path.string());
  }
  RunBlocks run;
  run.label = fs::path(run_dir).lexically_normal().filename().string();
  if (run.label.empty()) run.label = fs::path(run_dir).lexically_normal().parent_path().filename().string();
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    try {
      if (cells.size() < 4 || std::stoi(cells[0]) != static_cast<int>(run.mean_reward.size())) {
        throw std::invalid_argument("bad row");
      }
      run.mean_reward.push_back(std::stod(cells[1]));
      run.mean_steps.push_back(std::stod(cells[2]));
    } catch (const std::exception&) {
      throw IoError("malformed row " + std::to_string(row) + " in " + path.string());
    }
  }
  return run;
}

void write_svg(const fs::path& path, const std::string& title, const std::vector<RunBlocks>& runs,
               std::vector<double> RunBlocks::*metric) {
  constexpr double kW = 640, kH = 400, kPad = 50;
  constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::size_t blocks = 1;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : runs) {
    blocks = std::max(blocks, (r.*metric).size());
    for (double v : r.*metric) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  if (!(hi > lo)) lo -= 1.0, hi += 1.0;
  auto px = [&](std::size_t i) { return kPad + (kW - 2 * kPad) * (blocks > 1 ? double(i) / (blocks - 1) : 0.5); };
  auto py = [&](double v) { return kH - kPad - (kH - 2 * kPad) * (v - lo) / (hi - lo); };

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"25\" text-anchor=\"middle\">" << title << "</text>\n"
      << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">episode block</text>\n"
      << "<text x=\"5\" y=\"" << kPad - 10 << "\">" << fixed(hi, 2) << "</text>\n"
      << "<text x=\"5\" y=\"" << kH - kPad << "\">" << fixed(lo, 2) << "</text>\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const char* color = kColors[r % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    const auto& values = runs[r].*metric;
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << fixed(px(i), 2) << "," << fixed(py(values[i]), 2);
    out << "\"/>\n"
        << "<text x=\"" << kW - kPad - 120 << "\" y=\"" << kPad + 16 * r << "\" fill=\"" << color << "\">"
        << runs[r].label << "</text>\n";
  }
  out << "</svg>\n";
}

void write_manifest(const fs::path& dir, const train::ExperimentConfig& config, const std::string& started,
                    const std::vector<std::pair<std::string, std::string>>& outputs) {
  std::ofstream out(dir / "manifest.txt", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.txt").string());
  out << "version=" << kVersion << "\n"
      << "seed=" << config.seed << "\n"
      << "strategy=" << train::to_string(config.strategy) << "\n"
      << "world=" << config.world_name << "\n"
      << "started=" << started << "\n"
      << "finished=" << utc_now() << "\n";
  for (const auto& [k, v] : outputs) out << k << "=" << v << "\n";
  out << "--- config ---\n" << config::to_config_text(config);
}

}  // namespace

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

fs::path default_out_dir(const std::string& world, const std::string& strategy, std::uint64_t seed) {
  const char* root = std::getenv("UAVX_OUT_ROOT");
  const fs::path base = root && *root ? fs::path(root) : fs::path("runs");
  return base / (world + "_" + strategy + "_s" + std::to_string(seed));
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  train::ExperimentConfig config;
  try {
    config = config::resolve_config(args.config);
    if (args.strategy) config.strategy = train::parse_strategy(*args.strategy);
    if (args.seed) config.seed = *args.seed;
    if (args.episodes) config.episodes = *args.episodes;
    config.validate();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  }

  const fs::path dir = args.out.value_or(default_out_dir(config.world_name, train::to_string(config.strategy), config.seed));
  try {
    const std::string started = utc_now();
    fs::create_directories(dir);
    {
      std::ofstream cfg(dir / "config.cfg", std::ios::trunc);
      if (!cfg) throw IoError("cannot write " + (dir / "config.cfg").string());
      cfg << config::to_config_text(config);
    }
    train::Trainer trainer(config);
    const auto result = train::run_experiment(config, dir, &trainer);
    q::save_checkpoint(trainer.policy(), trainer.global_step(), dir / "checkpoints");
    write_manifest(dir, config, started,
                   {{"episodes_csv", "episodes.csv"},
                    {"blocks_csv", "blocks.csv"},
                    {"config_file", "config.cfg"},
                    {"checkpoint_dir", "checkpoints"}});
    for (const auto& b : result.blocks) {
      out << "block " << b.block_index << (b.partial ? " (partial)" : "") << ": mean_reward=" << fixed(b.mean_reward)
          << " mean_steps=" << fixed(b.mean_steps) << " collision_rate=" << fixed(b.collision_rate) << "\n";
    }
    out << "wrote " << dir.string() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}

int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  if (args.runs.empty()) {
    err << "error: compare needs at least one run directory\n";
    return kBadInput;
  }
  std::vector<RunBlocks> runs;
  try {
    for (const auto& dir : args.runs) runs.push_back(read_blocks(dir));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  }
  try {
    fs::create_directories(args.out);
    std::size_t blocks = 0;
    for (const auto& r : runs) blocks = std::max(blocks, r.mean_reward.size());

    auto cell = [](const std::vector<double>& v, std::size_t i) { return i < v.size() ? fixed(v[i]) : std::string(); };
    std::ofstream csv(args.out / "comparison.csv", std::ios::trunc);
    csv << "block_index";
    for (const auto& r : runs) csv << "," << r.label << "_mean_reward";
    for (const auto& r : runs) csv << "," << r.label << "_mean_steps";
    csv << "\n";
    for (std::size_t i = 0; i < blocks; ++i) {
      csv << i;
      for (const auto& r : runs) csv << "," << cell(r.mean_reward, i);
      for (const auto& r : runs) csv << "," << cell(r.mean_steps, i);
      csv << "\n";
    }
    if (!csv) throw IoError("failed writing " + (args.out / "comparison.csv").string());

    for (auto [name, metric] : {std::pair{"mean_reward", &RunBlocks::mean_reward},
                                std::pair{"mean_steps", &RunBlocks::mean_steps}}) {
      std::ofstream dat(args.out / (std::string(name) + ".dat"), std::ios::trunc);
      dat << "# block";
      for (const auto& r : runs) dat << " " << r.label;
      dat << "\n";
      for (std::size_t i = 0; i < blocks; ++i) {
        dat << i;
        for (const auto& r : runs) dat << " " << (i < (r.*metric).size() ? fixed((r.*metric)[i]) : "nan");
        dat << "\n";
      }
      if (args.svg) write_svg(args.out / (std::string(name) + ".svg"), name, runs, metric);
    }
    out << "wrote " << (args.out / "comparison.csv").string() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}

int cmd_rollout(const RolloutArgs& args, std::ostream& out, std::ostream& err) {
  train::ExperimentConfig config;
  q::Checkpoint checkpoint;
  try {
    const std::string spec = args.config.value_or((args.checkpoint.parent_path() / "config.cfg").string());
    config = config::resolve_config(spec);
    config.seed = args.seed;
    if (args.episodes < 1) throw ConfigError("--n must be at least 1");
    checkpoint = q::load_checkpoint(args.checkpoint);
    if (checkpoint.online.input_dim() != config.policy.shape.input_dim) {
      throw ConfigError("checkpoint input size does not match the config's network input");
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  }

  try {
    config.episodes = args.episodes;
    q::PolicyPair pair(checkpoint.online, config.policy);
    train::Trainer trainer(config, std::move(pair));
    trainer.set_action_override(
        [&trainer](std::span<const double> obs) { return q::select_greedy(trainer.policy(), obs); });

    const fs::path dir = args.out.value_or(args.checkpoint.parent_path() / "rollout");
    fs::create_directories(dir);
    std::ofstream traj(dir / "trajectory.csv", std::ios::trunc);
    if (!traj) throw IoError("cannot write " + (dir / "trajectory.csv").string());
    traj << "episode,step,x,y,z,heading,pitch,action,reward,collided\n";

    double reward_sum = 0.0, steps_sum = 0.0;
    for (int e = 1; e <= args.episodes; ++e) {
      auto log_step = [&](const train::StepRecord& s) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%d,%d,%.9f,%.9f,%.9f,%.9f,%.9f,%d,%.17g,%d\n", e, s.step, s.state.uav_position.x,
                      s.state.uav_position.y, s.state.uav_position.z, s.state.uav_heading, s.state.uav_pitch,
                      s.action.value(), s.reward, s.collided ? 1 : 0);
        traj << buf;
      };
      const auto ep = trainer.run_episode(e, log_step, /*learn=*/false);
      reward_sum += ep.total_reward;
      steps_sum += ep.steps;
      out << "episode " << e << ": reward=" << fixed(ep.total_reward) << " steps=" << ep.steps
          << (ep.collided ? " collided" : "") << "\n";
    }
    if (!traj) throw IoError("failed writing trajectory");
    out << "mean_reward=" << fixed(reward_sum / args.episodes) << " mean_steps=" << fixed(steps_sum / args.episodes)
        << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}

}  // namespace uavx::cli
