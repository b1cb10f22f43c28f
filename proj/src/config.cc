#include "uavx/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "uavx/errors.h"

namespace uavx::config {
namespace {

using train::ExperimentConfig;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_numbers(const std::string& value) {
  std::vector<double> out;
  std::istringstream in(value);
  std::string token;
  while (in >> token) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw ConfigError("'" + token + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<double> numbers_exact(const std::string& value, std::size_t count) {
  auto v = parse_numbers(value);
  if (v.size() != count) {
    throw ConfigError("expected " + std::to_string(count) + " numbers, got " + std::to_string(v.size()));
  }
  return v;
}

double number(const std::string& value) { return numbers_exact(value, 1)[0]; }

long long integer(const std::string& value) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("'" + value + "' is not an integer");
  }
  return v;
}

std::size_t count(const std::string& value) {
  const long long v = integer(value);
  if (v < 0) throw ConfigError("'" + value + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

bool boolean(const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("'" + value + "' is not a boolean");
}

world::Box box(const std::string& value) {
  const auto v = numbers_exact(value, 6);
  return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"world.name", [](ExperimentConfig& c, const std::string& v) { c.world_name = v; }},
      {"world.bounds", [](ExperimentConfig& c, const std::string& v) { c.world.bounds = box(v); }},
      {"world.obstacle", [](ExperimentConfig& c, const std::string& v) { c.world.obstacles.push_back(box(v)); }},
      {"world.waypoint",
       [](ExperimentConfig& c, const std::string& v) {
         const auto p = numbers_exact(v, 3);
         c.world.person.waypoints.push_back({p[0], p[1], p[2]});
       }},
      {"world.person_speed", [](ExperimentConfig& c, const std::string& v) { c.world.person.speed = number(v); }},
      {"world.person_radius", [](ExperimentConfig& c, const std::string& v) { c.world.person.radius = number(v); }},
      {"world.person_height", [](ExperimentConfig& c, const std::string& v) { c.world.person.height = number(v); }},
      {"world.uav_radius", [](ExperimentConfig& c, const std::string& v) { c.world.uav_radius = number(v); }},
      {"world.control_dt", [](ExperimentConfig& c, const std::string& v) { c.world.control_dt = number(v); }},
      {"world.spawn",
       [](ExperimentConfig& c, const std::string& v) {
         const auto p = numbers_exact(v, 4);
         c.world.spawn = {{p[0], p[1], p[2]}, p[3]};
       }},
      {"camera.width", [](ExperimentConfig& c, const std::string& v) { c.world.camera.width = static_cast<int>(integer(v)); }},
      {"camera.height", [](ExperimentConfig& c, const std::string& v) { c.world.camera.height = static_cast<int>(integer(v)); }},
      {"camera.fov", [](ExperimentConfig& c, const std::string& v) { c.world.camera.fov = number(v); }},
      {"camera.max_range", [](ExperimentConfig& c, const std::string& v) { c.world.camera.max_range = number(v); }},
      {"experiment.strategy", [](ExperimentConfig& c, const std::string& v) { c.strategy = train::parse_strategy(v); }},
      {"experiment.episodes", [](ExperimentConfig& c, const std::string& v) { c.episodes = static_cast<int>(integer(v)); }},
      {"experiment.max_steps",
       [](ExperimentConfig& c, const std::string& v) { c.max_steps_per_episode = static_cast<int>(integer(v)); }},
      {"experiment.warmup", [](ExperimentConfig& c, const std::string& v) { c.warmup_transitions = count(v); }},
      {"experiment.seed", [](ExperimentConfig& c, const std::string& v) { c.seed = count(v); }},
      {"experiment.batch_size", [](ExperimentConfig& c, const std::string& v) { c.batch_size = count(v); }},
      {"experiment.replay_capacity", [](ExperimentConfig& c, const std::string& v) { c.replay_capacity = count(v); }},
      {"replay.importance_weights", [](ExperimentConfig& c, const std::string& v) { c.importance_weights = boolean(v); }},
      {"replay.importance_beta", [](ExperimentConfig& c, const std::string& v) { c.importance_beta = number(v); }},
      {"experiment.input_width",
       [](ExperimentConfig& c, const std::string& v) {
         c.input_width = static_cast<int>(integer(v));
         c.policy.shape.input_dim = static_cast<std::size_t>(c.input_width) * c.input_height;
       }},
      {"experiment.input_height",
       [](ExperimentConfig& c, const std::string& v) {
         c.input_height = static_cast<int>(integer(v));
         c.policy.shape.input_dim = static_cast<std::size_t>(c.input_width) * c.input_height;
       }},
      {"reward.dt", [](ExperimentConfig& c, const std::string& v) { c.reward.dt = number(v); }},
      {"reward.lambda", [](ExperimentConfig& c, const std::string& v) { c.reward.lambda = number(v); }},
      {"reward.rho", [](ExperimentConfig& c, const std::string& v) { c.reward.rho = number(v); }},
      {"reward.shrink", [](ExperimentConfig& c, const std::string& v) { c.reward.shrink = number(v); }},
      {"reward.collision", [](ExperimentConfig& c, const std::string& v) { c.reward.collision_reward = number(v); }},
      {"reward.penalty_mode",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "height_fraction") {
           c.reward.penalty_mode = perception::PenaltyMode::kHeightFraction;
         } else if (v == "aspect_ratio") {
           c.reward.penalty_mode = perception::PenaltyMode::kAspectRatio;
         } else {
           throw ConfigError("penalty_mode must be height_fraction or aspect_ratio");
         }
       }},
      {"net.trunk",
       [](ExperimentConfig& c, const std::string& v) {
         c.policy.shape.trunk_hidden.clear();
         for (double d : parse_numbers(v)) {
           if (d < 1 || d != static_cast<double>(static_cast<std::size_t>(d))) {
             throw ConfigError("trunk sizes must be positive integers");
           }
           c.policy.shape.trunk_hidden.push_back(static_cast<std::size_t>(d));
         }
         if (c.policy.shape.trunk_hidden.empty()) throw ConfigError("net.trunk needs at least one layer");
       }},
      {"net.optimizer",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "adam") {
           c.policy.optimizer.algo = nn::Algorithm::kAdam;
         } else if (v == "sgd") {
           c.policy.optimizer.algo = nn::Algorithm::kSgd;
         } else {
           throw ConfigError("net.optimizer must be adam or sgd");
         }
       }},
      {"net.lr", [](ExperimentConfig& c, const std::string& v) { c.policy.optimizer.lr = number(v); }},
      {"net.gamma", [](ExperimentConfig& c, const std::string& v) { c.policy.gamma = number(v); }},
      {"net.sync_interval", [](ExperimentConfig& c, const std::string& v) { c.policy.sync_interval = integer(v); }},
      {"net.double_dqn", [](ExperimentConfig& c, const std::string& v) { c.policy.double_dqn = boolean(v); }},
      {"explore.eps0", [](ExperimentConfig& c, const std::string& v) { c.epsilon.epsilon0 = number(v); }},
      {"explore.eps_goal", [](ExperimentConfig& c, const std::string& v) { c.epsilon.epsilon_goal = number(v); }},
      {"explore.eps_episodes",
       [](ExperimentConfig& c, const std::string& v) { c.epsilon.total_episodes = static_cast<int>(integer(v)); }},
      {"explore.eps_mode",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "linear") {
           c.epsilon.mode = explore::EpsilonMode::kLinear;
         } else if (v == "inverse") {
           c.epsilon.mode = explore::EpsilonMode::kInverse;
         } else {
           throw ConfigError("explore.eps_mode must be linear or inverse");
         }
       }},
      {"explore.tau", [](ExperimentConfig& c, const std::string& v) { c.convergence.tau = integer(v); }},
      {"explore.zeta", [](ExperimentConfig& c, const std::string& v) { c.convergence.zeta = number(v); }},
      {"explore.v_size", [](ExperimentConfig& c, const std::string& v) { c.guidance.sample_size = count(v); }},
      {"explore.m",
       [](ExperimentConfig& c, const std::string& v) { c.guidance.mixture.components = static_cast<int>(integer(v)); }},
      {"explore.alpha", [](ExperimentConfig& c, const std::string& v) { c.guidance.alpha = number(v); }},
      {"explore.gmm_iterations",
       [](ExperimentConfig& c, const std::string& v) { c.guidance.mixture.iterations = static_cast<int>(integer(v)); }},
      {"explore.pseudocount", [](ExperimentConfig& c, const std::string& v) { c.guidance.mixture.pseudocount = number(v); }},
      {"explore.variance_floor",
       [](ExperimentConfig& c, const std::string& v) { c.guidance.mixture.variance_floor = number(v); }},
      {"explore.refit_every",
       [](ExperimentConfig& c, const std::string& v) { c.guidance.refit_every = static_cast<int>(integer(v)); }},
      {"explore.visited_capacity", [](ExperimentConfig& c, const std::string& v) { c.visited_capacity = count(v); }},
      {"explore.domain_hidden", [](ExperimentConfig& c, const std::string& v) { c.domain_hidden = count(v); }},
      {"explore.domain_lr", [](ExperimentConfig& c, const std::string& v) { c.domain_lr = number(v); }},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source_name) {
  ExperimentConfig config;
  bool reward_dt_set = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const std::string where = source_name + ":" + std::to_string(line_no) + ": ";
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    try {
      it->second(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
    reward_dt_set = reward_dt_set || key == "reward.dt";
  }
  if (!reward_dt_set) config.reward.dt = config.world.control_dt;
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  return config;
}

ExperimentConfig parse_config_text(std::string_view text, const std::string& source_name) {
  std::istringstream in{std::string(text)};
  return parse_config(in, source_name);
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  auto vec = [](const world::Vec3& v) { return num(v.x) + " " + num(v.y) + " " + num(v.z); };
  auto bx = [&](const world::Box& b) { return vec(b.min) + " " + vec(b.max); };
  out << "world.name = " << c.world_name << "\n"
      << "world.bounds = " << bx(c.world.bounds) << "\n";
  for (const auto& o : c.world.obstacles) out << "world.obstacle = " << bx(o) << "\n";
  for (const auto& w : c.world.person.waypoints) out << "world.waypoint = " << vec(w) << "\n";
  out << "world.person_speed = " << num(c.world.person.speed) << "\n"
      << "world.person_radius = " << num(c.world.person.radius) << "\n"
      << "world.person_height = " << num(c.world.person.height) << "\n"
      << "world.uav_radius = " << num(c.world.uav_radius) << "\n"
      << "world.control_dt = " << num(c.world.control_dt) << "\n"
      << "world.spawn = " << vec(c.world.spawn.position) << " " << num(c.world.spawn.heading) << "\n"
      << "camera.width = " << c.world.camera.width << "\n"
      << "camera.height = " << c.world.camera.height << "\n"
      << "camera.fov = " << num(c.world.camera.fov) << "\n"
      << "camera.max_range = " << num(c.world.camera.max_range) << "\n"
      << "experiment.strategy = " << train::to_string(c.strategy) << "\n"
      << "experiment.episodes = " << c.episodes << "\n"
      << "experiment.max_steps = " << c.max_steps_per_episode << "\n"
      << "experiment.warmup = " << c.warmup_transitions << "\n"
      << "experiment.seed = " << c.seed << "\n"
      << "experiment.batch_size = " << c.batch_size << "\n"
      << "experiment.replay_capacity = " << c.replay_capacity << "\n"
      << "replay.importance_weights = " << (c.importance_weights ? "true" : "false") << "\n"
      << "replay.importance_beta = " << num(c.importance_beta) << "\n"
      << "experiment.input_width = " << c.input_width << "\n"
      << "experiment.input_height = " << c.input_height << "\n"
      << "reward.dt = " << num(c.reward.dt) << "\n"
      << "reward.lambda = " << num(c.reward.lambda) << "\n"
      << "reward.rho = " << num(c.reward.rho) << "\n"
      << "reward.shrink = " << num(c.reward.shrink) << "\n"
      << "reward.collision = " << num(c.reward.collision_reward) << "\n"
      << "reward.penalty_mode = "
      << (c.reward.penalty_mode == perception::PenaltyMode::kHeightFraction ? "height_fraction" : "aspect_ratio")
      << "\n";
  out << "net.trunk =";
  for (auto h : c.policy.shape.trunk_hidden) out << " " << h;
  out << "\n"
      << "net.optimizer = " << (c.policy.optimizer.algo == nn::Algorithm::kAdam ? "adam" : "sgd") << "\n"
      << "net.lr = " << num(c.policy.optimizer.lr) << "\n"
      << "net.gamma = " << num(c.policy.gamma) << "\n"
      << "net.sync_interval = " << c.policy.sync_interval << "\n"
      << "net.double_dqn = " << (c.policy.double_dqn ? "true" : "false") << "\n"
      << "explore.eps0 = " << num(c.epsilon.epsilon0) << "\n"
      << "explore.eps_goal = " << num(c.epsilon.epsilon_goal) << "\n"
      << "explore.eps_episodes = " << c.epsilon.total_episodes << "\n"
      << "explore.eps_mode = " << (c.epsilon.mode == explore::EpsilonMode::kLinear ? "linear" : "inverse") << "\n"
      << "explore.tau = " << c.convergence.tau << "\n"
      << "explore.zeta = " << num(c.convergence.zeta) << "\n"
      << "explore.v_size = " << c.guidance.sample_size << "\n"
      << "explore.m = " << c.guidance.mixture.components << "\n"
      << "explore.alpha = " << num(c.guidance.alpha) << "\n"
      << "explore.gmm_iterations = " << c.guidance.mixture.iterations << "\n"
      << "explore.pseudocount = " << num(c.guidance.mixture.pseudocount) << "\n"
      << "explore.variance_floor = " << num(c.guidance.mixture.variance_floor) << "\n"
      << "explore.refit_every = " << c.guidance.refit_every << "\n"
      << "explore.visited_capacity = " << c.visited_capacity << "\n"
      << "explore.domain_hidden = " << c.domain_hidden << "\n"
      << "explore.domain_lr = " << num(c.domain_lr) << "\n";
  return out.str();
}

ExperimentConfig resolve_config(const std::string& spec) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(spec, ec)) return load_config_file(spec);
  std::string name = spec;
  if (name.size() > 4 && name.ends_with(".cfg")) name.resize(name.size() - 4);
  if (auto text = preset_text(name)) return parse_config_text(*text, "preset:" + name);
  throw IoError("config file not found: " + spec);
}

}  // namespace uavx::config
