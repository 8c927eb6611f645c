#include "coaching/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace coaching {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

// Reads declared keys out of one JSON object and rejects the rest.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected a JSON object");
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) fail(field(key), "unknown key");
    }
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  // Numbers, or the strings "inf" / "infinity".
  void extended_number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (v->is_string()) {
        const auto s = v->get<std::string>();
        if (s != "inf" && s != "infinity") fail(field(key), "expected a number or \"inf\"");
        out = std::numeric_limits<double>::infinity();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else {
        fail(field(key), "expected a number or \"inf\"");
      }
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(field(key), "expected an integer");
      const auto i = v->get<long long>();
      if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
        fail(field(key), "integer out of range");
      }
      out = static_cast<int>(i);
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_env(const json& obj, EnvConfig& env) {
  ObjectReader r(obj, "env");
  r.find("id");  // already consumed
  r.integer("max_steps", env.max_steps);
  r.number("init_noise", env.init_noise);
  r.number("angle_limit", env.angle_limit);
  r.number("min_tip_height", env.min_tip_height);
  r.number("alive_reward", env.alive_reward);
  r.number("cart_velocity_penalty", env.cart_velocity_penalty);
  r.number("angular_velocity_penalty", env.angular_velocity_penalty);
  r.finish();
}

void read_coach(const json& obj, CoachConfig& coach) {
  ObjectReader r(obj, "coach");
  r.boolean("enabled", coach.enabled);
  std::string monitor(to_string(coach.monitor));
  r.string("monitor", monitor);
  try {
    coach.monitor = monitored_quantity_from_string(monitor);
  } catch (const std::invalid_argument& e) {
    fail("coach.monitor", e.what());
  }
  r.extended_number("boundary", coach.boundary);
  r.integer("max_intervention_steps", coach.max_intervention_steps);
  r.number("kp", coach.gains.kp);
  r.number("ki", coach.gains.ki);
  r.number("kd", coach.gains.kd);
  r.finish();
}

void read_ppo(const json& obj, PpoConfig& ppo) {
  ObjectReader r(obj, "ppo");
  r.number("gamma", ppo.gamma);
  r.number("lam", ppo.lam);
  r.number("clip_eps", ppo.clip_eps);
  r.integer("epochs", ppo.epochs);
  r.integer("minibatch_size", ppo.minibatch_size);
  r.number("learning_rate", ppo.learning_rate);
  r.integer("rollout_episodes", ppo.rollout_episodes);
  r.number("entropy_coef", ppo.entropy_coef);
  r.integer("hidden_width", ppo.hidden_width);
  r.number("value_coef", ppo.value_coef);
  r.number("init_log_std", ppo.init_log_std);
  r.finish();
}

void read_stop(const json& obj, StopRule& stop) {
  ObjectReader r(obj, "stop");
  r.number("target", stop.target);
  r.integer("win_streak", stop.win_streak);
  r.integer("average_window", stop.average_window);
  r.integer("episode_cap", stop.episode_cap);
  r.boolean("require_average_crossing", stop.require_average_crossing);
  r.finish();
}

// Runs a module validator and rethrows its message under the module's prefix.
template <class F>
void validate_section(const std::string& section, F&& check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    const std::string prefix = section + ".";
    if (msg.rfind(prefix, 0) == 0) {
      const auto colon = msg.find(' ');
      throw ConfigError(msg.substr(0, colon) + ":" + msg.substr(colon));
    }
    throw ConfigError(section + ": " + msg);
  }
}

json boundary_json(double b) { return std::isinf(b) ? json("inf") : json(b); }

}  // namespace

ExperimentConfig ExperimentConfig::defaults(EnvId id) {
  ExperimentConfig c;
  c.name = std::string(to_string(id));
  c.run = RunConfig::defaults(id);
  for (std::uint64_t s = 1; s <= 10; ++s) c.seeds.push_back(s);
  return c;
}

void ExperimentConfig::validate() const {
  if (name.empty()) fail("name", "must not be empty");
  if (name.find('/') != std::string::npos) fail("name", "must not contain '/'");
  validate_section("env", [&] { run.env.validate(); });
  validate_section("coach", [&] { run.coach.validate(); });
  validate_section("ppo", [&] { run.ppo.validate(); });
  validate_section("stop", [&] { run.stop.validate(); });
  validate_section("coach.monitor", [&] {
    (void)monitored_value(Environment(run.env).state(), run.coach.monitor);
  });
  if (seeds.empty()) fail("seeds", "must list at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    fail("seeds", "must not repeat");
  }
  if (output_dir.empty()) fail("output_dir", "must not be empty");
  if (eval_episodes < 1) fail("eval_episodes", "must be at least 1");
}

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) fail("<root>", "expected a JSON object");
  const auto env_it = doc.find("env");
  if (env_it == doc.end()) fail("env", "missing (env.id is required)");
  if (!env_it->is_object()) fail("env", "expected a JSON object");
  const auto id_it = env_it->find("id");
  if (id_it == env_it->end() || !id_it->is_string()) fail("env.id", "required string");

  EnvId id{};
  try {
    id = env_id_from_string(id_it->get<std::string>());
  } catch (const std::invalid_argument& e) {
    fail("env.id", e.what());
  }
  ExperimentConfig cfg = ExperimentConfig::defaults(id);
  {
    ObjectReader r(doc, "");
    r.string("name", cfg.name);
    read_env(*r.find("env"), cfg.run.env);
    if (const json* v = r.find("coach")) read_coach(*v, cfg.run.coach);
    if (const json* v = r.find("ppo")) read_ppo(*v, cfg.run.ppo);
    if (const json* v = r.find("stop")) read_stop(*v, cfg.run.stop);
    if (const json* v = r.find("seeds")) {
      if (!v->is_array()) fail("seeds", "expected an array of non-negative integers");
      cfg.seeds.clear();
      for (const auto& s : *v) {
        if (!s.is_number_unsigned()) fail("seeds", "expected an array of non-negative integers");
        cfg.seeds.push_back(s.get<std::uint64_t>());
      }
    }
    r.string("output_dir", cfg.output_dir);
    r.integer("eval_episodes", cfg.eval_episodes);
    r.finish();
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_text(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": malformed JSON: " + e.what());
  }
  try {
    return config_from_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

json to_json(const RunConfig& c) {
  return {
      {"env",
       {{"id", std::string(to_string(c.env.id))},
        {"max_steps", c.env.max_steps},
        {"init_noise", c.env.init_noise},
        {"angle_limit", c.env.angle_limit},
        {"min_tip_height", c.env.min_tip_height},
        {"alive_reward", c.env.alive_reward},
        {"cart_velocity_penalty", c.env.cart_velocity_penalty},
        {"angular_velocity_penalty", c.env.angular_velocity_penalty}}},
      {"coach",
       {{"enabled", c.coach.enabled},
        {"monitor", std::string(to_string(c.coach.monitor))},
        {"boundary", boundary_json(c.coach.boundary)},
        {"max_intervention_steps", c.coach.max_intervention_steps},
        {"kp", c.coach.gains.kp},
        {"ki", c.coach.gains.ki},
        {"kd", c.coach.gains.kd}}},
      {"ppo",
       {{"gamma", c.ppo.gamma},
        {"lam", c.ppo.lam},
        {"clip_eps", c.ppo.clip_eps},
        {"epochs", c.ppo.epochs},
        {"minibatch_size", c.ppo.minibatch_size},
        {"learning_rate", c.ppo.learning_rate},
        {"rollout_episodes", c.ppo.rollout_episodes},
        {"entropy_coef", c.ppo.entropy_coef},
        {"hidden_width", c.ppo.hidden_width},
        {"value_coef", c.ppo.value_coef},
        {"init_log_std", c.ppo.init_log_std}}},
      {"stop",
       {{"target", c.stop.target},
        {"win_streak", c.stop.win_streak},
        {"average_window", c.stop.average_window},
        {"episode_cap", c.stop.episode_cap},
        {"require_average_crossing", c.stop.require_average_crossing}}},
  };
}

json to_json(const ExperimentConfig& cfg) {
  json doc = to_json(cfg.run);
  doc["name"] = cfg.name;
  doc["seeds"] = cfg.seeds;
  doc["output_dir"] = cfg.output_dir;
  doc["eval_episodes"] = cfg.eval_episodes;
  return doc;
}

std::string fingerprint(const RunConfig& cfg) {
  // FNV-1a over the canonical dump; key order is fixed by nlohmann's sorted maps.
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace coaching
