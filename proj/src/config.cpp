#include "dgr/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace dgr {

std::string to_string(Benchmark b) {
  switch (b) {
    case Benchmark::mnist5: return "mnist5";
    case Benchmark::permmnist10: return "permmnist10";
    case Benchmark::cifar100_10: return "cifar100-10";
  }
  return "?";
}

Benchmark benchmark_from_string(const std::string& s) {
  if (s == "mnist5") return Benchmark::mnist5;
  if (s == "permmnist10") return Benchmark::permmnist10;
  if (s == "cifar100-10") return Benchmark::cifar100_10;
  throw ConfigError("unknown benchmark '" + s + "'", "benchmark");
}

int ExperimentConfig::stream_tasks() const {
  if (strategy == Strategy::joint) return 1;
  switch (benchmark) {
    case Benchmark::mnist5: return 5;
    case Benchmark::permmnist10: return 10;
    case Benchmark::cifar100_10: return 10;
  }
  return 0;
}

int ExperimentConfig::stream_classes_per_task() const {
  if (strategy == Strategy::joint) return model.num_classes;
  switch (benchmark) {
    case Benchmark::mnist5: return 2;
    case Benchmark::permmnist10: return 10;
    case Benchmark::cifar100_10: return 10;
  }
  return 0;
}

void AblateConfig::validate() const {
  std::set<int> uniq;
  for (int g : groups) {
    if (g < 1 || g > 8)
      throw ConfigError("groups are numbered 1 through 8", "ablate.groups");
    if (!uniq.insert(g).second)
      throw ConfigError("duplicate group " + std::to_string(g), "ablate.groups");
  }
  for (double v : values)
    if (!(v > 0) || !std::isfinite(v))
      throw ConfigError("values must be positive", "ablate.values");
  for (double v : floors)
    if (!(v > 0 && v <= 1))
      throw ConfigError("decay lower bounds must be in (0, 1]", "ablate.floors");
  for (double v : amplitudes)
    if (!(v >= 1) || !std::isfinite(v))
      throw ConfigError("decay upper bounds must be >= 1", "ablate.amplitudes");
}

void ExperimentConfig::validate() const {
  train.validate();
  schedule.validate();
  model.validate();
  ablate.validate();
  if (seeds.empty()) throw ConfigError("needs at least one seed", "seeds");
  std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
  if (uniq.size() != seeds.size()) throw ConfigError("seeds must be distinct", "seeds");
  if (output_dir.empty()) throw ConfigError("must not be empty", "output_dir");
  if (benchmark == Benchmark::permmnist10 && strategy == Strategy::joint)
    throw ConfigError("joint training is not defined for the permuted stream",
                      "strategy");
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{
      {"benchmark", to_string(c.benchmark)},
      {"strategy", to_string(c.strategy)},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
      {"data_dir", c.data_dir},
      {"train",
       {{"iterations_per_task", c.train.iterations_per_task},
        {"batch_size", c.train.batch_size},
        {"replay_batch_size", c.train.replay_batch_size},
        {"optimizer", c.train.optimizer},
        {"lr", c.train.lr},
        {"adam_beta1", c.train.adam_beta1},
        {"adam_beta2", c.train.adam_beta2},
        {"adam_eps", c.train.adam_eps},
        {"distill_temperature", c.train.distill_temperature},
        {"weighted_branches", c.train.weighted_branches},
        {"log_every", c.train.log_every}}},
      {"schedule",
       {{"mode", to_string(c.schedule.mode)},
        {"k_alpha", c.schedule.k_alpha},
        {"k_beta", c.schedule.k_beta},
        {"floor_a", c.schedule.floor_a},
        {"floor_b", c.schedule.floor_b},
        {"const_alpha", c.schedule.const_alpha},
        {"const_beta", c.schedule.const_beta},
        {"amplitude", c.schedule.amplitude},
        {"time_source", to_string(c.schedule.time_source)}}},
      {"model", c.model},
      {"ablate",
       {{"groups", c.ablate.groups},
        {"values", c.ablate.values},
        {"floors", c.ablate.floors},
        {"amplitudes", c.ablate.amplitudes},
        {"include_baseline", c.ablate.include_baseline}}},
  };
}

std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path.string());

  auto trim = [](std::string s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };

  std::map<std::string, std::string> kv;
  std::string line, section;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    const std::uint64_t line_start = offset;
    offset += line.size() + 1;
    std::string t = trim(line.substr(0, line.find_first_of("#;")));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ParseError(path.string() + ": unterminated section header '" + t + "'",
                         line_start);
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ParseError(path.string() + ": empty section name", line_start);
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(path.string() + ": expected 'key = value', got '" + t + "'",
                       line_start);
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ParseError(path.string() + ": empty key", line_start);
    std::string full = section.empty() ? key : section + "." + key;
    if (!kv.emplace(full, value).second)
      throw ParseError(path.string() + ": duplicate key '" + full + "'", line_start);
  }
  return kv;
}

namespace {

// Typed access over the raw key map; remembers which keys were consumed so
// leftovers can be rejected by name.
class KvReader {
 public:
  explicit KvReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string str(const std::string& key) {
    used_.insert(key);
    return kv_.at(key);
  }

  double num(const std::string& key) {
    const std::string v = str(key);
    try {
      size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("expected a number, got '" + v + "'", key);
    }
  }

  int integer(const std::string& key) {
    double d = num(key);
    int i = int(d);
    if (double(i) != d) throw ConfigError("expected an integer", key);
    return i;
  }

  bool boolean(const std::string& key) {
    std::string v = str(key);
    for (auto& c : v) c = char(std::tolower(static_cast<unsigned char>(c)));
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("expected true/false, got '" + v + "'", key);
  }

  template <typename T>
  std::vector<T> list(const std::string& key) {
    std::string v = str(key);
    for (auto& c : v)
      if (c == ',') c = ' ';
    std::istringstream iss(v);
    std::vector<T> out;
    std::string tok;
    while (iss >> tok) {
      try {
        size_t pos = 0;
        long long x = std::stoll(tok, &pos);
        if (pos != tok.size() || x < 0) throw std::invalid_argument(tok);
        out.push_back(T(x));
      } catch (const std::exception&) {
        throw ConfigError("expected a list of non-negative integers, got '" + tok + "'",
                          key);
      }
    }
    return out;
  }

  std::vector<double> num_list(const std::string& key) {
    std::string v = str(key);
    for (auto& c : v)
      if (c == ',') c = ' ';
    std::istringstream iss(v);
    std::vector<double> out;
    std::string tok;
    while (iss >> tok) {
      try {
        size_t pos = 0;
        double d = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        out.push_back(d);
      } catch (const std::exception&) {
        throw ConfigError("expected a list of numbers, got '" + tok + "'", key);
      }
    }
    return out;
  }

  void reject_leftovers() const {
    for (const auto& [key, value] : kv_)
      if (!used_.count(key)) throw ConfigError("unknown key", key);
  }

 private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

void apply_benchmark_defaults(ExperimentConfig& c) {
  switch (c.benchmark) {
    case Benchmark::mnist5:
      c.model.input = {1, 28, 28};
      c.model.num_classes = 10;
      c.model.channels = {32, 64};
      c.model.recon = ReconKind::bernoulli;
      c.train.iterations_per_task = 2000;
      c.train.lr = 1e-3;
      break;
    case Benchmark::permmnist10:
      c.model.input = {1, 28, 28};
      c.model.num_classes = 100;
      c.model.channels = {32, 64};
      c.model.recon = ReconKind::bernoulli;
      c.train.iterations_per_task = 2000;
      c.train.lr = 1e-3;
      break;
    case Benchmark::cifar100_10:
      c.model.input = {3, 32, 32};
      c.model.num_classes = 100;
      c.model.channels = {16, 32, 64, 128, 256};
      c.model.recon = ReconKind::gaussian;
      c.train.iterations_per_task = 5000;
      c.train.lr = 1e-4;
      break;
  }
}

// Strategy-derived defaults; any explicit config key still wins.
void apply_strategy_defaults(ExperimentConfig& c) {
  c.train.strategy = c.strategy;
  switch (c.strategy) {
    case Strategy::gr:
      // plain deep generative replay: unconditional prior, no decoder
      // gating, hard argmax labels on replayed samples
      c.model.conditional_prior = false;
      c.model.gating = false;
      c.train.distill_temperature = 0.0;
      c.schedule.mode = ScheduleMode::baseline;
      break;
    case Strategy::none:
    case Strategy::joint:
    case Strategy::bir:
      c.model.conditional_prior = true;
      c.model.gating = true;
      c.train.distill_temperature = 2.0;
      c.schedule.mode = ScheduleMode::baseline;
      break;
    case Strategy::bir_dyn:
      c.model.conditional_prior = true;
      c.model.gating = true;
      c.train.distill_temperature = 2.0;
      c.schedule.mode = ScheduleMode::decay_pred_label;
      break;
  }
}

}  // namespace

ExperimentConfig experiment_config_from_map(std::map<std::string, std::string> kv) {
  KvReader r(std::move(kv));
  ExperimentConfig c;

  if (r.has("benchmark")) c.benchmark = benchmark_from_string(r.str("benchmark"));
  if (r.has("strategy")) c.strategy = strategy_from_string(r.str("strategy"));
  apply_benchmark_defaults(c);
  apply_strategy_defaults(c);

  if (r.has("seeds")) c.seeds = r.list<std::uint64_t>("seeds");
  if (r.has("output_dir")) c.output_dir = r.str("output_dir");
  if (r.has("data_dir")) c.data_dir = r.str("data_dir");
  if (c.data_dir.empty())
    if (const char* env = std::getenv("DGR_DATA_DIR")) c.data_dir = env;

  auto& t = c.train;
  if (r.has("train.iterations_per_task")) t.iterations_per_task = r.integer("train.iterations_per_task");
  if (r.has("train.batch_size")) t.batch_size = r.integer("train.batch_size");
  if (r.has("train.replay_batch_size")) t.replay_batch_size = r.integer("train.replay_batch_size");
  if (r.has("train.optimizer")) t.optimizer = r.str("train.optimizer");
  if (r.has("train.lr")) t.lr = r.num("train.lr");
  if (r.has("train.adam_beta1")) t.adam_beta1 = r.num("train.adam_beta1");
  if (r.has("train.adam_beta2")) t.adam_beta2 = r.num("train.adam_beta2");
  if (r.has("train.adam_eps")) t.adam_eps = r.num("train.adam_eps");
  if (r.has("train.distill_temperature")) t.distill_temperature = r.num("train.distill_temperature");
  if (r.has("train.weighted_branches")) t.weighted_branches = r.boolean("train.weighted_branches");
  if (r.has("train.log_every")) t.log_every = r.integer("train.log_every");

  auto& s = c.schedule;
  if (r.has("schedule.mode")) s.mode = schedule_mode_from_string(r.str("schedule.mode"));
  if (r.has("schedule.k_alpha")) s.k_alpha = r.num("schedule.k_alpha");
  if (r.has("schedule.k_beta")) s.k_beta = r.num("schedule.k_beta");
  if (r.has("schedule.floor_a")) s.floor_a = r.num("schedule.floor_a");
  if (r.has("schedule.floor_b")) s.floor_b = r.num("schedule.floor_b");
  if (r.has("schedule.const_alpha")) s.const_alpha = r.num("schedule.const_alpha");
  if (r.has("schedule.const_beta")) s.const_beta = r.num("schedule.const_beta");
  if (r.has("schedule.amplitude")) s.amplitude = r.num("schedule.amplitude");
  if (r.has("schedule.time_source")) s.time_source = time_source_from_string(r.str("schedule.time_source"));

  auto& m = c.model;
  if (r.has("model.d_z")) m.d_z = r.integer("model.d_z");
  if (r.has("model.channels")) {
    auto ch = r.list<int>("model.channels");
    m.channels.assign(ch.begin(), ch.end());
  }
  if (r.has("model.kernel")) m.kernel = r.integer("model.kernel");
  if (r.has("model.stride")) m.stride = r.integer("model.stride");
  if (r.has("model.pad")) m.pad = r.integer("model.pad");
  if (r.has("model.conditional_prior")) m.conditional_prior = r.boolean("model.conditional_prior");
  if (r.has("model.gating")) m.gating = r.boolean("model.gating");
  if (r.has("model.keep_fraction")) m.keep_fraction = r.num("model.keep_fraction");
  if (r.has("model.logvar_clamp")) m.logvar_clamp = r.num("model.logvar_clamp");
  if (r.has("model.recon")) m.recon = recon_kind_from_string(r.str("model.recon"));
  if (r.has("model.prior_mean_std")) m.prior_mean_std = r.num("model.prior_mean_std");

  auto& a = c.ablate;
  if (r.has("ablate.groups")) {
    auto g = r.list<int>("ablate.groups");
    a.groups.assign(g.begin(), g.end());
  }
  if (r.has("ablate.values")) a.values = r.num_list("ablate.values");
  if (r.has("ablate.floors")) a.floors = r.num_list("ablate.floors");
  if (r.has("ablate.amplitudes")) a.amplitudes = r.num_list("ablate.amplitudes");
  if (r.has("ablate.include_baseline")) a.include_baseline = r.boolean("ablate.include_baseline");

  r.reject_leftovers();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  try {
    return experiment_config_from_map(parse_kv_file(path));
  } catch (const ParseError& e) {
    // malformed config text is a configuration problem, not a runtime one
    throw ConfigError(e.what(), "config file");
  }
}

}  // namespace dgr
