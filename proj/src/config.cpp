#include "gvfn/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <type_traits>

namespace gvfn {

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

namespace {

const std::vector<std::pair<ExperimentKind, const char*>> kExperimentNames = {
    {ExperimentKind::kTimeseriesMg, "timeseries-mg"}, {ExperimentKind::kTimeseriesMso, "timeseries-mso"},
    {ExperimentKind::kCompassWorld, "compassworld"},  {ExperimentKind::kRingWorld, "ringworld"},
    {ExperimentKind::kTabularCheck, "tabular-check"}, {ExperimentKind::kDiscovery, "discovery"}};

const std::vector<std::pair<LearnerKind, const char*>> kLearnerNames = {
    {LearnerKind::kRtd, "rtd"},           {LearnerKind::kRgtd, "rgtd"},
    {LearnerKind::kSupervisedRnn, "supervised-rnn"}, {LearnerKind::kSupervisedGru, "supervised-gru"},
    {LearnerKind::kAuxRnn, "aux-rnn"},    {LearnerKind::kForecast, "forecast"}};

/// Reads typed fields of one JSON object and remembers which keys were consumed.
class Section {
 public:
  Section(const Json& doc, std::string path) : path_(std::move(path)) {
    if (doc.is_null()) return;
    if (!doc.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    doc_ = &doc;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return doc_ != nullptr && doc_->contains(key); }

  const Json* raw(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return nullptr;
    return &doc_->at(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    const Json* v = raw(key);
    if (v == nullptr) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError(field(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v->get<long long>() < 0) throw ConfigError(field(key), "must be non-negative");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      }
      out = v->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  template <typename T>
  void read_list(const std::string& key, std::vector<T>& out) {
    const Json* v = raw(key);
    if (v == nullptr) return;
    if (!v->is_array()) throw ConfigError(field(key), "expected a list");
    std::vector<T> tmp;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const Json& e = (*v)[i];
      const std::string f = field(key) + "[" + std::to_string(i) + "]";
      if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer()) throw ConfigError(f, "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (e.get<long long>() < 0) throw ConfigError(f, "must be non-negative");
        }
      } else {
        if (!e.is_number()) throw ConfigError(f, "expected a number");
      }
      tmp.push_back(e.get<T>());
    }
    out = std::move(tmp);
  }

  template <typename Enum>
  void read_enum(const std::string& key, Enum& out, Enum (*parse)(const std::string&)) {
    std::string name;
    if (!has(key)) {
      used_.insert(key);
      return;
    }
    read(key, name);
    try {
      out = parse(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(field(key), "unknown value '" + name + "'");
    }
  }

  Section child(const std::string& key) {
    const Json* v = raw(key);
    static const Json null_json;
    return Section(v == nullptr ? null_json : *v, field(key));
  }

  void finish() const {
    if (doc_ == nullptr) return;
    for (const auto& [key, value] : doc_->items()) {
      if (!used_.count(key)) throw ConfigError(field(key), "unknown field");
    }
  }

 private:
  const Json* doc_ = nullptr;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

bool is_timeseries(ExperimentKind k) { return k == ExperimentKind::kTimeseriesMg || k == ExperimentKind::kTimeseriesMso; }

std::string default_family(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kTimeseriesMg:
    case ExperimentKind::kTimeseriesMso: return "horizon";
    case ExperimentKind::kRingWorld: return "ringworld-chains";
    case ExperimentKind::kDiscovery: return "discovery-seed";
    default: return "terminating-horizon";
  }
}

void validate_combination(const ExperimentConfig& c) {
  const LearnerKind l = c.learner.kind;
  const bool gvfn = l == LearnerKind::kRtd || l == LearnerKind::kRgtd;
  switch (c.kind) {
    case ExperimentKind::kCompassWorld: {
      require(gvfn || l == LearnerKind::kForecast, "learner.kind", "compassworld supports rtd, rgtd or forecast");
      if (gvfn) {
        static const std::set<std::string> families = {"terminating-horizon", "horizon", "naive", "expert"};
        require(families.count(c.network.family) == 1, "network.family",
                "compassworld supports terminating-horizon, horizon, naive or expert");
      }
      break;
    }
    case ExperimentKind::kRingWorld:
      require(gvfn, "learner.kind", "ringworld supports rtd or rgtd");
      require(c.network.family == "ringworld-chains", "network.family", "ringworld uses ringworld-chains");
      break;
    case ExperimentKind::kTimeseriesMg:
    case ExperimentKind::kTimeseriesMso:
      require(l != LearnerKind::kForecast, "learner.kind", "forecast networks are a compassworld learner");
      require(c.network.family == "horizon", "network.family", "time series networks use the horizon family");
      break;
    case ExperimentKind::kDiscovery:
      require(gvfn, "learner.kind", "discovery supports rtd or rgtd");
      require(c.network.family == "discovery-seed", "network.family", "discovery starts from discovery-seed");
      break;
    case ExperimentKind::kTabularCheck: break;
  }
}

}  // namespace

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (const auto& [k, n] : kExperimentNames) {
    if (name == n) return k;
  }
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, n] : kExperimentNames) {
    if (k == kind) return n;
  }
  return "?";
}

LearnerKind parse_learner_kind(const std::string& name) {
  for (const auto& [k, n] : kLearnerNames) {
    if (name == n) return k;
  }
  throw std::invalid_argument("unknown learner kind '" + name + "'");
}

std::string to_string(LearnerKind kind) {
  for (const auto& [k, n] : kLearnerNames) {
    if (k == kind) return n;
  }
  return "?";
}

ExperimentConfig parse_config(const Json& doc) {
  ExperimentConfig c;
  Section top(doc, "");
  require(top.has("experiment"), "experiment", "required");
  top.read_enum("experiment", c.kind, parse_experiment_kind);
  top.read("run_id", c.run_id);
  require(!c.run_id.empty(), "run_id", "must not be empty");
  top.read_list("seeds", c.seeds);
  require(!c.seeds.empty(), "seeds", "must not be empty");
  top.read("steps", c.steps);
  require(c.steps > 0, "steps", "must be positive");
  top.read("window", c.window);
  require(c.window > 0, "window", "must be positive");
  top.read("output_dir", c.output_dir);

  {
    Section s = top.child("network");
    c.network.family = default_family(c.kind);
    s.read("family", c.network.family);
    if (is_timeseries(c.kind)) c.network.activation = {ActivationKind::kClippedLinear, -10.0, 10.0};
    s.read_enum("activation", c.network.activation.kind, parse_activation_kind);
    s.read("clip_lo", c.network.activation.lo);
    s.read("clip_hi", c.network.activation.hi);
    require(c.network.activation.lo < c.network.activation.hi, s.field("clip_hi"), "must exceed clip_lo");
    auto& p = c.network.params;
    s.read("count", p.count);
    s.read("gamma_lo", p.gamma_lo);
    s.read("gamma_hi", p.gamma_hi);
    s.read_list("exponents", p.exponents);
    s.read("expert_random_policy", p.expert_random_policy);
    s.read("chain_depth", p.chain_depth);
    s.read_list("horizons", c.network.horizons);
    require(!c.network.horizons.empty(), s.field("horizons"), "must not be empty");
    for (std::size_t k : c.network.horizons) require(k > 0, s.field("horizons"), "entries must be positive");
    p.compass_horizon = c.kind == ExperimentKind::kCompassWorld && c.network.family == "horizon";
    s.finish();
  }
  {
    Section s = top.child("learner");
    s.read_enum("kind", c.learner.kind, parse_learner_kind);
    s.read("truncation", c.learner.truncation);
    require(c.learner.truncation > 0, s.field("truncation"), "must be positive");
    s.read_enum("optimizer", c.learner.optimizer, parse_optimizer);
    s.read("alpha", c.learner.alpha);
    require(c.learner.alpha > 0.0, s.field("alpha"), "must be positive");
    s.read("beta", c.learner.beta);
    require(c.learner.beta >= 0.0, s.field("beta"), "must be non-negative");
    if (c.learner.kind == LearnerKind::kSupervisedRnn || c.learner.kind == LearnerKind::kSupervisedGru ||
        c.learner.kind == LearnerKind::kAuxRnn) {
      c.learner.batch = 32;
      c.learner.optimizer = OptimizerKind::kAdam;
      c.learner.alpha = 1e-3;
      // explicit entries override the baseline defaults
      s.read_enum("optimizer", c.learner.optimizer, parse_optimizer);
      s.read("alpha", c.learner.alpha);
    }
    s.read("batch", c.learner.batch);
    require(c.learner.batch > 0, s.field("batch"), "must be positive");
    s.read("clip_norm", c.learner.clip_norm);
    require(c.learner.clip_norm >= 0.0, s.field("clip_norm"), "must be non-negative");
    s.read("hidden", c.learner.hidden);
    require(c.learner.hidden > 0, s.field("hidden"), "must be positive");
    if (c.learner.kind == LearnerKind::kSupervisedRnn) c.learner.cell = CellKind::kSimple;
    s.read_enum("cell", c.learner.cell, parse_cell_kind);
    s.finish();
  }
  {
    Section s = top.child("head");
    if (c.kind == ExperimentKind::kDiscovery) {
      // pruning reads per-feature task weights, so the default head is linear
      c.head = {0, 0.001, OptimizerKind::kConstant};
    }
    s.read("hidden", c.head.hidden);
    s.read("alpha", c.head.alpha);
    require(c.head.alpha > 0.0, s.field("alpha"), "must be positive");
    s.read_enum("optimizer", c.head.optimizer, parse_optimizer);
    s.finish();
  }
  {
    Section s = top.child("compass");
    s.read("width", c.compass.width);
    s.read("height", c.compass.height);
    require(c.compass.width >= 2 && c.compass.height >= 2, s.field("width"), "grid must be at least 2x2");
    s.read("wander_min", c.compass.behavior.wander_min);
    s.read("wander_max", c.compass.behavior.wander_max);
    require(c.compass.behavior.wander_min >= 1 && c.compass.behavior.wander_max >= c.compass.behavior.wander_min,
            s.field("wander_max"), "need 1 <= wander_min <= wander_max");
    s.finish();
  }
  {
    Section s = top.child("series");
    c.series.kind = c.kind == ExperimentKind::kTimeseriesMso ? SeriesKind::kMso : SeriesKind::kMackeyGlass;
    s.read("length", c.series.length);
    s.read("tau", c.series.tau);
    s.read("alpha", c.series.alpha);
    s.read("beta", c.series.beta);
    s.read("dt", c.series.dt);
    s.read("y0", c.series.y0);
    s.read("rk4", c.series.rk4);
    s.read("burn_in", c.series.burn_in);
    s.read("stride", c.series.stride);
    s.read("horizon", c.series.horizon);
    if (is_timeseries(c.kind)) {
      try {
        c.series.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(s.field("length"), e.what());
      }
    }
    s.finish();
  }
  {
    Section s = top.child("discovery");
    s.read("interval", c.discovery.interval);
    require(c.discovery.interval > 0, s.field("interval"), "must be positive");
    s.read("fraction", c.discovery.fraction);
    require(c.discovery.fraction >= 0.0 && c.discovery.fraction <= 1.0, s.field("fraction"), "must lie in [0, 1]");
    s.read("regenerate", c.discovery.regenerate);
    s.read("noise", c.discovery.noise);
    s.read("noise_variance", c.discovery.noise_variance);
    require(c.discovery.noise_variance > 0.0, s.field("noise_variance"), "must be positive");
    s.finish();
  }
  {
    Section s = top.child("tabular");
    s.read("models", c.tabular_models);
    s.finish();
  }
  if (const Json* sw = top.raw("sweep")) {
    require(sw->is_object(), "sweep", "expected an object of dotted paths to lists");
    for (const auto& [path, values] : sw->items()) {
      require(values.is_array() && !values.empty(), "sweep." + path, "expected a non-empty list");
      c.sweep.emplace_back(path, std::vector<Json>(values.begin(), values.end()));
    }
  }
  top.finish();
  validate_combination(c);
  c.source = doc;
  c.source.erase("sweep");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  Json doc;
  try {
    doc = Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<file>", std::string("parse error: ") + e.what());
  }
  return parse_config(doc);
}

void set_path(Json& doc, const std::string& path, const Json& value) {
  Json* cur = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError(path, "empty path component");
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    Json& next = (*cur)[key];
    if (next.is_null()) next = Json::object();
    if (!next.is_object()) throw ConfigError(path, "path crosses a non-object");
    cur = &next;
    start = dot + 1;
  }
}

std::vector<SweepCell> expand_sweep(const ExperimentConfig& cfg) {
  std::vector<SweepCell> cells;
  std::vector<std::size_t> idx(cfg.sweep.size(), 0);
  for (;;) {
    SweepCell cell;
    Json doc = cfg.source;
    for (std::size_t g = 0; g < cfg.sweep.size(); ++g) {
      const auto& [path, values] = cfg.sweep[g];
      cell.overrides.emplace_back(path, values[idx[g]]);
      set_path(doc, path, values[idx[g]]);
      if (!cell.label.empty()) cell.label += ",";
      cell.label += path + "=" + values[idx[g]].dump();
    }
    if (cell.label.empty()) cell.label = "base";
    try {
      cell.config = parse_config(doc);
    } catch (const ConfigError& e) {
      throw ConfigError("sweep." + e.field(), e.what());
    }
    cells.push_back(std::move(cell));
    std::size_t g = cfg.sweep.size();
    while (g > 0) {
      --g;
      if (++idx[g] < cfg.sweep[g].second.size()) break;
      idx[g] = 0;
      if (g == 0) return cells;
    }
    if (cfg.sweep.empty()) return cells;
  }
}

std::vector<double> geometric_alpha_grid(int lo, int hi) {
  std::vector<double> out;
  for (int i = lo; i <= hi; ++i) out.push_back(0.1 * std::pow(1.5, i));
  return out;
}

}  // namespace gvfn
