#pragma once

// JSON run configuration for the command-line tool. Unknown keys and type
// errors are reported with the line they occur on; every field has a default
// and `resolved_json` writes all of them back out, so a resolved file re-reads
// into the same plan.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfgo/design/bayes_opt.hpp"
#include "lfgo/estimators/utility.hpp"
#include "lfgo/sim/registry.hpp"

namespace lfgo::cli {

using nlohmann::json;

/// Invalid or unreadable configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  std::vector<std::size_t> counts;           ///< equally spaced points over the model's bounds
  std::vector<std::vector<double>> axes;     ///< explicit per-dimension points (wins over counts)
};

struct OptimizeSpec {
  design::BoSettings bo;
  std::vector<Interval> bounds;  ///< empty: the model's design bounds
};

struct AbcCvSpec {
  std::vector<double> design;  ///< required by abc-cv
  std::vector<double> epsilon_grid{0.1, 0.2, 0.3, 0.4, 0.5};
  std::size_t n_holdout = 1000;
};

struct RatioFitSpec {
  std::string numerator, denominator;                  ///< required by ratio-fit
  std::string heldout_numerator, heldout_denominator;  ///< optional
};

struct RunConfig {
  ModelSpec model;
  std::string estimator = "auto";  ///< dr1 | dr2 | auto | kde | nmc_param | nmc_z1 | nmc_z2
  est::EstimatorConfig sampling;   ///< also carries the abc and ratio sections
  GridSpec grid;
  OptimizeSpec optimize;
  AbcCvSpec abc_cv;
  RatioFitSpec ratio_fit;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string output_dir = "out";

  std::string source = "<config>";  ///< for diagnostics; not serialized
  std::map<std::string, int> lines; ///< key path -> line in the source

  /// Line of a key path, falling back to its nearest ancestor.
  int line_of(std::string path) const {
    while (true) {
      if (auto it = lines.find(path); it != lines.end()) return it->second;
      const auto cut = path.find_last_of(".[");
      if (cut == std::string::npos) return 1;
      path.resize(cut);
    }
  }
  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    throw ConfigError(source + ":" + std::to_string(line_of(path)) + ": " + msg);
  }
};

namespace detail {

/// Maps every object key of a JSON text to the line it starts on. Paths use
/// dots for members and [i] for array elements ("grid.axes[0]").
inline std::map<std::string, int> key_lines(const std::string& text) {
  struct Frame {
    bool object;
    std::string path;
    std::string key;
    std::size_t index = 0;
  };
  std::vector<Frame> stack;
  std::map<std::string, int> out;
  std::string last;
  int last_line = 0;
  bool have_string = false;
  int line = 1;
  auto join = [](const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; };
  auto child_path = [&]() -> std::string {
    if (stack.empty()) return "";
    const Frame& f = stack.back();
    return f.object ? join(f.path, f.key) : f.path + "[" + std::to_string(f.index) + "]";
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
    } else if (c == '"') {
      last.clear();
      last_line = line;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        if (text[i] == '\n') ++line;
        last += text[i];
      }
      have_string = true;
    } else if (c == ':') {
      if (have_string && !stack.empty() && stack.back().object) {
        stack.back().key = last;
        out[join(stack.back().path, last)] = last_line;
      }
      have_string = false;
    } else if (c == '{' || c == '[') {
      const std::string p = child_path();
      stack.push_back({c == '{', p, "", 0});
      have_string = false;
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
      have_string = false;
    } else if (c == ',') {
      if (!stack.empty() && !stack.back().object) ++stack.back().index;
      have_string = false;
    }
  }
  return out;
}

inline int line_of_byte(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

/// Typed, path-aware access to one JSON object of the configuration.
class Section {
 public:
  Section(const RunConfig& cfg, const json& obj, std::string path) : cfg_(cfg), obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) cfg_.fail(path_, "'" + path_ + "' must be an object");
  }

  /// Rejects keys outside `allowed`.
  void only(const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : obj_.items()) {
      if (allowed.count(k)) continue;
      std::string known;
      for (const auto& a : allowed) known += (known.empty() ? "" : ", ") + a;
      cfg_.fail(at(k), "unknown key '" + at(k) + "' (expected one of: " + known + ")");
    }
  }

  bool has(const std::string& k) const { return obj_.contains(k); }
  std::string at(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  Section sub(const std::string& k) const { return Section(cfg_, obj_.at(k), at(k)); }

  void get(const std::string& k, double& out) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_number()) cfg_.fail(at(k), "'" + at(k) + "' must be a number");
    out = v.get<double>();
  }
  void get(const std::string& k, std::size_t& out) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_number_unsigned()) cfg_.fail(at(k), "'" + at(k) + "' must be a nonnegative integer");
    out = v.get<std::size_t>();
  }
  void get(const std::string& k, std::uint64_t& out, int) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_number_unsigned()) cfg_.fail(at(k), "'" + at(k) + "' must be a nonnegative integer");
    out = v.get<std::uint64_t>();
  }
  void get(const std::string& k, bool& out) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_boolean()) cfg_.fail(at(k), "'" + at(k) + "' must be true or false");
    out = v.get<bool>();
  }
  void get(const std::string& k, std::string& out) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_string()) cfg_.fail(at(k), "'" + at(k) + "' must be a string");
    out = v.get<std::string>();
  }
  void get(const std::string& k, std::vector<double>& out) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_array()) cfg_.fail(at(k), "'" + at(k) + "' must be an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) cfg_.fail(at(k), "'" + at(k) + "[" + std::to_string(i) + "]' must be a number");
      out.push_back(v[i].get<double>());
    }
  }
  void get(const std::string& k, std::vector<std::size_t>& out) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_array()) cfg_.fail(at(k), "'" + at(k) + "' must be an array of integers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_unsigned())
        cfg_.fail(at(k), "'" + at(k) + "[" + std::to_string(i) + "]' must be a nonnegative integer");
      out.push_back(v[i].get<std::size_t>());
    }
  }
  void get(const std::string& k, std::vector<std::vector<double>>& out) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_array()) cfg_.fail(at(k), "'" + at(k) + "' must be an array of arrays");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = at(k) + "[" + std::to_string(i) + "]";
      if (!v[i].is_array()) cfg_.fail(p, "'" + p + "' must be an array of numbers");
      std::vector<double> row;
      for (const auto& x : v[i]) {
        if (!x.is_number()) cfg_.fail(p, "'" + p + "' must contain only numbers");
        row.push_back(x.get<double>());
      }
      out.push_back(std::move(row));
    }
  }

  /// A string restricted to `choices`.
  void choice(const std::string& k, std::string& out, const std::vector<std::string>& choices) const {
    get(k, out);
    if (std::find(choices.begin(), choices.end(), out) != choices.end()) return;
    std::string known;
    for (const auto& c : choices) known += (known.empty() ? "" : ", ") + c;
    cfg_.fail(at(k), "'" + at(k) + "' = '" + out + "' is not one of: " + known);
  }

 private:
  const RunConfig& cfg_;
  const json& obj_;
  std::string path_;
};

inline std::string adjustment_name(abc::Adjustment a) {
  return a == abc::Adjustment::none ? "none" : a == abc::Adjustment::linear ? "linear" : "mlp";
}

inline abc::Adjustment adjustment_from(const std::string& s) {
  return s == "none" ? abc::Adjustment::none : s == "linear" ? abc::Adjustment::linear : abc::Adjustment::mlp;
}

}  // namespace detail

/// Parses and validates a configuration document. Relative ratio-fit paths
/// are resolved against `base_dir`.
inline RunConfig parse_config(const std::string& text, const std::string& source = "<config>",
                              const std::filesystem::path& base_dir = {}) {
  RunConfig cfg;
  cfg.source = source;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string what = e.what();
    if (const auto p = what.find("] "); p != std::string::npos) what = what.substr(p + 2);
    throw ConfigError(source + ":" + std::to_string(detail::line_of_byte(text, e.byte ? e.byte - 1 : 0)) +
                      ": invalid JSON: " + what);
  }
  cfg.lines = detail::key_lines(text);
  if (!root.is_object()) throw ConfigError(source + ":1: the configuration must be a JSON object");

  const detail::Section top(cfg, root, "");
  top.only({"model", "estimator", "sampling", "abc", "ratio", "grid", "optimize", "abc_cv", "ratio_fit", "seed",
            "workers", "output_dir"});
  top.get("seed", cfg.seed, 0);
  top.get("workers", cfg.workers);
  top.get("output_dir", cfg.output_dir);
  top.choice("estimator", cfg.estimator, {"auto", "dr1", "dr2", "kde", "nmc_param", "nmc_z1", "nmc_z2"});

  if (top.has("model")) {
    const auto s = top.sub("model");
    s.only({"name", "qoi", "n_dim", "t0", "sigma_y", "sigma_z", "deterministic"});
    s.choice("name", cfg.model.name, registered_models());
    if (!s.has("qoi")) cfg.model.qoi = "identity";
    s.choice("qoi", cfg.model.qoi, model_qois(cfg.model.name));
    s.get("n_dim", cfg.model.n_dim);
    s.get("t0", cfg.model.t0);
    s.get("sigma_y", cfg.model.sigma_y);
    s.get("sigma_z", cfg.model.sigma_z);
    s.get("deterministic", cfg.model.deterministic);
  }
  try {
    (void)make_model(cfg.model);
  } catch (const DomainError& e) {
    cfg.fail("model", std::string("invalid model: ") + e.what());
  }

  auto& est_cfg = cfg.sampling;
  if (top.has("sampling")) {
    const auto s = top.sub("sampling");
    s.only({"n_outer", "n_replicates", "n_inner", "max_failure_fraction", "max_posterior"});
    s.get("n_outer", est_cfg.n_outer);
    s.get("n_replicates", est_cfg.n_replicates);
    s.get("n_inner", est_cfg.n_inner);
    s.get("max_failure_fraction", est_cfg.max_failure_fraction);
    s.get("max_posterior", est_cfg.max_posterior);
  }
  if (top.has("abc")) {
    const auto s = top.sub("abc");
    s.only({"epsilon", "n_pool", "adjustment", "normalize_summaries", "min_accept", "mlp"});
    s.get("epsilon", est_cfg.abc.epsilon);
    s.get("n_pool", est_cfg.abc.n_pool);
    std::string adj = detail::adjustment_name(est_cfg.abc.adjustment);
    s.choice("adjustment", adj, {"none", "linear", "mlp"});
    est_cfg.abc.adjustment = detail::adjustment_from(adj);
    s.get("normalize_summaries", est_cfg.abc.normalize_summaries);
    s.get("min_accept", est_cfg.abc.min_accept);
    if (s.has("mlp")) {
      const auto m = s.sub("mlp");
      m.only({"hidden", "epochs", "step"});
      m.get("hidden", est_cfg.abc.mlp.hidden);
      m.get("epochs", est_cfg.abc.mlp.epochs);
      m.get("step", est_cfg.abc.mlp.step);
    }
  }
  if (top.has("ratio")) {
    const auto s = top.sub("ratio");
    s.only({"centers", "alpha", "nonnegative", "cv"});
    s.get("centers", est_cfg.ratio.centers);
    s.get("alpha", est_cfg.ratio.alpha);
    s.get("nonnegative", est_cfg.ratio.nonnegative);
    if (s.has("cv")) {
      const auto c = s.sub("cv");
      c.only({"sigmas", "sigma_scale", "lambdas", "folds"});
      c.get("sigmas", est_cfg.ratio.grid.sigmas);
      c.get("lambdas", est_cfg.ratio.grid.lambdas);
      c.get("folds", est_cfg.ratio.grid.folds);
      std::string scale =
          est_cfg.ratio.grid.sigma_scale == densratio::SigmaScale::absolute ? "absolute" : "median_relative";
      c.choice("sigma_scale", scale, {"median_relative", "absolute"});
      est_cfg.ratio.grid.sigma_scale =
          scale == "absolute" ? densratio::SigmaScale::absolute : densratio::SigmaScale::median_relative;
    }
  }
  try {
    est_cfg.validate();
  } catch (const DomainError& e) {
    cfg.fail("sampling", e.what());
  }

  if (top.has("grid")) {
    const auto s = top.sub("grid");
    s.only({"counts", "axes"});
    s.get("counts", cfg.grid.counts);
    s.get("axes", cfg.grid.axes);
  }
  if (top.has("optimize")) {
    const auto s = top.sub("optimize");
    s.only({"epochs", "batch", "initial_points", "acquisition_starts", "ei_jitter", "bounds"});
    auto& bo = cfg.optimize.bo;
    s.get("epochs", bo.epochs);
    s.get("batch", bo.batch);
    s.get("initial_points", bo.initial_points);
    s.get("acquisition_starts", bo.acquisition_starts);
    s.get("ei_jitter", bo.ei_jitter);
    std::vector<std::vector<double>> b;
    s.get("bounds", b);
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b[i].size() != 2) cfg.fail(s.at("bounds"), "each entry of 'optimize.bounds' must be [lower, upper]");
      cfg.optimize.bounds.push_back({b[i][0], b[i][1]});
    }
    try {
      bo.validate();
    } catch (const DomainError& e) {
      cfg.fail("optimize", e.what());
    }
  }
  if (top.has("abc_cv")) {
    const auto s = top.sub("abc_cv");
    s.only({"design", "epsilon_grid", "n_holdout"});
    s.get("design", cfg.abc_cv.design);
    s.get("epsilon_grid", cfg.abc_cv.epsilon_grid);
    s.get("n_holdout", cfg.abc_cv.n_holdout);
  }
  if (top.has("ratio_fit")) {
    const auto s = top.sub("ratio_fit");
    s.only({"numerator", "denominator", "heldout_numerator", "heldout_denominator"});
    auto& rf = cfg.ratio_fit;
    s.get("numerator", rf.numerator);
    s.get("denominator", rf.denominator);
    s.get("heldout_numerator", rf.heldout_numerator);
    s.get("heldout_denominator", rf.heldout_denominator);
    for (auto* p : {&rf.numerator, &rf.denominator, &rf.heldout_numerator, &rf.heldout_denominator})
      if (!p->empty() && std::filesystem::path(*p).is_relative() && !base_dir.empty())
        *p = (base_dir / *p).lexically_normal().string();
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path, std::filesystem::absolute(path).parent_path());
}

/// Every field, defaults included.
inline json resolved_json(const RunConfig& c) {
  const auto& e = c.sampling;
  json bounds = json::array();
  for (const auto& iv : c.optimize.bounds) bounds.push_back({iv.lower, iv.upper});
  return {
      {"model",
       {{"name", c.model.name},
        {"qoi", c.model.qoi},
        {"n_dim", c.model.n_dim},
        {"t0", c.model.t0},
        {"sigma_y", c.model.sigma_y},
        {"sigma_z", c.model.sigma_z},
        {"deterministic", c.model.deterministic}}},
      {"estimator", c.estimator},
      {"sampling",
       {{"n_outer", e.n_outer},
        {"n_replicates", e.n_replicates},
        {"n_inner", e.n_inner},
        {"max_failure_fraction", e.max_failure_fraction},
        {"max_posterior", e.max_posterior}}},
      {"abc",
       {{"epsilon", e.abc.epsilon},
        {"n_pool", e.abc.n_pool},
        {"adjustment", detail::adjustment_name(e.abc.adjustment)},
        {"normalize_summaries", e.abc.normalize_summaries},
        {"min_accept", e.abc.min_accept},
        {"mlp", {{"hidden", e.abc.mlp.hidden}, {"epochs", e.abc.mlp.epochs}, {"step", e.abc.mlp.step}}}}},
      {"ratio",
       {{"centers", e.ratio.centers},
        {"alpha", e.ratio.alpha},
        {"nonnegative", e.ratio.nonnegative},
        {"cv",
         {{"sigmas", e.ratio.grid.sigmas},
          {"sigma_scale",
           e.ratio.grid.sigma_scale == densratio::SigmaScale::absolute ? "absolute" : "median_relative"},
          {"lambdas", e.ratio.grid.lambdas},
          {"folds", e.ratio.grid.folds}}}}},
      {"grid", {{"counts", c.grid.counts}, {"axes", c.grid.axes}}},
      {"optimize",
       {{"epochs", c.optimize.bo.epochs},
        {"batch", c.optimize.bo.batch},
        {"initial_points", c.optimize.bo.initial_points},
        {"acquisition_starts", c.optimize.bo.acquisition_starts},
        {"ei_jitter", c.optimize.bo.ei_jitter},
        {"bounds", bounds}}},
      {"abc_cv",
       {{"design", c.abc_cv.design}, {"epsilon_grid", c.abc_cv.epsilon_grid}, {"n_holdout", c.abc_cv.n_holdout}}},
      {"ratio_fit",
       {{"numerator", c.ratio_fit.numerator},
        {"denominator", c.ratio_fit.denominator},
        {"heldout_numerator", c.ratio_fit.heldout_numerator},
        {"heldout_denominator", c.ratio_fit.heldout_denominator}}},
      {"seed", c.seed},
      {"workers", c.workers},
      {"output_dir", c.output_dir},
  };
}

}  // namespace lfgo::cli
