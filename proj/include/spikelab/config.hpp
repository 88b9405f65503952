#pragma once

// Run configuration: one JSON document, validated field by field. Unknown
// keys are rejected with their path.

#include "spikelab/lab.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace spikelab {

using json = nlohmann::json;

struct StudySpec {
  std::string id;                    ///< norm, norm_lambda, pair, pair_nonlinear, gradient, loglog
  std::optional<Point> center;       ///< norm studies; defaults to the domain center
  std::vector<Point> centers;        ///< pair studies; defaults to +-0.3 R on axis 0
  double ratio = 2.0;                ///< lambda_j / lambda_i for pair studies
  std::vector<double> U{0.5, 1.0, 2.0, 10.0};
  std::vector<double> ladder;        ///< replaces the run-level ladder when non-empty
  json threshold_overrides = json::object();
};

struct BuildSettings {
  double eps = 1e-4;
  double radius_fraction = 0.25;
  int grid = 41;
  bool refine = true;
};

struct LandscapeSettings {
  int spike = 0;                 ///< index of the spike moved over the slice
  int grid = 41;
  double extent = 0.95;          ///< fraction of the radius
  std::vector<Point> fixed;      ///< positions of the other spikes
};

struct RunConfig {
  int n = 4;
  Point center;
  double radius = 1.0;
  SpikePattern pattern = SpikePattern::same_sign(1);
  std::vector<double> eps_ladder{1e-5, 1e-4, 1e-3, 1e-2};
  std::vector<double> lambda_ladder{20, 40, 80, 160, 320, 640};
  IntegrationPlan plan;
  SearchConfig search;
  std::vector<StudySpec> studies;
  LabThresholds thresholds;
  BuildSettings build;
  LandscapeSettings landscape;
  std::string output = "out";

  BallDomain domain() const { return BallDomain(n, center, radius); }
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!allowed.count(it.key())) fail(join(it.key()), "unknown key");
  }

  bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  const json& at(const std::string& k) const { return j_.at(k); }
  std::string join(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ConfigurationError((path.empty() ? std::string("config") : path) + ": " + what);
  }

  void number(const std::string& k, double& out) const {
    if (!has(k)) return;
    if (!at(k).is_number()) fail(join(k), "expected a number");
    out = at(k).get<double>();
  }
  template <class I>
  void integer(const std::string& k, I& out) const {
    if (!has(k)) return;
    if (!at(k).is_number_integer()) fail(join(k), "expected an integer");
    if constexpr (std::is_unsigned_v<I>) {
      if (at(k).is_number_integer() && !at(k).is_number_unsigned()) fail(join(k), "expected a non-negative integer");
    }
    out = at(k).get<I>();
  }
  void boolean(const std::string& k, bool& out) const {
    if (!has(k)) return;
    if (!at(k).is_boolean()) fail(join(k), "expected true or false");
    out = at(k).get<bool>();
  }
  void string(const std::string& k, std::string& out) const {
    if (!has(k)) return;
    if (!at(k).is_string()) fail(join(k), "expected a string");
    out = at(k).get<std::string>();
  }
  void numbers(const std::string& k, std::vector<double>& out) const {
    if (!has(k)) return;
    out = number_array(at(k), join(k));
  }

  static std::vector<double> number_array(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
      v.push_back(j[i].get<double>());
    }
    return v;
  }
  static Point point(const json& j, const std::string& path, int n) {
    const auto v = number_array(j, path);
    if (int(v.size()) != n) fail(path, "expected " + std::to_string(n) + " coordinates");
    Point p(n);
    for (int i = 0; i < n; ++i) p(i) = v[std::size_t(i)];
    return p;
  }
  static std::vector<Point> points(const json& j, const std::string& path, int n) {
    if (!j.is_array()) fail(path, "expected an array of points");
    std::vector<Point> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(point(j[i], path + "[" + std::to_string(i) + "]", n));
    return v;
  }

 private:
  const json& j_;
  std::string path_;
};

inline void read_thresholds(const json& j, const std::string& path, LabThresholds& t) {
  ConfigReader r(j, path,
                 {"exponent_slack", "coefficient_tol", "endpoint_tol", "pair_rel_tol", "gradient_rel_tol",
                  "bounded_factor", "loglog_tol", "inconclusive_fraction", "tau", "tau_sensitivity"});
  r.number("exponent_slack", t.exponent_slack);
  r.number("coefficient_tol", t.coefficient_tol);
  r.number("endpoint_tol", t.endpoint_tol);
  r.number("pair_rel_tol", t.pair_rel_tol);
  r.number("gradient_rel_tol", t.gradient_rel_tol);
  r.number("bounded_factor", t.bounded_factor);
  r.number("loglog_tol", t.loglog_tol);
  r.number("inconclusive_fraction", t.inconclusive_fraction);
  r.number("tau", t.tau);
  r.numbers("tau_sensitivity", t.tau_sensitivity);
  auto positive = [&](double v, const char* k) {
    if (!(v > 0.0)) ConfigReader::fail(r.join(k), "must be positive");
  };
  positive(t.exponent_slack, "exponent_slack");
  positive(t.coefficient_tol, "coefficient_tol");
  positive(t.endpoint_tol, "endpoint_tol");
  positive(t.pair_rel_tol, "pair_rel_tol");
  positive(t.gradient_rel_tol, "gradient_rel_tol");
  positive(t.bounded_factor, "bounded_factor");
  positive(t.loglog_tol, "loglog_tol");
  positive(t.inconclusive_fraction, "inconclusive_fraction");
  if (!(t.tau > 0.0 && t.tau < 1.0)) ConfigReader::fail(r.join("tau"), "must lie in (0, 1)");
  for (double v : t.tau_sensitivity)
    if (!(v > 0.0 && v < 1.0)) ConfigReader::fail(r.join("tau_sensitivity"), "entries must lie in (0, 1)");
}

inline const std::set<std::string>& study_ids() {
  static const std::set<std::string> ids{"norm", "norm_lambda", "pair", "pair_nonlinear", "gradient", "loglog"};
  return ids;
}

inline void check_ladder(const std::vector<double>& v, const std::string& path) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) ConfigReader::fail(path, "entries must be positive");
    if (i > 0 && !(v[i] > v[i - 1])) ConfigReader::fail(path, "must be strictly increasing");
  }
}

}  // namespace detail

/// Builds and validates a RunConfig. Missing keys keep their defaults.
inline RunConfig parse_config(const json& j) {
  using detail::ConfigReader;
  RunConfig c;
  ConfigReader r(j, "",
                 {"dimension", "domain", "pattern", "epsilon_ladder", "lambda_ladder", "quadrature", "search", "studies",
                  "thresholds", "build", "landscape", "output"});
  r.integer("dimension", c.n);
  if (c.n < 3 || c.n > 12) ConfigReader::fail("dimension", "must lie in [3, 12]");
  c.center = Point::Zero(c.n);

  if (r.has("domain")) {
    ConfigReader d(r.at("domain"), "domain", {"center", "radius"});
    if (d.has("center")) c.center = ConfigReader::point(d.at("center"), "domain.center", c.n);
    d.number("radius", c.radius);
  }
  if (!(c.radius > 0.0)) ConfigReader::fail("domain.radius", "must be positive");

  if (r.has("pattern")) {
    ConfigReader p(r.at("pattern"), "pattern", {"gamma"});
    if (p.has("gamma")) {
      const auto& g = p.at("gamma");
      if (!g.is_array() || g.empty()) ConfigReader::fail("pattern.gamma", "expected a non-empty array of +1/-1");
      std::vector<int> gamma;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g[i].is_number_integer() || (g[i].get<int>() != 1 && g[i].get<int>() != -1))
          ConfigReader::fail("pattern.gamma[" + std::to_string(i) + "]", "expected +1 or -1");
        gamma.push_back(g[i].get<int>());
      }
      c.pattern = SpikePattern(gamma);
    }
  }

  r.numbers("epsilon_ladder", c.eps_ladder);
  r.numbers("lambda_ladder", c.lambda_ladder);
  detail::check_ladder(c.eps_ladder, "epsilon_ladder");
  detail::check_ladder(c.lambda_ladder, "lambda_ladder");
  for (double e : c.eps_ladder)
    if (!(e < 1.0 / kE)) ConfigReader::fail("epsilon_ladder", "entries must lie in (0, 1/e)");

  if (r.has("quadrature")) {
    ConfigReader q(r.at("quadrature"), "quadrature",
                   {"rel_tol", "abs_tol", "min_level", "max_level", "backend", "mc_samples", "master_seed", "threads"});
    q.number("rel_tol", c.plan.quad.rel_tol);
    q.number("abs_tol", c.plan.quad.abs_tol);
    q.integer("min_level", c.plan.quad.min_level);
    q.integer("max_level", c.plan.quad.max_level);
    std::string backend = to_string(c.plan.backend);
    q.string("backend", backend);
    if (backend == "auto") c.plan.backend = BackendChoice::automatic;
    else if (backend == "axisym") c.plan.backend = BackendChoice::axisym;
    else if (backend == "mc") c.plan.backend = BackendChoice::monte_carlo;
    else ConfigReader::fail("quadrature.backend", "expected auto, axisym or mc");
    q.integer("mc_samples", c.plan.mc.n_samples);
    q.integer("master_seed", c.plan.mc.master_seed);
    q.integer("threads", c.plan.mc.threads);
  }
  if (!(c.plan.quad.rel_tol > 0.0)) ConfigReader::fail("quadrature.rel_tol", "must be positive");
  if (!(c.plan.quad.abs_tol >= 0.0)) ConfigReader::fail("quadrature.abs_tol", "must be non-negative");
  if (c.plan.quad.min_level < 0 || c.plan.quad.max_level < c.plan.quad.min_level || c.plan.quad.max_level > 12)
    ConfigReader::fail("quadrature.max_level", "levels must satisfy 0 <= min_level <= max_level <= 12");
  if (c.plan.mc.threads == 0) ConfigReader::fail("quadrature.threads", "must be at least 1");
  try {
    c.plan.mc.validate();
  } catch (const ConfigurationError& e) {
    ConfigReader::fail("quadrature.mc_samples", e.what());
  }

  if (r.has("search")) {
    ConfigReader s(r.at("search"), "search",
                   {"collinear", "axis", "grid", "random_starts", "seed", "max_radius_fraction", "hess_tol"});
    s.boolean("collinear", c.search.collinear);
    if (s.has("axis")) c.search.axis = ConfigReader::point(s.at("axis"), "search.axis", c.n);
    s.integer("grid", c.search.grid);
    s.integer("random_starts", c.search.random_starts);
    s.integer("seed", c.search.seed);
    s.number("max_radius_fraction", c.search.max_radius_fraction);
    s.number("hess_tol", c.search.hess_tol);
  }
  if (c.search.grid < 2) ConfigReader::fail("search.grid", "must be at least 2");
  if (c.search.random_starts < 1) ConfigReader::fail("search.random_starts", "must be at least 1");
  if (!(c.search.max_radius_fraction > 0.0 && c.search.max_radius_fraction < 1.0))
    ConfigReader::fail("search.max_radius_fraction", "must lie in (0, 1)");
  if (c.search.axis.size() == c.n && !(c.search.axis.norm() > 0.0)) ConfigReader::fail("search.axis", "must be nonzero");

  if (r.has("thresholds")) detail::read_thresholds(r.at("thresholds"), "thresholds", c.thresholds);

  if (r.has("studies")) {
    const auto& sj = r.at("studies");
    if (!sj.is_array()) ConfigReader::fail("studies", "expected an array");
    for (std::size_t i = 0; i < sj.size(); ++i) {
      const std::string path = "studies[" + std::to_string(i) + "]";
      StudySpec st;
      if (sj[i].is_string()) {
        st.id = sj[i].get<std::string>();
      } else {
        ConfigReader s(sj[i], path, {"id", "center", "centers", "ratio", "U", "ladder", "thresholds"});
        if (!s.has("id")) ConfigReader::fail(path + ".id", "missing");
        s.string("id", st.id);
        if (s.has("center")) st.center = ConfigReader::point(s.at("center"), path + ".center", c.n);
        if (s.has("centers")) st.centers = ConfigReader::points(s.at("centers"), path + ".centers", c.n);
        s.number("ratio", st.ratio);
        s.numbers("U", st.U);
        s.numbers("ladder", st.ladder);
        if (s.has("thresholds")) {
          LabThresholds probe = c.thresholds;
          detail::read_thresholds(s.at("thresholds"), path + ".thresholds", probe);
          st.threshold_overrides = s.at("thresholds");
        }
      }
      if (!detail::study_ids().count(st.id)) ConfigReader::fail(path + ".id", "unknown study '" + st.id + "'");
      if (!st.centers.empty() && st.centers.size() != 2) ConfigReader::fail(path + ".centers", "expected two points");
      if (!(st.ratio > 0.0)) ConfigReader::fail(path + ".ratio", "must be positive");
      for (double u : st.U)
        if (!(u > 0.0)) ConfigReader::fail(path + ".U", "entries must be positive");
      detail::check_ladder(st.ladder, path + ".ladder");
      c.studies.push_back(st);
    }
  }

  if (r.has("build")) {
    ConfigReader b(r.at("build"), "build", {"eps", "radius_fraction", "grid", "refine"});
    b.number("eps", c.build.eps);
    b.number("radius_fraction", c.build.radius_fraction);
    b.integer("grid", c.build.grid);
    b.boolean("refine", c.build.refine);
  }
  if (!(c.build.eps > 0.0 && c.build.eps < 1.0 / kE)) ConfigReader::fail("build.eps", "must lie in (0, 1/e)");
  if (!(c.build.radius_fraction > 0.0)) ConfigReader::fail("build.radius_fraction", "must be positive");
  if (c.build.grid < 2) ConfigReader::fail("build.grid", "must be at least 2");

  if (r.has("landscape")) {
    ConfigReader l(r.at("landscape"), "landscape", {"spike", "grid", "extent", "fixed"});
    l.integer("spike", c.landscape.spike);
    l.integer("grid", c.landscape.grid);
    l.number("extent", c.landscape.extent);
    if (l.has("fixed")) c.landscape.fixed = ConfigReader::points(l.at("fixed"), "landscape.fixed", c.n);
  }
  if (c.landscape.spike < 0 || c.landscape.spike >= c.pattern.m())
    ConfigReader::fail("landscape.spike", "must index a spike of the pattern");
  if (c.landscape.grid < 2) ConfigReader::fail("landscape.grid", "must be at least 2");
  if (!(c.landscape.extent > 0.0 && c.landscape.extent < 1.0))
    ConfigReader::fail("landscape.extent", "must lie in (0, 1)");
  if (!c.landscape.fixed.empty() && int(c.landscape.fixed.size()) != c.pattern.m() - 1)
    ConfigReader::fail("landscape.fixed", "expected one point per other spike");

  r.string("output", c.output);
  if (c.output.empty()) ConfigReader::fail("output", "must be non-empty");
  return c;
}

/// Applies "a.b.c=value" to a JSON document; the value is parsed as JSON and
/// taken as a plain string if that fails.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigurationError("override '" + assignment + "': expected key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigurationError("override '" + assignment + "': empty key segment");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigurationError("override '" + assignment + "': " + part + " is not inside an object");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the canonical (key-sorted, compact) dump of a config document.
inline std::string config_hash(const json& doc) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return buf;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError("config file '" + path + "': " + e.what());
  }
}

}  // namespace spikelab
