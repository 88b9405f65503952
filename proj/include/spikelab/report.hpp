#pragma once

// Runs the configured ladder studies and turns them into JSON and Markdown.

#include "spikelab/config.hpp"

#include <cmath>
#include <sstream>

namespace spikelab {

inline json to_json(const Point& p) {
  json a = json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(p(i));
  return a;
}

inline json to_json(const LabThresholds& t) {
  return {{"exponent_slack", t.exponent_slack},     {"coefficient_tol", t.coefficient_tol},
          {"endpoint_tol", t.endpoint_tol},         {"pair_rel_tol", t.pair_rel_tol},
          {"gradient_rel_tol", t.gradient_rel_tol}, {"bounded_factor", t.bounded_factor},
          {"loglog_tol", t.loglog_tol},             {"inconclusive_fraction", t.inconclusive_fraction},
          {"tau", t.tau},                           {"tau_sensitivity", t.tau_sensitivity}};
}

/// Non-finite numbers become null.
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const LadderStudy& s, const json& config) {
  json pts = json::array();
  for (const auto& p : s.points) {
    json e = json::object();
    for (const auto& [k, v] : p.extra) e[k] = finite_or_null(v);
    pts.push_back({{"x", p.x},
                   {"measured", finite_or_null(p.measured)},
                   {"predicted", finite_or_null(p.predicted)},
                   {"residual", finite_or_null(p.residual)},
                   {"error", finite_or_null(p.error)},
                   {"extra", e}});
  }
  json summary = json::object();
  for (const auto& [k, v] : s.summary) summary[k] = finite_or_null(v);
  json fit = nullptr;
  if (s.fitted) fit = {{"exponent", s.fit.exponent}, {"intercept", s.fit.intercept}, {"r2", s.fit.r2}};
  return {{"study_id", s.id},     {"quantity", s.quantity}, {"ladder", s.ladder_name}, {"config", config},
          {"points", pts},        {"fit", fit},             {"summary", summary},      {"notes", s.notes},
          {"status", to_string(s.status)}};
}

struct StudyRecord {
  LadderStudy study;
  json config;
};

namespace detail {

inline LadderStudy failed_study(const std::string& id, const std::string& why) {
  LadderStudy s;
  s.id = id;
  s.status = StudyStatus::fail;
  s.notes.push_back(why);
  return s;
}

inline std::vector<double> default_loglog_ladder() { return {1e8, 1e16, 1e32, 1e64, 1e128, 1e256}; }

}  // namespace detail

/// Runs one declarative study; gradient and loglog studies yield several records.
inline std::vector<StudyRecord> run_study(const StudySpec& st, const RunConfig& cfg) {
  const BallDomain dom = cfg.domain();
  LabThresholds t = cfg.thresholds;
  if (!st.threshold_overrides.empty()) detail::read_thresholds(st.threshold_overrides, "thresholds", t);
  json conf = {{"id", st.id}, {"thresholds", to_json(t)}};
  std::vector<StudyRecord> out;

  if (st.id == "norm" || st.id == "norm_lambda") {
    const Point a = st.center.value_or(dom.center());
    const auto& ladder = st.ladder.empty() ? cfg.lambda_ladder : st.ladder;
    conf["center"] = to_json(a);
    conf["ladder"] = ladder;
    auto s = st.id == "norm" ? verify_norm_expansion(dom, a, ladder, t, cfg.plan)
                               : verify_norm_lambda_expansion(dom, a, ladder, t, cfg.plan);
    out.push_back({s, conf});
  } else if (st.id == "pair" || st.id == "pair_nonlinear") {
    std::vector<Point> c = st.centers;
    if (c.empty()) {
      const Point e = Point::Unit(cfg.n, 0) * (0.3 * cfg.radius);
      c = {dom.center() + e, dom.center() - e};
    }
    const auto& ladder = st.ladder.empty() ? cfg.lambda_ladder : st.ladder;
    conf["centers"] = {to_json(c[0]), to_json(c[1])};
    conf["ratio"] = st.ratio;
    conf["ladder"] = ladder;
    auto s = st.id == "pair" ? verify_pair_expansion(dom, c[0], c[1], st.ratio, ladder, t, cfg.plan)
                               : verify_pair_nonlinear(dom, c[0], c[1], st.ratio, ladder, t, cfg.plan);
    out.push_back({s, conf});
  } else if (st.id == "gradient") {
    const auto& ladder = st.ladder.empty() ? cfg.eps_ladder : st.ladder;
    conf["ladder"] = ladder;
    conf["gamma"] = cfg.pattern.gamma;
    conf["collinear_search"] = cfg.search.collinear;
    const auto cps = find_critical_points(cfg.pattern, dom, cfg.search);
    const CriticalPoint* cp = nullptr;
    for (const auto& c : cps)
      if (c.nondegenerate) {
        cp = &c;
        break;
      }
    if (!cp) {
      for (const char* id : {"gradient_alpha", "gradient_lambda", "gradient_position"})
        out.push_back({detail::failed_study(id, "no certified critical point for the pattern"), conf});
      return out;
    }
    json centers = json::array();
    for (const auto& x : cp->x) centers.push_back(to_json(x));
    conf["critical_point"] = centers;
    for (auto& s : verify_gradient_expansions(dom, *cp, cfg.pattern, ladder, t, cfg.plan)) out.push_back({s, conf});
  } else if (st.id == "loglog") {
    const auto ladder = st.ladder.empty() ? detail::default_loglog_ladder() : st.ladder;
    conf["ladder"] = ladder;
    for (double U : st.U) {
      json c = conf;
      c["U"] = U;
      out.push_back({verify_loglog(cfg.n, U, ladder, t), c});
    }
  } else {
    throw ConfigurationError("unknown study '" + st.id + "'");
  }
  return out;
}

inline std::vector<StudyRecord> run_studies(const RunConfig& cfg) {
  std::vector<StudyRecord> all;
  for (const auto& st : cfg.studies) {
    try {
      for (auto& r : run_study(st, cfg)) all.push_back(std::move(r));
    } catch (const ConvergenceError& e) {
      all.push_back({detail::failed_study(st.id, std::string("quadrature failure: ") + e.what()), {{"id", st.id}}});
    }
  }
  return all;
}

inline bool any_failed(const std::vector<StudyRecord>& r) {
  for (const auto& s : r)
    if (s.study.status == StudyStatus::fail) return true;
  return false;
}

inline json verify_report(const std::vector<StudyRecord>& recs, const std::string& hash) {
  json studies = json::array();
  for (const auto& r : recs) studies.push_back(to_json(r.study, r.config));
  return {{"config_hash", hash}, {"studies", studies}, {"failed", any_failed(recs)}};
}

inline std::string summary_markdown(const std::vector<StudyRecord>& recs, const std::string& hash) {
  std::ostringstream os;
  os << "# Ladder studies\n\nconfig hash `" << hash << "`\n\n";
  if (recs.empty()) {
    os << "No studies configured.\n";
    return os.str();
  }
  os << "| study | quantity | points | exponent | R^2 | status | notes |\n";
  os << "|---|---|---|---|---|---|---|\n";
  for (const auto& r : recs) {
    const auto& s = r.study;
    char e[32] = "-", q[32] = "-";
    if (s.fitted) {
      std::snprintf(e, sizeof e, "%.4f", s.fit.exponent);
      std::snprintf(q, sizeof q, "%.6f", s.fit.r2);
    }
    std::string notes;
    for (const auto& n : s.notes) notes += (notes.empty() ? "" : "; ") + n;
    std::string quantity = s.quantity;
    for (std::size_t p = quantity.find('|'); p != std::string::npos; p = quantity.find('|', p + 2)) quantity.replace(p, 1, "\\|");
    os << "| " << s.id << " | " << quantity << " | " << s.points.size() << " | " << e << " | " << q << " | "
       << to_string(s.status) << " | " << (notes.empty() ? "-" : notes) << " |\n";
  }
  return os.str();
}

}  // namespace spikelab
