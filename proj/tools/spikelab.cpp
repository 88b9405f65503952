// spikelab: constants | landscape | critical | build | verify

#include <spikelab/report.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace spikelab;

namespace {

struct Session {
  json doc;          // config document after overrides
  RunConfig cfg;
  std::string hash;  // excludes the output directory
  fs::path out;
  std::string command;
  std::string started;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

Session open_session(const std::string& command, const std::string& config_path, std::optional<std::uint64_t> seed,
                     const std::string& out, const std::vector<std::string>& overrides) {
  Session s;
  s.command = command;
  s.started = utc_now();
  s.doc = config_path.empty() ? json::object() : load_json_file(config_path);
  if (!s.doc.is_object()) throw ConfigurationError("config: top level must be an object");
  for (const auto& o : overrides) apply_override(s.doc, o);
  if (seed) {
    s.doc["quadrature"]["master_seed"] = *seed;
    s.doc["search"]["seed"] = *seed;
  }
  if (!out.empty()) s.doc["output"] = out;
  s.cfg = parse_config(s.doc);
  json hashed = s.doc;
  hashed.erase("output");
  s.hash = config_hash(hashed);
  s.out = s.cfg.output;
  fs::create_directories(s.out);
  return s;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  os << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

void write_metadata(const Session& s, const std::vector<std::string>& files) {
  json j = {{"command", s.command},
            {"config_hash", s.hash},
            {"started_utc", s.started},
            {"finished_utc", utc_now()},
            {"outputs", files}};
  write_json(s.out / "metadata.json", j);
}

std::string num(double v) { return format_double(v); }

// ---------------------------------------------------------------- constants

int cmd_constants(const Session& s) {
  const int n = s.cfg.n;
  const auto& k = constants_for(n);
  const double scale = std::pow(k.c0, 2.0 * n / (n - 2));
  const double S = kPi * n * (n - 2) * std::pow(std::tgamma(0.5 * n) / std::tgamma(double(n)), 2.0 / n);
  struct Row {
    const char* name;
    double computed, closed;
  };
  const Row rows[] = {{"Sn_pow (Beta form)", k.Sn_pow, scale * beta_radial_integral(n, n)},
                      {"Sn_pow (S_n^{n/2})", k.Sn_pow, std::pow(S, 0.5 * n)},
                      {"cbar1 (Beta form)", k.cbar1, scale * beta_radial_integral(n, 0.5 * (n + 2))},
                      {"Gamma2 / Gamma3", k.Gamma2 / k.Gamma3, double(n - 2)}};
  std::printf("universal constants, n = %d%s\n", n, k.outside_theorem ? "  (outside the n >= 4 range)" : "");
  std::printf("  c0          %.16e\n  Sn_pow      %.16e\n  cbar1       %.16e\n", k.c0, k.Sn_pow, k.cbar1);
  std::printf("  Gamma1      %.16e\n  Gamma2      %.16e\n  Gamma3      %.16e\n", k.Gamma1, k.Gamma2, k.Gamma3);
  std::printf("  cbar        %.16e\n  orthogonality %.3e\n\n", k.cbar, k.orthogonality);
  std::printf("%-22s %-24s %-24s %s\n", "cross-check", "computed", "closed form", "rel. error");
  json checks = json::array();
  for (const auto& r : rows) {
    const double rel = std::abs(r.computed / r.closed - 1.0);
    std::printf("%-22s %.16e %.16e %.3e\n", r.name, r.computed, r.closed, rel);
    checks.push_back({{"name", r.name}, {"computed", r.computed}, {"closed_form", r.closed}, {"rel_error", rel}});
  }
  json j = {{"config_hash", s.hash},
            {"n", n},
            {"constants",
             {{"c0", k.c0},
              {"Sn_pow", k.Sn_pow},
              {"cbar1", k.cbar1},
              {"Gamma1", k.Gamma1},
              {"Gamma2", k.Gamma2},
              {"Gamma3", k.Gamma3},
              {"cbar", k.cbar},
              {"orthogonality", k.orthogonality},
              {"quad_error", k.quad_error},
              {"outside_theorem", k.outside_theorem}}},
            {"cross_checks", checks}};
  write_json(s.out / "constants.json", j);
  write_metadata(s, {"constants.json"});
  return 0;
}

// ---------------------------------------------------------------- landscape

int cmd_landscape(const Session& s) {
  const auto& c = s.cfg;
  const BallDomain dom = c.domain();
  const int m = c.pattern.m();
  std::vector<Point> others = c.landscape.fixed;
  if (others.empty() && m > 1) {
    // remaining spikes spread on axis 0
    for (int j = 0, k = 0; j < m; ++j) {
      if (j == c.landscape.spike) continue;
      Point p = dom.center();
      p(0) += c.radius * (-0.5 + double(k + 1) / m);
      others.push_back(p);
      ++k;
    }
  }
  std::ostringstream os;
  os << "# config_hash=" << s.hash << "\n";
  for (int i = 1; i <= c.n; ++i) os << "x_" << i << ',';
  os << "Ftilde,rho\n";
  const double R = c.radius * c.landscape.extent;
  const int g = c.landscape.grid;
  std::size_t rows = 0;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      Point y = dom.center();
      y(0) += -R + 2.0 * R * i / (g - 1);
      y(1) += -R + 2.0 * R * j / (g - 1);
      if ((y - dom.center()).norm() >= R) continue;
      Configuration x;
      for (int k = 0, o = 0; k < m; ++k) x.push_back(k == c.landscape.spike ? y : others[std::size_t(o++)]);
      double F = std::numeric_limits<double>::quiet_NaN(), rho = std::numeric_limits<double>::quiet_NaN();
      try {
        const auto M = matrix_M(x, c.pattern, dom);
        rho = M.rho;
        if (rho > 0.0) F = landscape(x, c.pattern, dom).Ftilde;
      } catch (const DomainError&) {
        // coincident spikes
      }
      for (int k = 0; k < c.n; ++k) os << num(y(k)) << ',';
      os << (std::isfinite(F) ? num(F) : "nan") << ',' << (std::isfinite(rho) ? num(rho) : "nan") << '\n';
      ++rows;
    }
  write_text(s.out / "landscape.csv", os.str());
  std::printf("landscape: %zu points -> %s\n", rows, (s.out / "landscape.csv").c_str());
  write_metadata(s, {"landscape.csv"});
  return 0;
}

// ---------------------------------------------------------------- critical

json critical_json(const CriticalPoint& cp) {
  json x = json::array();
  for (const auto& p : cp.x) x.push_back(to_json(p));
  json L = json::array(), e = json::array();
  for (Eigen::Index i = 0; i < cp.Lambda.size(); ++i) L.push_back(cp.Lambda(i));
  for (Eigen::Index i = 0; i < cp.hess_eigs.size(); ++i) e.push_back(cp.hess_eigs(i));
  return {{"x", x},
          {"Ftilde", cp.Ftilde},
          {"grad_norm", cp.grad_norm},
          {"hessian_eigenvalues", e},
          {"nondegenerate", cp.nondegenerate},
          {"collinear", cp.collinear},
          {"axis", to_json(cp.axis)},
          {"Lambda", L},
          {"rho", cp.rho}};
}

int cmd_critical(const Session& s) {
  const auto cps = find_critical_points(s.cfg.pattern, s.cfg.domain(), s.cfg.search);
  json arr = json::array();
  for (const auto& cp : cps) arr.push_back(critical_json(cp));
  write_json(s.out / "critical_points.json",
             {{"config_hash", s.hash}, {"gamma", s.cfg.pattern.gamma}, {"points", arr}});
  std::printf("critical: %zu point(s)\n", cps.size());
  for (const auto& cp : cps)
    std::printf("  Ftilde = %.12f  %s\n", cp.Ftilde, cp.nondegenerate ? "nondegenerate" : "degenerate");
  write_metadata(s, {"critical_points.json"});
  return 0;
}

// ---------------------------------------------------------------- build

int cmd_build(const Session& s) {
  const auto& c = s.cfg;
  const BallDomain dom = c.domain();
  const auto& k = constants_for(c.n);
  const auto cps = find_critical_points(c.pattern, dom, c.search);
  const CriticalPoint* cp = nullptr;
  for (const auto& p : cps)
    if (p.nondegenerate) {
      cp = &p;
      break;
    }
  if (!cp) {
    std::fprintf(stderr, "build: no certified critical point for this pattern and domain\n");
    write_json(s.out / "build.json", {{"config_hash", s.hash}, {"critical_point", nullptr}, {"built", false}});
    write_metadata(s, {"build.json"});
    return 1;
  }
  SpikeAnsatz ans = asymptotic_ansatz(c.build.eps, *cp, c.pattern, k);
  json refine_j = nullptr;
  if (c.build.refine) {
    RefineOptions opt;
    const auto r = refine(ans, *cp, dom, k, opt);
    ans = r.ansatz;
    refine_j = {{"residual", r.residual}, {"iterations", r.iterations}, {"history", r.history},
                {"jacobian_regular", r.jacobian_regular}};
  }
  const AnsatzField<BallDomain> field(ans, dom);
  const auto rows = sample_field(field, plane_grid(dom, c.build.grid));
  std::ostringstream csv;
  csv << "# config_hash=" << s.hash << "\n";
  write_field_csv(csv, rows, c.n);
  write_text(s.out / "field.csv", csv.str());

  const auto rep = concentration_report(ans, dom, cp->x, {c.build.radius_fraction * c.radius}, c.plan);
  double umin = 0.0, umax = 0.0;
  for (const auto& r : rows) {
    umin = std::min(umin, r.u);
    umax = std::max(umax, r.u);
  }
  json spikes = json::array();
  for (int i = 0; i < ans.m(); ++i)
    spikes.push_back({{"gamma", ans.pattern.gamma[std::size_t(i)]},
                      {"alpha", ans.alpha(i)},
                      {"lambda", ans.lambda(i)},
                      {"a", to_json(ans.a[std::size_t(i)])},
                      {"local_mass", rep.local_mass(i, 0)},
                      {"local_mass_ratio", rep.local_mass(i, 0) / rep.Sn_pow},
                      {"local_error", rep.local_error(i, 0)}});
  const auto flags = ans.flags(dom);
  json j = {{"config_hash", s.hash},
            {"eps", c.build.eps},
            {"critical_point", critical_json(*cp)},
            {"refine", refine_j},
            {"spikes", spikes},
            {"flags", flags.describe()},
            {"concentration",
             {{"radius", c.build.radius_fraction * c.radius},
              {"total_mass", rep.total_mass},
              {"total_ratio", rep.total_mass / rep.Sn_pow},
              {"total_error", rep.total_error},
              {"exterior", rep.exterior[0]},
              {"Sn_pow", rep.Sn_pow}}},
            {"field", {{"samples", rows.size()}, {"u_min", umin}, {"u_max", umax}}},
            {"built", true}};
  write_json(s.out / "build.json", j);
  std::printf("build: eps = %g, total mass / S = %.6f, u in [%.4g, %.4g]\n", c.build.eps, rep.total_mass / rep.Sn_pow,
              umin, umax);
  write_metadata(s, {"build.json", "field.csv"});
  return 0;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const Session& s) {
  const auto recs = run_studies(s.cfg);
  write_json(s.out / "report.json", verify_report(recs, s.hash));
  write_text(s.out / "summary.md", summary_markdown(recs, s.hash));
  for (const auto& r : recs) std::printf("%-22s %s\n", r.study.id.c_str(), to_string(r.study.status));
  write_metadata(s, {"report.json", "summary.md"});
  return any_failed(recs) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikelab: multispike ansatz construction and asymptotic ladder studies"};
  app.require_subcommand(1);
  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (quadrature and search)");
  app.add_option("--out", out, "output directory");
  app.add_option("--override", overrides, "dotted key=value applied to the config")->take_all();

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Session&);
  };
  const Command commands[] = {
      {"constants", "universal constants with closed-form cross-checks", cmd_constants},
      {"landscape", "grid scan of the reduced functional over a plane", cmd_landscape},
      {"critical", "certified critical points of the reduced functional", cmd_critical},
      {"build", "asymptotic ansatz, refinement, field samples and concentration", cmd_build},
      {"verify", "ladder studies; exit status 1 if any study failed", cmd_verify},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  for (const auto& c : commands) {
    if (!app.got_subcommand(c.name)) continue;
    try {
      const Session s = open_session(c.name, config_path, seed, out, overrides);
      return c.run(s);
    } catch (const ConfigurationError& e) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      return 2;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "%s: %s\n", c.name, e.what());
      return 1;
    }
  }
  return 1;
}
