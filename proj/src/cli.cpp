#include "sdfields/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <unistd.h>

#include "sdfields/errors.hpp"
#include "sdfields/field_process.hpp"
#include "sdfields/integrated_fields.hpp"
#include "sdfields/orlicz.hpp"
#include "sdfields/parallel.hpp"
#include "sdfields/sd_analysis.hpp"
#include "sdfields/volterra_sim.hpp"

namespace sdfields::cli {

namespace {

const std::vector<std::string> kSubcommands{"simulate", "orlicz", "sd-check", "fubini", "field-process", "cumulant"};

const std::map<std::string, double> kDefaultTolerances{{"consistency", 1e-6}, {"ou_marginal", 1e-6}};

// ---------------------------------------------------------------------------
// Formatting helpers

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_to_json(v[i]));
  return a;
}

json mat_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

json cplx_json(cplx z) { return json::array({number_to_json(z.real()), number_to_json(z.imag())}); }

json diagnostics_json(const SimDiagnostics& d) {
  return json{{"cells", d.cells},
              {"eps", d.eps},
              {"expected_jumps_per_cell", d.expected_jumps_per_cell},
              {"small_jump_variance", d.small_jump_variance},
              {"dropped_tail_mass", d.dropped_tail_mass}};
}

json witness_json(const DilationWitness& w) {
  json j{{"q", w.q}, {"index", w.index}, {"scaled_mass", w.scaled_mass}, {"mass", w.mass}};
  if (w.interval) j["interval"] = interval_to_json(*w.interval);
  if (w.set) {
    json boxes = json::array();
    for (const Box& b : w.set->region.boxes) {
      json lo = json::array();
      json hi = json::array();
      for (double x : b.lo) lo.push_back(number_to_json(x));
      for (double x : b.hi) hi.push_back(number_to_json(x));
      boxes.push_back(json{{"lo", lo}, {"hi", hi}});
    }
    j["set"] = json{{"coords", w.set->coords}, {"boxes", boxes}};
  }
  return j;
}

json dilation_json(const DilationResult& r) {
  json j{{"pass", r.pass}, {"pairs_checked", r.pairs_checked}};
  if (r.witness) j["witness"] = witness_json(*r.witness);
  return j;
}

std::vector<double> doubles(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigParse(path + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigParse(path + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::uint64_t parse_seed(const std::string& text, const std::string& origin) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || r.ec != std::errc() || r.ptr != text.data() + text.size())
    throw ConfigParse(origin + ": expected a non-negative 64-bit integer, got \"" + text + "\"");
  return v;
}

void check_output_path(const std::string& path, const std::string& what) {
  if (path.empty()) return;
  namespace fs = std::filesystem;
  const fs::path p(path);
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  if (!fs::is_directory(dir)) throw ConfigParse(what + ": directory " + dir.string() + " does not exist");
  if (fs::is_directory(p)) throw ConfigParse(what + ": " + path + " is a directory");
}

// ---------------------------------------------------------------------------
// Command-line arguments before resolution

struct Args {
  bool json_stdout = false;
  int threads = 1;
  std::string replay;
  std::string seed;
  std::vector<std::string> tolerances;
  std::string out;
  std::string report;

  std::string basis;
  std::string kernel;
  std::string grid;
  std::string mu;
  std::string sets;
  std::string spec;
  std::string intervals = "default";
  std::int64_t replicas = 1;
  bool replicas_given = false;
  std::vector<double> u;
  std::vector<double> theta;
  std::vector<double> q;
  std::vector<double> t_grid;
  std::vector<double> v;
  std::vector<double> window;
  double u_point = 0.0;
  int p = 1;
  int urbanik_depth = 0;
  int scales = 24;
  std::string check = "none";
  bool override_check = false;
};

// ---------------------------------------------------------------------------
// Subcommands. Each reads only cfg.inputs / cfg.options, fills in defaults and
// returns the result fields of the report.

struct Outcome {
  json result = json::object();
  /// "ok" for plain computations, "pass" / "fail" / "inconclusive" for checks.
  std::string status = "ok";
  /// Path data written next to the report (CSV), if any.
  std::string csv;
};

json& input(RunConfig& cfg, const std::string& role) {
  if (!cfg.inputs.contains(role)) throw ConfigParse("missing input document: " + role);
  return cfg.inputs[role];
}

json& option(RunConfig& cfg, const std::string& name, json fallback) {
  if (!cfg.options.contains(name)) cfg.options[name] = std::move(fallback);
  return cfg.options[name];
}

double tolerance(RunConfig& cfg, const std::string& name) {
  const json& t = cfg.tolerances[name];
  if (!t.is_number() || !(t.get<double>() >= 0.0)) throw ConfigParse("tolerances." + name + ": expected a number >= 0");
  return t.get<double>();
}

SimGrid seeded_grid(json& doc, const std::string& path, std::uint64_t seed) {
  doc["seed"] = seed;
  return grid_from_json(doc, path);
}

Outcome run_cumulant(RunConfig& cfg) {
  const LevyQuadruplet q = basis_from_json(input(cfg, "basis"), "basis");
  const KernelSpec k = kernel_from_json(input(cfg, "kernel"), "kernel");
  const auto u = doubles(option(cfg, "u", json::array({0.0})), "options.u");
  const auto theta = doubles(option(cfg, "theta", json::array({1.0})), "options.theta");
  if (u.empty() || u.size() != theta.size())
    throw ConfigParse("options.theta: needs one value per u point (" + std::to_string(u.size()) + ")");
  const Interval window = interval_from_json(option(cfg, "window", interval_to_json(Interval{})), "options.window");
  Outcome o;
  o.result["cumulant"] = cplx_json(cumulant_oracle(q, k, u, theta, window));
  return o;
}

Outcome run_orlicz(RunConfig& cfg) {
  const LevyQuadruplet q = basis_from_json(input(cfg, "basis"), "basis");
  const KernelSpec k = kernel_from_json(input(cfg, "kernel"), "kernel");
  const json& pj = option(cfg, "p", 1);
  if (!pj.is_number_integer() || pj.get<int>() < 0 || pj.get<int>() > 2)
    throw ConfigParse("options.p: expected 0, 1 or 2");
  const int p = pj.get<int>();
  const json& uj = option(cfg, "u", 0.0);
  if (!uj.is_number()) throw ConfigParse("options.u: expected a number");
  const double u = uj.get<double>();

  const OrliczContext ctx = OrliczContext::make(q, p);
  const IntegrabilityReport rep = phi_integral(ctx, kernel_section(k, u), true);
  Outcome o;
  json numeric{{"member", to_string(rep.member)},
               {"phi_integral", number_to_json(rep.phi_integral)},
               {"norm", number_to_json(rep.norm)},
               {"terms",
                {{"drift_H", number_to_json(rep.drift_term)},
                 {"gaussian", number_to_json(rep.gaussian_term)},
                 {"jump_origin", number_to_json(rep.jump_origin_term)},
                 {"jump_tail", number_to_json(rep.jump_tail_term)}}}};
  if (rep.diverging_term) numeric["diverging_term"] = to_string(*rep.diverging_term);
  o.result["numeric"] = numeric;

  Member verdict = rep.member;
  if (k.family == KernelFamily::gamma && p == 0 && k.scale != 0.0) {
    // The analytic criteria for the Gamma kernel settle membership outright.
    const GammaIntegrability g = gamma_kernel_integrable(*q.seed(point1(u)), k.alpha);
    o.result["analytic"] = json{{"member", g.yes ? "yes" : "no"}, {"criterion", g.criterion}, {"reason", g.reason}};
    verdict = g.yes ? Member::yes : Member::no;
  }
  o.result["member"] = to_string(verdict);
  o.status = verdict == Member::yes ? "pass" : verdict == Member::no ? "fail" : "inconclusive";
  return o;
}

// Selfdecomposability of the seed's jump measure decided from its family.
const char* analytic_sd(const std::string& family) {
  if (family == "gaussian" || family == "gamma" || family == "tempered_stable") return "selfdecomposable";
  if (family == "poisson" || family == "compound_poisson") return "not selfdecomposable";
  return "unknown";
}

Outcome run_sd_check(RunConfig& cfg) {
  json& basis_doc = input(cfg, "basis");
  const LevyQuadruplet q = basis_from_json(basis_doc, "basis");
  const auto q_grid = doubles(option(cfg, "q", default_q_grid()), "options.q");
  if (q_grid.empty()) throw ConfigParse("options.q: needs at least one dilation factor");
  for (double x : q_grid)
    if (!(x > 1.0)) throw ConfigParse("options.q: dilation factors must exceed 1");

  std::vector<Interval> intervals;
  const json& iv = option(cfg, "intervals", "default");
  if (iv.is_string() && iv.get<std::string>() == "default") {
    intervals = default_dilation_intervals();
  } else {
    json copy = iv;
    intervals = sets_from_json(copy, "options.intervals");
  }

  Outcome o;
  const LevySeed seed = *q.seed(point1(0.0));
  const DilationResult seed_result = dilation_check_1d(seed.rho, q_grid, intervals);
  o.result["levy_seed"] = dilation_json(seed_result);
  const std::string analytic = analytic_sd(basis_doc["family"].get<std::string>());
  o.result["levy_seed"]["analytic"] = analytic;
  bool pass = seed_result.pass;

  const json& depth = option(cfg, "urbanik_depth", 0);
  if (!depth.is_number_integer() || depth.get<int>() < 0) throw ConfigParse("options.urbanik_depth: expected an integer >= 0");
  if (depth.get<int>() > 0) {
    const UrbanikDepth d = urbanik_depth_1d(seed.rho, q_grid, depth.get<int>());
    json dj{{"depth", d.depth}, {"stop_reason", d.stop_reason}};
    if (d.witness) dj["witness"] = witness_json(*d.witness);
    o.result["urbanik"] = dj;
  }

  if (cfg.inputs.contains("kernel")) {
    const KernelSpec k = kernel_from_json(cfg.inputs["kernel"], "kernel");
    const auto u = doubles(option(cfg, "u", json::array({0.0})), "options.u");
    if (u.empty() || u.size() > kMaxCylinderCoords)
      throw ConfigParse("options.u: between 1 and " + std::to_string(kMaxCylinderCoords) + " points");
    const json& sc = option(cfg, "scales", 24);
    if (!sc.is_number_integer() || sc.get<int>() < 1) throw ConfigParse("options.scales: expected an integer >= 1");
    const MasterMeasureSpec spec = MasterMeasureSpec::make(q, k);
    const DilationResult field = dilation_check_field(spec, q_grid, default_cylinder_sets(u, sc.get<int>()));
    o.result["field"] = dilation_json(field);
    const ChargeZero cz = charge_zero_precondition(spec, u);
    o.result["field"]["charge_zero"] = json{{"guaranteed", cz.guaranteed}, {"reason", cz.reason}};
    if (k.stationary) {
      try {
        std::vector<double> xi;
        for (int i = -200; i <= 200; ++i) xi.push_back(0.1 * i);
        const FourierCheck fc = fourier_nonvanishing_check(k, xi);
        o.result["field"]["fourier_nonvanishing"] = fc.nonvanishing;
      } catch (const NotL1&) {
        o.result["field"]["fourier_nonvanishing"] = nullptr;
      }
    }
    pass = pass && field.pass;
  }

  o.status = pass ? "pass" : "fail";
  if (pass) {
    o.result["certificate"] = analytic == std::string("selfdecomposable")
                                  ? "proved: the seed is selfdecomposable"
                                  : "no violation found on the tested grid";
  }
  return o;
}

Outcome run_fubini(RunConfig& cfg) {
  const LevyQuadruplet q = basis_from_json(input(cfg, "basis"), "basis");
  const KernelSpec k = kernel_from_json(input(cfg, "kernel"), "kernel");
  const IntegratorMeasure mu = measure_from_json(input(cfg, "mu"), "mu");
  const std::vector<Interval> sets = sets_from_json(input(cfg, "sets"), "sets");
  const json& ov = option(cfg, "override", false);
  if (!ov.is_boolean()) throw ConfigParse("options.override: expected true or false");
  const bool override_check = ov.get<bool>();

  const OrliczContext ctx = OrliczContext::make(q, 1);
  Outcome o;
  json rows = json::array();
  bool any_fail = false;
  bool any_inconclusive = false;
  for (const Interval& a : sets) {
    const FubiniCheck c = fubini_condition_check(k, mu, a, ctx);
    json cj{{"verdict", to_string(c.verdict)},
            {"norm_integral", number_to_json(c.norm_integral)},
            {"mu_finite", c.mu_finite},
            {"agree", c.agree}};
    if (c.moment_integral) cj["moment_integral"] = number_to_json(*c.moment_integral);
    if (c.moment_verdict) cj["moment_verdict"] = to_string(*c.moment_verdict);
    any_fail = any_fail || c.verdict == Verdict::fails;
    any_inconclusive = any_inconclusive || c.verdict == Verdict::inconclusive;
    rows.push_back(json{{"set", interval_to_json(a)}, {"condition", cj}});
  }

  const bool simulate = cfg.inputs.contains("grid") && !any_fail && (!any_inconclusive || override_check);
  if (cfg.inputs.contains("grid") && !simulate) {
    o.result["simulation"] = any_fail ? "skipped: the Fubini condition fails"
                                      : "skipped: the Fubini condition is inconclusive (use --override)";
  }
  if (simulate) {
    const SimGrid grid = seeded_grid(cfg.inputs["grid"], "grid", cfg.seed);
    const auto n = static_cast<std::size_t>(cfg.replicas);
    std::vector<std::vector<FubiniSides>> sides(n);
    for_each_chunk(n, cfg.threads, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t r = b; r < e; ++r) {
        const BasisIncrements inc = simulate_basis_increments(q, grid, r);
        sides[r] = integrated_field_sim(k, mu, sets, inc, grid);
      }
    });
    for (std::size_t i = 0; i < sets.size(); ++i) {
      double left = 0.0, right = 0.0, sq = 0.0, worst = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const FubiniSides& s = sides[r][i];
        left += s.left;
        right += s.right;
        sq += s.gap * s.gap;
        worst = std::max(worst, std::abs(s.gap));
      }
      const FubiniSides& first = sides[0][i];
      rows[i]["simulation"] = json{{"left_mean", left / n},
                                   {"right_mean", right / n},
                                   {"rms_gap", std::sqrt(sq / n)},
                                   {"max_abs_gap", worst},
                                   {"first_replica", {{"left", first.left}, {"right", first.right}, {"gap", first.gap}}}};
    }
    o.result["verified"] = !any_inconclusive;
  }
  o.result["sets"] = rows;
  o.status = any_fail ? "fail" : any_inconclusive ? "inconclusive" : "pass";
  return o;
}

std::vector<Eigen::VectorXd> theta_vectors(const std::vector<double>& flat, std::size_t n) {
  std::vector<Eigen::VectorXd> out;
  if (flat.empty()) {
    for (std::size_t j = 0; j < n; ++j) out.push_back(Eigen::VectorXd::Unit(static_cast<Eigen::Index>(n), j));
    out.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 0.5));
    out.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), -1.5));
    return out;
  }
  if (flat.size() % n != 0)
    throw ConfigParse("options.theta: length must be a multiple of the number of u points");
  for (std::size_t i = 0; i < flat.size(); i += n) {
    Eigen::VectorXd t(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) t[static_cast<Eigen::Index>(j)] = flat[i + j];
    out.push_back(t);
  }
  return out;
}

Outcome run_field_process(RunConfig& cfg) {
  json& doc = input(cfg, "spec");
  const MasterMeasureSpec master = master_from_json(doc, "spec");
  const FieldTripletSpec spec = FieldTripletSpec::from_volterra(master);
  const auto u = doubles(option(cfg, "u", json::array({0.0})), "options.u");
  if (u.empty() || u.size() > kMaxProjection || !std::is_sorted(u.begin(), u.end()))
    throw ConfigParse("options.u: between 1 and 8 sorted points");
  const auto t_grid = doubles(option(cfg, "t_grid", json::array({1.0})), "options.t_grid");
  const json& cj = option(cfg, "check", "none");
  const std::string check = cj.is_string() ? cj.get<std::string>() : "";
  if (check != "none" && check != "ou-marginal" && check != "consistency" && check != "integral")
    throw ConfigParse("options.check: expected none, ou-marginal, consistency or integral");

  Outcome o;
  bool pass = true;
  if (check == "ou-marginal") {
    const auto theta = theta_vectors(doubles(option(cfg, "theta", json::array()), "options.theta"), u.size());
    const double tol = tolerance(cfg, "ou_marginal");
    const OuMarginalResult r = ou_field_marginal_check(spec, u, theta);
    pass = r.max_discrepancy <= tol && r.langevin_discrepancy <= tol && r.dilation.pass;
    o.result["check"] = json{{"kind", check},
                             {"max_discrepancy", r.max_discrepancy},
                             {"langevin_discrepancy", r.langevin_discrepancy},
                             {"tolerance", tol},
                             {"t_checked", r.t_checked},
                             {"dilation", dilation_json(r.dilation)},
                             {"pass", pass}};
  } else if (check == "consistency" || check == "integral") {
    if (!doc.contains("integrand")) doc["integrand"] = "ou";
    const SFunction f = integrand_from_json(doc["integrand"], "spec.integrand");
    if (check == "integral") {
      const TripletND tr = integral_triplet(spec, f, u);
      o.result["check"] = json{{"kind", check}, {"gamma", vec_json(tr.gamma)}, {"B", mat_json(tr.B)}};
    } else {
      std::vector<double> fallback = u;
      fallback.push_back(u.back() + 1.0);
      const auto v = doubles(option(cfg, "v", fallback), "options.v");
      std::vector<Region> regions;
      for (const CylinderSet& c : default_cylinder_sets(u, 5)) regions.push_back(c.region);
      const double tol = tolerance(cfg, "consistency");
      const ConsistencyResult r = projection_consistency_check(spec, f, u, v, regions);
      pass = r.max_rel <= tol;
      o.result["check"] = json{{"kind", check}, {"v", v},      {"regions", r.regions}, {"max_abs", r.max_abs},
                               {"max_rel", r.max_rel}, {"tolerance", tol}, {"pass", pass}};
    }
  }

  // Triplets after the checks, whose preconditions give the more specific errors.
  json triplets = json::array();
  for (double t : t_grid) {
    const TripletND tr = process_triplet_at(spec, t, u);
    triplets.push_back(json{{"t", t}, {"gamma", vec_json(tr.gamma)}, {"B", mat_json(tr.B)}});
  }
  o.result["triplets"] = triplets;

  const json& sim = option(cfg, "simulate", false);
  if (!sim.is_boolean()) throw ConfigParse("options.simulate: expected true or false");
  if (sim.get<bool>()) {
    if (!doc.contains("window")) throw ConfigParse("spec.window: simulation needs a window grid");
    const SimGrid window = seeded_grid(doc["window"], "spec.window", cfg.seed);
    const auto n = static_cast<std::size_t>(cfg.replicas);
    const FieldProcessPaths paths = simulate_field_process(master, u, t_grid, window, n, cfg.threads);
    std::string csv = "replica,t,u,value\n";
    json mean = json::array();
    json var = json::array();
    for (std::size_t kt = 0; kt < t_grid.size(); ++kt) {
      json mrow = json::array();
      json vrow = json::array();
      for (std::size_t j = 0; j < u.size(); ++j) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          s += paths.at(r, kt, j);
          s2 += paths.at(r, kt, j) * paths.at(r, kt, j);
        }
        mrow.push_back(s / n);
        vrow.push_back(n > 1 ? (s2 - s * s / n) / (n - 1) : 0.0);
      }
      mean.push_back(mrow);
      var.push_back(vrow);
    }
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t kt = 0; kt < t_grid.size(); ++kt)
        for (std::size_t j = 0; j < u.size(); ++j)
          csv += std::to_string(r) + "," + format_double(t_grid[kt]) + "," + format_double(u[j]) + "," +
                 format_double(paths.at(r, kt, j)) + "\n";
    o.csv = std::move(csv);
    o.result["simulation"] =
        json{{"replicas", n}, {"mean", mean}, {"variance", var}, {"diagnostics", diagnostics_json(paths.diagnostics)}};
  }
  if (check == "ou-marginal" || check == "consistency") o.status = pass ? "pass" : "fail";
  return o;
}

Outcome run_simulate(RunConfig& cfg) {
  const LevyQuadruplet q = basis_from_json(input(cfg, "basis"), "basis");
  const KernelSpec k = kernel_from_json(input(cfg, "kernel"), "kernel");
  const SimGrid grid = seeded_grid(input(cfg, "grid"), "grid", cfg.seed);
  if (grid.u_points.empty()) throw ConfigParse("grid.u_points: at least one u point is needed");
  const auto n = static_cast<std::size_t>(cfg.replicas);
  const auto paths = simulate_paths(q, k, grid, n, cfg.threads);

  Outcome o;
  std::string csv = "replica,u,value\n";
  csv.reserve(32 * n * grid.u_points.size());
  std::vector<double> sum(grid.u_points.size(), 0.0);
  std::vector<double> sum2(grid.u_points.size(), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < grid.u_points.size(); ++j) {
      const double x = paths[r].values[j];
      sum[j] += x;
      sum2[j] += x * x;
      csv += std::to_string(r);
      csv += ',';
      csv += format_double(grid.u_points[j]);
      csv += ',';
      csv += format_double(x);
      csv += '\n';
    }
  }
  json mean = json::array();
  json var = json::array();
  for (std::size_t j = 0; j < sum.size(); ++j) {
    mean.push_back(sum[j] / n);
    var.push_back(n > 1 ? (sum2[j] - sum[j] * sum[j] / n) / (n - 1) : 0.0);
  }
  o.csv = std::move(csv);
  o.result["replicas"] = n;
  o.result["mean"] = mean;
  o.result["variance"] = var;
  o.result["diagnostics"] = diagnostics_json(IncrementSampler(q, grid).diagnostics());
  return o;
}

Outcome execute(RunConfig& cfg) {
  if (cfg.subcommand == "simulate") return run_simulate(cfg);
  if (cfg.subcommand == "orlicz") return run_orlicz(cfg);
  if (cfg.subcommand == "sd-check") return run_sd_check(cfg);
  if (cfg.subcommand == "fubini") return run_fubini(cfg);
  if (cfg.subcommand == "field-process") return run_field_process(cfg);
  if (cfg.subcommand == "cumulant") return run_cumulant(cfg);
  throw ConfigParse("unknown subcommand \"" + cfg.subcommand + "\"");
}

// ---------------------------------------------------------------------------
// Resolution of arguments into a RunConfig

void add_input(RunConfig& cfg, const std::string& role, const std::string& path, bool required) {
  if (path.empty()) {
    if (required) throw ConfigParse("--" + role + ": required for " + cfg.subcommand);
    return;
  }
  cfg.inputs[role] = load_json_file(path);
}

RunConfig from_args(const std::string& sub, const Args& a) {
  RunConfig cfg;
  cfg.subcommand = sub;
  cfg.replicas = a.replicas;
  json& o = cfg.options;
  if (sub == "simulate") {
    add_input(cfg, "basis", a.basis, true);
    add_input(cfg, "kernel", a.kernel, true);
    add_input(cfg, "grid", a.grid, true);
  } else if (sub == "orlicz") {
    add_input(cfg, "basis", a.basis, true);
    add_input(cfg, "kernel", a.kernel, true);
    o["p"] = a.p;
    o["u"] = a.u_point;
  } else if (sub == "sd-check") {
    add_input(cfg, "basis", a.basis, true);
    add_input(cfg, "kernel", a.kernel, false);
    o["q"] = a.q.empty() ? default_q_grid() : a.q;
    if (a.intervals == "default") {
      o["intervals"] = "default";
    } else {
      o["intervals"] = load_json_file(a.intervals);
    }
    o["urbanik_depth"] = a.urbanik_depth;
    if (!a.kernel.empty()) {
      o["u"] = a.u.empty() ? std::vector<double>{0.0} : a.u;
      o["scales"] = a.scales;
    }
  } else if (sub == "fubini") {
    add_input(cfg, "basis", a.basis, true);
    add_input(cfg, "kernel", a.kernel, true);
    add_input(cfg, "mu", a.mu, true);
    add_input(cfg, "sets", a.sets, true);
    add_input(cfg, "grid", a.grid, false);
    o["override"] = a.override_check;
  } else if (sub == "field-process") {
    add_input(cfg, "spec", a.spec, true);
    o["u"] = a.u.empty() ? std::vector<double>{0.0} : a.u;
    o["t_grid"] = a.t_grid.empty() ? std::vector<double>{1.0} : a.t_grid;
    o["check"] = a.check;
    if (!a.theta.empty()) o["theta"] = a.theta;
    if (!a.v.empty()) o["v"] = a.v;
    o["simulate"] = !a.out.empty();
  } else if (sub == "cumulant") {
    add_input(cfg, "basis", a.basis, true);
    add_input(cfg, "kernel", a.kernel, true);
    o["u"] = a.u.empty() ? std::vector<double>{0.0} : a.u;
    o["theta"] = a.theta.empty() ? std::vector<double>(a.u.empty() ? 1 : a.u.size(), 1.0) : a.theta;
    if (!a.window.empty()) {
      if (a.window.size() != 2) throw ConfigParse("--window: expected lo,hi");
      o["window"] = interval_to_json(Interval{a.window[0], a.window[1]});
    }
  }
  // A seed stored in the grid document counts as the configured seed.
  const json* seeded = nullptr;
  if (cfg.inputs.contains("grid")) seeded = &cfg.inputs["grid"];
  if (cfg.inputs.contains("spec") && cfg.inputs["spec"].is_object() && cfg.inputs["spec"].contains("window"))
    seeded = &cfg.inputs["spec"]["window"];
  if (seeded && seeded->is_object() && seeded->contains("seed")) {
    const json& s = (*seeded)["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ConfigParse("grid.seed: expected a non-negative 64-bit integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  return cfg;
}

void apply_overrides(RunConfig& cfg, const Args& a) {
  if (const char* env = std::getenv("SDFIELDS_SEED"); env && *env) cfg.seed = parse_seed(env, "SDFIELDS_SEED");
  if (!a.seed.empty()) cfg.seed = parse_seed(a.seed, "--seed");
  for (const auto& [name, value] : kDefaultTolerances)
    if (!cfg.tolerances.contains(name)) cfg.tolerances[name] = value;
  for (const std::string& t : a.tolerances) {
    const auto eq = t.find('=');
    const std::string name = t.substr(0, eq);
    if (eq == std::string::npos || !kDefaultTolerances.count(name))
      throw ConfigParse("--tol: expected name=value with name one of consistency, ou_marginal");
    double v = 0.0;
    const std::string text = t.substr(eq + 1);
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size() || !(v >= 0.0))
      throw ConfigParse("--tol: bad value in \"" + t + "\"");
    cfg.tolerances[name] = v;
  }
  if (a.replicas_given) cfg.replicas = a.replicas;
  cfg.out = a.out;
  cfg.report = a.report;
  cfg.threads = a.threads;
  cfg.json_stdout = a.json_stdout;
}

void validate(const RunConfig& cfg) {
  if (cfg.replicas < 1) throw ConfigParse("replicas: must be at least 1 (got " + std::to_string(cfg.replicas) + ")");
  if (cfg.threads < 1) throw ConfigParse("--threads: must be at least 1");
  const bool writes_csv =
      cfg.subcommand == "simulate" ||
      (cfg.subcommand == "field-process" && cfg.options.contains("simulate") && cfg.options.at("simulate") == true);
  if (writes_csv && cfg.out.empty()) throw ConfigParse("--out: a CSV output path is required for path data");
  check_output_path(cfg.out, "--out");
  check_output_path(cfg.report, "--report");
}

std::string render(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

// ---------------------------------------------------------------------------

json RunConfig::to_json() const {
  return json{{"subcommand", subcommand}, {"seed", seed},       {"replicas", replicas},
              {"tolerances", tolerances}, {"options", options}, {"inputs", inputs}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigParse("config: expected an object");
  RunConfig cfg;
  try {
    cfg.subcommand = j.at("subcommand").get<std::string>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.replicas = j.at("replicas").get<std::int64_t>();
    cfg.tolerances = j.at("tolerances");
    cfg.options = j.at("options");
    cfg.inputs = j.at("inputs");
  } catch (const json::exception& e) {
    throw ConfigParse(std::string("config: ") + e.what());
  }
  if (std::find(kSubcommands.begin(), kSubcommands.end(), cfg.subcommand) == kSubcommands.end())
    throw ConfigParse("config.subcommand: unknown subcommand \"" + cfg.subcommand + "\"");
  if (!cfg.options.is_object() || !cfg.inputs.is_object() || !cfg.tolerances.is_object())
    throw ConfigParse("config: options, inputs and tolerances must be objects");
  return cfg;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw InvalidArgument("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw InvalidArgument("cannot move output into place at " + path + ": " + ec.message());
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Args a;
  CLI::App app{"Selfdecomposable random fields: cumulants, integrability, selfdecomposability checks and simulation",
               "sdfields"};
  app.require_subcommand(0, 1);
  app.add_flag("--json", a.json_stdout, "Print the full JSON report on stdout");
  app.add_option("--threads", a.threads, "Worker threads for replicas (results do not depend on it)");
  app.add_option("--replay", a.replay, "Re-run the configuration embedded in a report");
  app.add_option("--seed", a.seed, "Random seed (overrides SDFIELDS_SEED and the configuration)");
  app.add_option("--tol", a.tolerances, "Check tolerance override name=value (consistency, ou_marginal)");
  app.add_option("--out", a.out, "Output path: CSV for path data, JSON report otherwise");
  app.add_option("--report", a.report, "Path of the JSON report accompanying CSV output");

  auto replicas = [&](CLI::App* s) {
    s->add_option("--replicas", a.replicas, "Number of independent replicas (>= 1)")
        ->each([&](const std::string&) { a.replicas_given = true; });
  };
  auto list = [](CLI::App* s, const std::string& name, std::vector<double>& v, const std::string& help) {
    s->add_option(name, v, help)->delimiter(',')->allow_extra_args(false);
  };

  auto* sim = app.add_subcommand("simulate", "Simulate Volterra field paths to CSV");
  sim->add_option("--basis", a.basis, "Lévy basis JSON");
  sim->add_option("--kernel", a.kernel, "Kernel JSON");
  sim->add_option("--grid", a.grid, "Simulation grid JSON");
  replicas(sim);

  auto* orl = app.add_subcommand("orlicz", "Musielak-Orlicz integrability of a kernel section");
  orl->add_option("--config,--basis", a.basis, "Lévy basis JSON");
  orl->add_option("--kernel", a.kernel, "Kernel JSON");
  orl->add_option("--p", a.p, "Order p in {0, 1, 2}");
  orl->add_option("--u", a.u_point, "Section f(u, .) to test");

  auto* sd = app.add_subcommand("sd-check", "Dilation criterion for selfdecomposability");
  sd->add_option("--basis", a.basis, "Lévy basis JSON");
  sd->add_option("--kernel", a.kernel, "Kernel JSON (adds the field-level check)");
  list(sd, "--q", a.q, "Dilation factors, comma separated");
  sd->add_option("--intervals", a.intervals, "\"default\" or a JSON file of test intervals");
  sd->add_option("--urbanik-depth", a.urbanik_depth, "Maximum Urbanik class depth to test");
  list(sd, "--u", a.u, "Cylinder coordinates for the field check");
  sd->add_option("--scales", a.scales, "Number of cylinder-set scales");

  auto* fub = app.add_subcommand("fubini", "Stochastic Fubini condition and both sides on common noise");
  fub->add_option("--basis", a.basis, "Lévy basis JSON");
  fub->add_option("--kernel", a.kernel, "Kernel JSON");
  fub->add_option("--mu", a.mu, "Integrator measure JSON");
  fub->add_option("--sets", a.sets, "Sets JSON");
  fub->add_option("--grid", a.grid, "Simulation grid JSON (enables simulation)");
  fub->add_flag("--override", a.override_check, "Simulate even when the condition is inconclusive");
  replicas(fub);

  auto* fp = app.add_subcommand("field-process", "Field-valued Lévy process projections");
  fp->add_option("--spec", a.spec, "Field specification JSON");
  list(fp, "--u", a.u, "Projection points, comma separated");
  list(fp, "--t-grid", a.t_grid, "Times, comma separated");
  fp->add_option("--check", a.check, "none | ou-marginal | consistency | integral");
  list(fp, "--theta", a.theta, "Flattened theta vectors for ou-marginal");
  list(fp, "--v", a.v, "Superset of u for the consistency check");
  replicas(fp);

  auto* cum = app.add_subcommand("cumulant", "Cumulant of a finite linear functional of the field");
  cum->add_option("--basis", a.basis, "Lévy basis JSON");
  cum->add_option("--kernel", a.kernel, "Kernel JSON");
  list(cum, "--u", a.u, "Points u_j, comma separated");
  list(cum, "--theta", a.theta, "Coefficients theta_j, comma separated");
  list(cum, "--window", a.window, "Restrict the s integral to lo,hi");

  for (CLI::App* s : {sim, orl, sd, fub, fp, cum}) s->fallthrough();

  auto fail = [&](const Error& e) {
    err << "error [" << e.kind() << "]: " << e.what() << "\n";
    if (a.json_stdout) out << render(json{{"error", {{"kind", e.kind()}, {"message", e.what()}}}});
    return 1;
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(ConfigParse(e.what()));
  }

  try {
    RunConfig cfg;
    const auto subs = app.get_subcommands();
    if (!a.replay.empty()) {
      if (!subs.empty()) throw ConfigParse("--replay: cannot be combined with a subcommand");
      const json report = load_json_file(a.replay);
      if (!report.is_object() || !report.contains("config"))
        throw ConfigParse(a.replay + ": not an sdfields report (no \"config\" object)");
      cfg = RunConfig::from_json(report["config"]);
    } else {
      if (subs.empty()) throw ConfigParse("a subcommand is required: simulate, orlicz, sd-check, fubini, field-process or cumulant");
      cfg = from_args(subs.front()->get_name(), a);
    }
    apply_overrides(cfg, a);
    validate(cfg);

    Outcome o = execute(cfg);

    json report = json::object();
    report["subcommand"] = cfg.subcommand;
    report["status"] = o.status;
    for (auto& item : o.result.items()) report[item.key()] = item.value();
    report["config"] = cfg.to_json();
    const std::string text = render(report);

    if (!o.csv.empty()) {
      const std::string report_path = cfg.report.empty() ? cfg.out + ".json" : cfg.report;
      write_atomic(report_path, text);
      write_atomic(cfg.out, o.csv);
    } else if (!cfg.out.empty()) {
      write_atomic(cfg.out, text);
    }

    if (cfg.json_stdout) {
      out << text;
    } else {
      json summary = report;
      summary.erase("config");
      out << "sdfields " << cfg.subcommand << ": " << o.status << "\n" << summary.dump(2) << "\n";
      if (!o.csv.empty()) out << "paths written to " << cfg.out << "\n";
    }
    return o.status == "fail" ? 2 : 0;
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    return fail(Error("InternalError", e.what()));
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace sdfields::cli
