#include "sdfields/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sdfields/errors.hpp"

namespace sdfields {

namespace {

// Reads the fields of one JSON object, tracking the dotted path for error
// messages and writing defaults back into the document.
class Reader {
 public:
  Reader(json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigParse(path_ + ": expected an object");
  }

  std::string field(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_[key].is_null(); }
  json& at(const std::string& key) {
    if (!j_.contains(key)) throw ConfigParse(field(key) + ": missing required field");
    return j_[key];
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    throw ConfigParse(field(key) + ": " + message);
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "expected a finite number");
    return x;
  }
  double number(const std::string& key, double fallback) {
    if (!j_.contains(key)) j_[key] = fallback;
    return number(key);
  }
  double positive(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) fail(key, "must be positive");
    return x;
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    if (!j_.contains(key)) j_[key] = fallback;
    return string(key);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!j_.contains(key)) j_[key] = fallback;
    const json& v = j_[key];
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!j_.contains(key)) j_[key] = fallback;
    const json& v = j_[key];
    if (!v.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>()))
        fail(key + "[" + std::to_string(i) + "]", "expected a finite number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  Interval interval(const std::string& key, Interval fallback) {
    if (!j_.contains(key)) j_[key] = interval_to_json(fallback);
    return interval_from_json(j_[key], field(key));
  }

  /// Numeric constant or expression text over the allowed variables.
  Expression expression(const std::string& key, const std::string& allowed) {
    const json& v = at(key);
    Expression e;
    if (v.is_number()) {
      e = Expression::constant(v.get<double>());
    } else if (v.is_string()) {
      try {
        e = Expression::parse(v.get<std::string>());
      } catch (const ConfigParse& err) {
        fail(key, err.what());
      }
    } else {
      fail(key, "expected a number or an expression string");
    }
    for (char c : std::string("suxt")) {
      if (allowed.find(c) == std::string::npos && e.uses(c))
        fail(key, std::string("the variable ") + c + " is not available here (allowed: " + allowed + ")");
    }
    return e;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    if (!j_.contains(key)) j_[key] = fallback;
    const json& v = j_[key];
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail(key, "expected a non-negative 64-bit integer");
  }

  /// Rejects keys outside `allowed` (catches misspelled options).
  void only(std::initializer_list<const char*> allowed) const {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j_.items()) {
      if (!ok.count(item.key())) throw ConfigParse(field(item.key()) + ": unknown field");
    }
  }

 private:
  json& j_;
  std::string path_;
};

double end_point(const json& v, const std::string& path, double infinite) {
  if (v.is_null()) return infinite;
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  if (v.is_number()) return v.get<double>();
  throw ConfigParse(path + ": expected a number, null, \"inf\" or \"-inf\"");
}

ControlMeasure control_from_json(json& j, const std::string& path) {
  Reader r(j, path);
  r.only({"dim", "lo", "hi", "density"});
  ControlMeasure c;
  if (!j.contains("dim")) j["dim"] = 1;
  const double dim = r.number("dim");
  if (dim != std::floor(dim) || dim < 1 || dim > kMaxControlDim)
    r.fail("dim", "must be an integer between 1 and " + std::to_string(kMaxControlDim));
  c.dim = static_cast<int>(dim);
  json unbounded_lo = json::array();
  json unbounded_hi = json::array();
  for (int i = 0; i < c.dim; ++i) {
    unbounded_lo.push_back("-inf");
    unbounded_hi.push_back("inf");
  }
  if (!j.contains("lo")) j["lo"] = unbounded_lo;
  if (!j.contains("hi")) j["hi"] = unbounded_hi;
  for (const char* side : {"lo", "hi"}) {
    const json& v = j[side];
    if (!v.is_array() || static_cast<int>(v.size()) != c.dim)
      r.fail(side, "expected an array of " + std::to_string(c.dim) + " end points");
  }
  for (int i = 0; i < c.dim; ++i) {
    c.lo[i] = end_point(j["lo"][i], r.field("lo"), -kInf);
    c.hi[i] = end_point(j["hi"][i], r.field("hi"), kInf);
    if (!(c.hi[i] > c.lo[i])) r.fail("hi", "each upper end must exceed the lower end");
  }
  if (!j.contains("density")) j["density"] = 1.0;
  if (j["density"].is_number()) {
    c.constant = true;
    c.constant_value = r.number("density");
    if (!(c.constant_value >= 0.0)) r.fail("density", "must be non-negative");
  } else {
    if (c.dim != 1) r.fail("density", "an expression density needs dim = 1");
    Expression e = r.expression("density", "s");
    c.constant = false;
    const std::string where = r.field("density");
    c.density = [e, where](const Point& p) {
      const double v = e.eval(Vars{p[0], 0.0, 0.0, 0.0});
      if (!(v >= 0.0)) throw ConfigParse(where + ": negative or undefined value");
      return v;
    };
  }
  return c;
}

LevyMeasure1D custom_measure(Reader& r) {
  Expression e = r.expression("density", "x");
  LevyMeasure1D m;
  m.support = r.interval("support", Interval{});
  m.breaks = r.numbers("breaks", {});
  const std::string where = r.field("density");
  m.density = [e, where](double x) {
    const double v = e.eval(Vars{0.0, 0.0, x, 0.0});
    if (!(v >= 0.0)) throw ConfigParse(where + ": negative or undefined value at x = " + std::to_string(x));
    return v;
  };
  m.label = "custom";
  return m;
}

void attach_atoms(LevyMeasure1D& m, Reader& r, json& j) {
  if (!j.contains("atoms")) j["atoms"] = json::array();
  const json& a = j["atoms"];
  if (!a.is_array()) r.fail("atoms", "expected an array of [location, mass] pairs");
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string key = "atoms[" + std::to_string(i) + "]";
    if (!a[i].is_array() || a[i].size() != 2 || !a[i][0].is_number() || !a[i][1].is_number())
      r.fail(key, "expected [location, mass]");
    const double loc = a[i][0].get<double>();
    const double mass = a[i][1].get<double>();
    if (loc == 0.0 || !std::isfinite(loc)) r.fail(key, "an atom must sit at a finite non-zero location");
    if (!(mass > 0.0) || !std::isfinite(mass)) r.fail(key, "an atom needs a positive finite mass");
    m.atoms.push_back({loc, mass});
  }
}

template <class F>
auto rethrow_as_config(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigParse(path + ": " + e.what());
  }
}

}  // namespace

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line and column.
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    const auto pos = what.find("] ");
    if (pos != std::string::npos) what = what.substr(pos + 2);
    throw ConfigParse(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigParse(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path);
}

Interval interval_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ConfigParse(path + ": expected [lo, hi]");
  Interval i{end_point(j[0], path, -kInf), end_point(j[1], path, kInf)};
  if (std::isnan(i.lo) || std::isnan(i.hi) || !(i.hi > i.lo))
    throw ConfigParse(path + ": expected lo < hi");
  return i;
}

json number_to_json(double x) {
  if (std::isinf(x)) return x > 0 ? json("inf") : json("-inf");
  return json(x);
}

json interval_to_json(Interval i) { return json::array({number_to_json(i.lo), number_to_json(i.hi)}); }

LevyQuadruplet basis_from_json(json& j, const std::string& path) {
  Reader r(j, path);
  const std::string family = r.string("family");
  LevySeed seed;
  if (family == "gaussian") {
    r.only({"family", "sigma", "drift", "control"});
    seed.b = r.number("sigma", 1.0);
  } else {
    seed.b = r.number("sigma", 0.0);
    if (family == "poisson") {
      r.only({"family", "sigma", "drift", "control", "rate", "size"});
      const double rate = r.positive("rate", 1.0);
      const double size = r.number("size", 1.0);
      if (size == 0.0) r.fail("size", "must be non-zero");
      seed.rho = dirac_measure(size, rate);
    } else if (family == "compound_poisson") {
      r.only({"family", "sigma", "drift", "control", "rate", "jumps", "mean", "scale"});
      const double rate = r.positive("rate", 1.0);
      const std::string jumps = r.string("jumps", "exponential");
      if (jumps == "exponential") {
        seed.rho = exponential_measure(rate, r.positive("mean", 1.0));
      } else if (jumps == "laplace") {
        seed.rho = laplace_measure(rate, r.positive("scale", 1.0));
      } else {
        r.fail("jumps", "expected \"exponential\" or \"laplace\"");
      }
    } else if (family == "gamma") {
      r.only({"family", "sigma", "drift", "control", "shape", "rate"});
      const double shape = r.positive("shape", 1.0);
      seed.rho = gamma_measure(shape, r.positive("rate", 1.0));
    } else if (family == "tempered_stable") {
      r.only({"family", "sigma", "drift", "control", "c_plus", "c_minus", "alpha", "lambda_plus",
              "lambda_minus"});
      const double cp = r.number("c_plus", 1.0);
      const double cm = r.number("c_minus", 1.0);
      const double alpha = r.number("alpha", 0.5);
      const double lp = r.positive("lambda_plus", 1.0);
      const double lm = r.positive("lambda_minus", 1.0);
      if (cp < 0.0) r.fail("c_plus", "must be non-negative");
      if (cm < 0.0) r.fail("c_minus", "must be non-negative");
      if (!(alpha >= 0.0 && alpha < 2.0)) r.fail("alpha", "must lie in [0, 2)");
      seed.rho = tempered_stable_measure(cp, cm, alpha, lp, lm);
    } else if (family == "custom") {
      r.only({"family", "sigma", "drift", "control", "density", "support", "breaks", "atoms"});
      seed.rho = custom_measure(r);
      attach_atoms(seed.rho, r, j);
      // Slowly converging tails can leave the check inconclusive; only a
      // detected divergence is rejected.
      if (levy_condition_check(seed.rho).verdict == MomentVerdict::fails)
        r.fail("density", "not a Lévy measure: the integral of 1 ^ x^2 diverges");
    } else {
      r.fail("family",
             "expected one of gaussian, poisson, compound_poisson, gamma, tempered_stable, custom (got \"" +
                 family + "\")");
    }
  }
  if (!(seed.b >= 0.0)) r.fail("sigma", "must be non-negative");

  if (!j.contains("drift")) j["drift"] = 0.0;
  const json& drift = j["drift"];
  if (drift.is_number()) {
    seed.gamma = r.number("drift");
  } else if (drift.is_string() && drift.get<std::string>() == "centered") {
    try {
      seed.gamma = centering_drift(seed.rho);
    } catch (const IntegrabilityFailure& e) {
      r.fail("drift", std::string("cannot center: ") + e.what());
    }
  } else if (drift.is_string() && drift.get<std::string>() == "pure_jump") {
    try {
      seed.gamma = tau_integral(seed.rho);
    } catch (const IntegrabilityFailure& e) {
      r.fail("drift", std::string("no pure-jump form: ") + e.what());
    }
  } else {
    r.fail("drift", "expected a number, \"centered\" or \"pure_jump\"");
  }

  if (!j.contains("control")) j["control"] = json::object();
  ControlMeasure control = control_from_json(j["control"], r.field("control"));
  return make_factorizable(std::move(seed), std::move(control), family);
}

KernelSpec kernel_from_json(json& j, const std::string& path) {
  Reader r(j, path);
  const std::string family = r.string("family");
  KernelSpec k;
  if (family == "ou") {
    r.only({"family", "scale"});
    k = ou_kernel();
  } else if (family == "gamma") {
    r.only({"family", "scale", "alpha"});
    const double alpha = r.number("alpha");
    k = rethrow_as_config(r.field("alpha"), [&] { return gamma_kernel(alpha); });
  } else if (family == "fractional") {
    r.only({"family", "scale", "alpha"});
    const double alpha = r.number("alpha");
    k = rethrow_as_config(r.field("alpha"), [&] { return fractional_kernel(alpha); });
  } else if (family == "custom") {
    r.only({"family", "scale", "expr", "stationary", "support", "breaks", "continuity"});
    const bool stationary = r.boolean("stationary", true);
    const Expression e = r.expression("expr", stationary ? "t" : "us");
    const std::string cont = r.string("continuity", "upper");
    Continuity c = Continuity::upper;
    if (cont == "lower") {
      c = Continuity::lower;
    } else if (cont == "neither") {
      c = Continuity::neither;
    } else if (cont != "upper") {
      r.fail("continuity", "expected \"upper\", \"lower\" or \"neither\"");
    }
    const Interval support = r.interval("support", Interval{});
    auto breaks = r.numbers("breaks", {});
    k = custom_kernel(e, c, stationary, support, std::move(breaks));
  } else {
    r.fail("family", "expected one of ou, gamma, fractional, custom (got \"" + family + "\")");
  }
  const double scale = r.number("scale", 1.0);
  if (scale != 1.0) k = k.scaled(scale);
  return k;
}

SimGrid grid_from_json(json& j, const std::string& path) {
  Reader r(j, path);
  r.only({"s_range", "ds", "u_points", "eps", "seed"});
  SimGrid g;
  const Interval range = interval_from_json(r.at("s_range"), r.field("s_range"));
  g.s0 = range.lo;
  g.s1 = range.hi;
  g.ds = r.positive("ds", 0.01);
  g.u_points = r.numbers("u_points", {});
  g.eps = r.number("eps", 1e-3);
  g.seed = r.seed("seed", kDefaultSeed);
  rethrow_as_config(path, [&] {
    g.validate();
    return 0;
  });
  return g;
}

IntegratorMeasure measure_from_json(json& j, const std::string& path) {
  Reader r(j, path);
  const std::string kind = r.string("kind", "lebesgue");
  if (kind == "lebesgue") {
    r.only({"kind", "support"});
    return IntegratorMeasure::lebesgue(r.interval("support", Interval{}));
  }
  if (kind != "weighted") r.fail("kind", "expected \"lebesgue\" or \"weighted\"");
  r.only({"kind", "support", "density", "breaks"});
  const Expression e = r.expression("density", "u");
  const Interval support = r.interval("support", Interval{});
  auto breaks = r.numbers("breaks", {});
  return IntegratorMeasure::weighted([e](double u) { return e.eval(Vars{0.0, u, 0.0, 0.0}); }, support,
                                     std::move(breaks));
}

std::vector<Interval> sets_from_json(json& j, const std::string& path) {
  json* list = &j;
  std::string where = path;
  if (j.is_object()) {
    Reader r(j, path);
    r.only({"sets"});
    list = &r.at("sets");
    where = r.field("sets");
  }
  if (!list->is_array() || list->empty()) throw ConfigParse(where + ": expected a non-empty array of [lo, hi]");
  std::vector<Interval> out;
  for (std::size_t i = 0; i < list->size(); ++i)
    out.push_back(interval_from_json((*list)[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

MasterMeasureSpec master_from_json(json& j, const std::string& path) {
  Reader r(j, path);
  r.only({"basis", "kernel", "window", "integrand"});
  LevyQuadruplet basis = basis_from_json(r.at("basis"), r.field("basis"));
  KernelSpec kernel = kernel_from_json(r.at("kernel"), r.field("kernel"));
  if (basis.control.dim != 1) r.fail("basis", "field processes need a one-dimensional parameter space");
  return MasterMeasureSpec::make(std::move(basis), std::move(kernel));
}

SFunction integrand_from_json(json& j, const std::string& path) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "ou") return ou_integrand();
    if (name == "langevin") return langevin_integrand();
    throw ConfigParse(path + ": expected \"ou\", \"langevin\" or an object");
  }
  Reader r(j, path);
  if (r.has("indicator")) {
    r.only({"indicator"});
    const Interval i = interval_from_json(r.at("indicator"), r.field("indicator"));
    return plain_function([](double) { return 1.0; }, i);
  }
  r.only({"expr", "support", "breaks"});
  const Expression e = r.expression("expr", "s");
  const Interval support = r.interval("support", Interval{});
  auto breaks = r.numbers("breaks", {});
  return plain_function([e](double s) { return e.eval(Vars{s, 0.0, 0.0, 0.0}); }, support, std::move(breaks));
}

}  // namespace sdfields
