#include "ddelyap/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "ddelyap/errors.hpp"
#include "ddelyap/expression.hpp"
#include "ddelyap/transform.hpp"

namespace ddelyap {

const std::vector<std::string>& audit_names() {
  static const std::vector<std::string> names{"delay",      "drop",   "finiteness", "monotonicity",
                                              "parity",     "regularize", "semicontinuity", "transform"};
  return names;
}

const std::vector<std::string>& delay_model_names() {
  static const std::vector<std::string> names{"constant", "explicit", "implicit", "threshold"};
  return names;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

[[noreturn]] void field_error(const std::string& section, const std::string& key, const std::string& msg) {
  throw ConfigError("[" + section + "] " + key + ": " + msg);
}

double number(const std::string& section, const std::string& key, const std::string& text) {
  double v = 0.0;
  try {
    v = Expression::parse(text, {}).eval({});
  } catch (const ConfigError& e) {
    field_error(section, key, e.what());
  }
  if (!std::isfinite(v)) field_error(section, key, "value is not finite");
  return v;
}

std::vector<double> numbers(const std::string& section, const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) field_error(section, key, "empty list entry");
    out.push_back(number(section, key, item));
  }
  return out;
}

long long integer(const std::string& section, const std::string& key, const std::string& text) {
  const double v = number(section, key, text);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) field_error(section, key, "expected an integer");
  return static_cast<long long>(v);
}

bool boolean(const std::string& section, const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  field_error(section, key, "expected true or false");
}

std::string list_text(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + format_double(xs[i]);
  return out;
}

const std::set<std::string>& delay_keys(const std::string& model) {
  static const std::map<std::string, std::set<std::string>> keys{
      {"constant", {"tau"}},
      {"explicit", {"tau", "r", "tau_min"}},
      {"threshold", {"a", "a_min", "a_max"}},
      {"implicit", {"R", "lip_r1", "lip_r2", "lip_r3", "r", "L0", "tau_min"}}};
  const auto it = keys.find(model);
  if (it == keys.end()) field_error("delay", "model", "unknown delay model '" + model + "'");
  return it->second;
}

}  // namespace

// Parsing ---------------------------------------------------------------------

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  Scenario s;
  std::string section;
  std::set<std::string> seen_sections;
  std::set<std::string> seen_keys;
  bool have_name = false, have_system = false;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  auto syntax = [&](const std::string& msg) -> void {
    throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  static const std::set<std::string> sections{"scenario", "system", "delay", "initial", "tolerances", "integrator"};
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') syntax("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) syntax("unknown section [" + section + "]");
      if (!seen_sections.insert(section).second) syntax("duplicate section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) syntax("expected key = value");
    if (section.empty()) syntax("key outside of a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) syntax("empty key");
    if (!seen_keys.insert(section + "." + key).second) syntax("duplicate key '" + key + "' in [" + section + "]");
    try {
      if (section == "scenario") {
        if (key == "name") {
          if (value.empty() || !std::all_of(value.begin(), value.end(), [](char c) {
                return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
              }))
            field_error(section, key, "names use letters, digits, '_', '-' and '.'");
          s.name = value;
          have_name = true;
        } else if (key == "description") {
          s.description = value;
        } else if (key == "t0") {
          s.t0 = number(section, key, value);
        } else if (key == "t_end") {
          s.t_end = number(section, key, value);
        } else if (key == "delta") {
          const auto d = integer(section, key, value);
          if (d != 1 && d != -1) field_error(section, key, "delta must be +1 or -1");
          s.delta = static_cast<int>(d);
        } else if (key == "seed") {
          const auto v = integer(section, key, value);
          if (v < 0) field_error(section, key, "seed must be nonnegative");
          s.seed = static_cast<std::uint64_t>(v);
        } else if (key == "audits") {
          s.audits.clear();
          for (const auto& a : split(value, ',')) {
            if (a == "all") {
              s.audits = audit_names();
              continue;
            }
            if (std::find(audit_names().begin(), audit_names().end(), a) == audit_names().end())
              field_error(section, key, "unknown audit '" + a + "'");
            s.audits.push_back(a);
          }
        } else if (key == "svg") {
          s.svg = boolean(section, key, value);
        } else if (key == "max_records") {
          const auto v = integer(section, key, value);
          if (v < 2) field_error(section, key, "need at least 2 records");
          s.max_records = static_cast<std::size_t>(v);
        } else {
          field_error(section, key, "unknown key");
        }
      } else if (section == "system") {
        if (key == "name") {
          s.system = value;
          have_system = true;
        } else {
          s.system_params[key] = numbers(section, key, value);
        }
      } else if (section == "delay") {
        if (key == "model") s.delay.model = value;
        else s.delay.params[key] = value;
      } else if (section == "initial") {
        if (key == "expr") {
          s.initial.expr = value;
        } else if (key == "table") {
          for (const auto& item : split(value, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) field_error(section, key, "entries are s:value pairs");
            s.initial.table.emplace_back(number(section, key, item.substr(0, colon)),
                                         number(section, key, item.substr(colon + 1)));
          }
        } else if (key == "discrete") {
          s.initial.discrete = numbers(section, key, value);
        } else if (key == "pieces") {
          const auto v = integer(section, key, value);
          if (v < 1) field_error(section, key, "need at least one piece");
          s.initial.pieces = static_cast<int>(v);
        } else {
          field_error(section, key, "unknown key");
        }
      } else if (section == "tolerances") {
        const double v = number(section, key, value);
        if (!(v > 0.0)) field_error(section, key, "tolerances must be positive");
        if (key == "integrator") s.tol.integrator = v;
        else if (key == "zeta") s.tol.zeta = v;
        else if (key == "delay") s.tol.delay = v;
        else field_error(section, key, "unknown key");
      } else if (section == "integrator") {
        const double v = number(section, key, value);
        if (!(v > 0.0)) field_error(section, key, "must be positive");
        if (key == "h_fixed") s.h_fixed = v;
        else if (key == "h_max") s.h_max = v;
        else if (key == "kappa") s.kappa = v;
        else field_error(section, key, "unknown key");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  auto missing = [&](const std::string& what) { throw ConfigError(origin + ": missing " + what); };
  if (!have_name) missing("[scenario] name");
  if (!have_system) missing("[system] name");
  if (!seen_sections.count("delay")) missing("[delay] section");
  if (!seen_sections.count("initial")) missing("[initial] section");
  if (s.initial.expr && !s.initial.table.empty())
    throw ConfigError(origin + ": [initial] give either expr or table, not both");
  if (!s.initial.expr && s.initial.table.empty()) throw ConfigError(origin + ": [initial] needs expr or table");
  if (!(s.t_end > s.t0)) throw ConfigError(origin + ": [scenario] t_end: must exceed t0");
  if (s.audits.empty() && !seen_keys.count("scenario.audits")) s.audits = audit_names();
  std::sort(s.audits.begin(), s.audits.end());
  s.audits.erase(std::unique(s.audits.begin(), s.audits.end()), s.audits.end());
  try {
    const auto& keys = delay_keys(s.delay.model);
    for (const auto& [k, v] : s.delay.params)
      if (!keys.count(k)) field_error("delay", k, "not a parameter of the " + s.delay.model + " model");
    for (const auto& k : keys)
      if (!s.delay.params.count(k)) field_error("delay", k, "required by the " + s.delay.model + " model");
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string());
}

std::string to_ini(const Scenario& s) {
  std::ostringstream os;
  os << "[scenario]\n";
  os << "name = " << s.name << '\n';
  if (!s.description.empty()) os << "description = " << s.description << '\n';
  os << "t0 = " << format_double(s.t0) << '\n';
  os << "t_end = " << format_double(s.t_end) << '\n';
  os << "delta = " << s.delta << '\n';
  os << "seed = " << s.seed << '\n';
  os << "audits = ";
  for (std::size_t i = 0; i < s.audits.size(); ++i) os << (i ? ", " : "") << s.audits[i];
  os << '\n';
  os << "svg = " << (s.svg ? "true" : "false") << '\n';
  os << "max_records = " << s.max_records << "\n\n";
  os << "[system]\nname = " << s.system << '\n';
  for (const auto& [k, v] : s.system_params) os << k << " = " << list_text(v) << '\n';
  os << "\n[delay]\nmodel = " << s.delay.model << '\n';
  for (const auto& [k, v] : s.delay.params) os << k << " = " << v << '\n';
  os << "\n[initial]\n";
  if (s.initial.expr) os << "expr = " << *s.initial.expr << '\n';
  if (!s.initial.table.empty()) {
    os << "table = ";
    for (std::size_t i = 0; i < s.initial.table.size(); ++i)
      os << (i ? ", " : "") << format_double(s.initial.table[i].first) << ':'
         << format_double(s.initial.table[i].second);
    os << '\n';
  }
  if (!s.initial.discrete.empty()) os << "discrete = " << list_text(s.initial.discrete) << '\n';
  os << "pieces = " << s.initial.pieces << "\n\n";
  os << "[tolerances]\nintegrator = " << format_double(s.tol.integrator) << "\nzeta = " << format_double(s.tol.zeta)
     << "\ndelay = " << format_double(s.tol.delay) << "\n\n";
  os << "[integrator]\n";
  if (s.h_fixed) os << "h_fixed = " << format_double(*s.h_fixed) << '\n';
  if (s.h_max) os << "h_max = " << format_double(*s.h_max) << '\n';
  os << "kappa = " << format_double(s.kappa) << '\n';
  return os.str();
}

// Building ----------------------------------------------------------------------

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> xs(n);
  for (int k = 0; k < n; ++k) xs[k] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
  return xs;
}

Expression delay_expr(const Scenario& s, const std::string& key, std::vector<std::string> vars) {
  try {
    return Expression::parse(s.delay.params.at(key), std::move(vars));
  } catch (const ConfigError& e) {
    field_error("delay", key, e.what());
  }
}

double delay_number(const Scenario& s, const std::string& key) {
  return number("delay", key, s.delay.params.at(key));
}

DelayModel build_delay(const Scenario& s, int n) {
  const auto& m = s.delay.model;
  if (m == "constant") return ConstantDelay{delay_number(s, "tau")};
  if (m == "explicit") {
    const auto tau = delay_expr(s, "tau", {"t"});
    const double r = delay_number(s, "r");
    const double tau_min = delay_number(s, "tau_min");
    const double slack = 1e-12 * std::max(1.0, r);
    for (double t : linspace(s.t0, s.t_end, 4001)) {
      const double tv[] = {t};
      const auto [v, dv] = tau.eval_with_derivative(tv, 0);
      if (!(v >= tau_min - slack && v <= r + slack)) {
        std::ostringstream os;
        os << "tau(" << t << ") = " << v << " outside [tau_min, r] = [" << tau_min << ", " << r << "]";
        field_error("delay", "tau", os.str());
      }
      if (!(1.0 - dv > 0.0)) {
        std::ostringstream os;
        os << "eta(t) = t - tau(t) is not increasing at t = " << t;
        field_error("delay", "tau", os.str());
      }
    }
    return ExplicitEtaDelay{[tau](double t) {
                              const double tv[] = {t};
                              return t - tau.eval(tv);
                            },
                            r, tau_min};
  }
  if (m == "threshold") {
    const auto a = delay_expr(s, "a", {"u"});
    const double a_min = delay_number(s, "a_min");
    const double a_max = delay_number(s, "a_max");
    for (double u : linspace(-50.0, 50.0, 4001)) {
      const double uv[] = {u};
      const double v = a.eval(uv);
      if (!(v >= a_min && v <= a_max)) {
        std::ostringstream os;
        os << "a(" << u << ") = " << v << " outside [a_min, a_max] = [" << a_min << ", " << a_max << "]";
        field_error("delay", "a", os.str());
      }
    }
    return ThresholdDelay{[a](double u) {
                            const double uv[] = {u};
                            return a.eval(uv);
                          },
                          a_min, a_max};
  }
  if (m == "implicit") {
    std::vector<std::string> vars;
    for (int i = 0; i <= n; ++i) vars.push_back("x" + std::to_string(i));
    vars.push_back("v");
    vars.push_back("t");
    const auto R = delay_expr(s, "R", vars);
    ImplicitDelay d;
    d.lip_r1 = delay_number(s, "lip_r1");
    d.lip_r2 = delay_number(s, "lip_r2");
    d.lip_r3 = delay_number(s, "lip_r3");
    d.r = delay_number(s, "r");
    d.L0 = delay_number(s, "L0");
    d.tau_min = delay_number(s, "tau_min");
    // range check of R on a deterministic sample of arguments
    std::mt19937_64 gen(0x5eed);
    auto unit = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    std::vector<double> args(vars.size());
    for (int k = 0; k < 4000; ++k) {
      for (int i = 0; i <= n + 1; ++i) args[i] = 10.0 * unit() - 5.0;
      args[n + 2] = s.t0 + (s.t_end - s.t0) * unit();
      const double v = R.eval(args);
      if (!(v >= d.tau_min && v <= d.r)) {
        std::ostringstream os;
        os << "R = " << v << " outside [tau_min, r] = [" << d.tau_min << ", " << d.r << "] at a sampled argument";
        field_error("delay", "R", os.str());
      }
    }
    d.R = [R, n](std::span<const double> state, double delayed, double t) {
      double args[16];
      std::vector<double> big;
      double* p = args;
      if (n + 3 > 16) {
        big.resize(n + 3);
        p = big.data();
      }
      for (int i = 0; i <= n; ++i) p[i] = state[i];
      p[n + 1] = delayed;
      p[n + 2] = t;
      return R.eval(std::span<const double>(p, n + 3));
    };
    return d;
  }
  field_error("delay", "model", "unknown delay model '" + m + "'");
}

SegmentFunction build_initial(const Scenario& s, double r, int n) {
  const auto& in = s.initial;
  if (static_cast<int>(in.discrete.size()) != n) {
    std::ostringstream os;
    os << "expected " << n << " values for x^1..x^N, got " << in.discrete.size();
    field_error("initial", "discrete", os.str());
  }
  const DomainK dom(r, n);
  if (in.expr) {
    Expression e = Expression::parse("0", {"s"});
    try {
      e = Expression::parse(*in.expr, {"s"});
    } catch (const ConfigError& err) {
      field_error("initial", "expr", err.what());
    }
    return SegmentFunction::from_function(
        dom,
        [e](double x) {
          const double v[] = {x};
          return e.eval(v);
        },
        [e](double x) {
          const double v[] = {x};
          return e.eval_with_derivative(v, 0).second;
        },
        in.discrete, in.pieces);
  }
  const auto& tab = in.table;
  if (tab.size() < 2) field_error("initial", "table", "need at least two samples");
  for (std::size_t k = 1; k < tab.size(); ++k)
    if (!(tab[k].first > tab[k - 1].first)) field_error("initial", "table", "s values must increase");
  const double slack = 1e-12 * std::max(1.0, r);
  if (tab.front().first > -r + slack || std::abs(tab.back().first) > slack) {
    std::ostringstream os;
    os << "table covers [" << tab.front().first << ", " << tab.back().first << "] but the delay bound needs [" << -r
       << ", 0]";
    field_error("initial", "table", os.str());
  }
  std::vector<double> knots, vals, ders(tab.size());
  for (const auto& [x, v] : tab) {
    knots.push_back(x);
    vals.push_back(v);
  }
  knots.back() = 0.0;
  const std::size_t m = knots.size();
  for (std::size_t k = 0; k < m; ++k) {
    if (k == 0) {
      ders[k] = (vals[1] - vals[0]) / (knots[1] - knots[0]);
    } else if (k + 1 == m) {
      ders[k] = (vals[k] - vals[k - 1]) / (knots[k] - knots[k - 1]);
    } else {
      const double h0 = knots[k] - knots[k - 1], h1 = knots[k + 1] - knots[k];
      const double s0 = (vals[k] - vals[k - 1]) / h0, s1 = (vals[k + 1] - vals[k]) / h1;
      ders[k] = (h1 * s0 + h0 * s1) / (h0 + h1);
    }
  }
  auto spline = HermiteSpline::from_knots(knots, vals, ders);
  if (spline.lo() < -r) spline = spline.restricted(-r, 0.0);
  return SegmentFunction(dom, std::move(spline), in.discrete);
}

void check_lipschitz_initial(const SegmentFunction& seg, double L0) {
  double worst = 0.0, where = 0.0;
  for (const auto& p : seg.continuum().pieces()) {
    for (int j = 0; j <= 8; ++j) {
      const double t = p.lo + (p.hi - p.lo) * j / 8.0;
      const double d = std::abs(p.derivative(t));
      if (d > worst) {
        worst = d;
        where = t;
      }
    }
  }
  if (worst > L0) {
    std::ostringstream os;
    os << "initial data is not L0-Lipschitz: |phi'(" << where << ")| = " << worst << " exceeds L0 = " << L0;
    field_error("initial", "expr", os.str());
  }
}

}  // namespace

BuiltScenario build_scenario(const Scenario& s) {
  const auto names = builtin_system_names();
  if (std::find(names.begin(), names.end(), s.system) == names.end())
    field_error("system", "name", "unknown system '" + s.system + "'");
  CyclicSystem sys = [&] {
    try {
      return make_builtin_system(s.system, s.system_params, s.delta);
    } catch (const ConfigError& e) {
      field_error("system", "name", e.what());
    }
  }();
  const int n = sys.n_coords();

  const auto ts = linspace(s.t0, s.t_end, 64);
  const std::vector<double> vs{-5.0, -2.0, -1.0, -0.5, -0.1, -0.01, -1e-3, 1e-3, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0};
  const auto fb = check_feedback(sys, ts, vs, s.tol.zeta);
  if (!fb.pass) {
    const auto& f = *fb.first_failure;
    std::ostringstream os;
    os << "feedback hypothesis violated, clause " << f.clause << " fails for component " << f.component
       << " at t = " << f.t << ", v = " << f.v << " (value " << f.value << ")";
    field_error("scenario", "delta", os.str());
  }

  DelayModel model = build_delay(s, n);
  const double r = model.r();
  SegmentFunction initial = build_initial(s, r, n);
  if (const auto* imp = std::get_if<ImplicitDelay>(&model.variant())) check_lipschitz_initial(initial, imp->L0);

  StepConfig step;
  step.tol = s.tol.integrator;
  step.h_fixed = s.h_fixed;
  if (s.h_max) step.h_max = *s.h_max;
  step.kappa = s.kappa;
  step.delay.threshold_tol = s.tol.delay;
  step.delay.implicit_tol = s.tol.delay * 1e-2;
  return BuiltScenario{std::move(sys), std::move(model), std::move(initial), step};
}

// Execution ---------------------------------------------------------------------

namespace {

// Random C^1-small perturbations of a segment converging to it, built from the seed.
std::vector<PerturbedSegment> perturbation_family(const SegmentFunction& seg, double a, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto unit = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  const double c0 = 2 * unit() - 1, c1 = 2 * unit() - 1, w = 1 + 4 * unit(), ph = 6.283185307179586 * unit();
  const double ca = unit();
  std::vector<double> cd(seg.domain().n_coords);
  for (auto& c : cd) c = 2 * unit() - 1;
  const double r = seg.domain().r;
  std::vector<PerturbedSegment> family;
  for (int k = 1; k <= 16; ++k) {
    const double eps = 1e-2 * std::ldexp(1.0, -k);
    std::vector<HermitePiece> pieces;
    for (const auto& p : seg.continuum().pieces()) {
      HermitePiece q = p;
      q.v0 += eps * (c0 + c1 * std::sin(w * p.lo + ph));
      q.v1 += eps * (c0 + c1 * std::sin(w * p.hi + ph));
      q.d0 += eps * c1 * w * std::cos(w * p.lo + ph);
      q.d1 += eps * c1 * w * std::cos(w * p.hi + ph);
      pieces.push_back(q);
    }
    std::vector<double> disc(seg.discrete_values().begin(), seg.discrete_values().end());
    for (std::size_t i = 0; i < disc.size(); ++i) disc[i] += eps * cd[i];
    const double ak = std::max(-r, a * (1.0 - eps * ca));
    family.push_back({SegmentFunction(seg.domain(), HermiteSpline(std::move(pieces)), std::move(disc)), ak});
  }
  return family;
}

AuditReport semicontinuity_audit(const ScenarioRun& run, const AuditOptions& ao) {
  const auto& traj = *run.trajectory;
  const double mid = 0.5 * (traj.t0() + traj.t_end());
  const LyapunovRecord* best = nullptr;
  for (const auto& rec : run.records) {
    if (!rec.finite()) continue;
    if (!best || (rec.in_R && !best->in_R) ||
        (rec.in_R == best->in_R && std::abs(rec.t - mid) < std::abs(best->t - mid)))
      best = &rec;
  }
  if (!best) {
    AuditReport rep;
    rep.audit = "semicontinuity";
    rep.status = AuditStatus::Vacuous;
    rep.metadata["note"] = std::string("no record with finite V");
    return rep;
  }
  const auto seg = segment_at(traj, best->t);
  const double a = std::max(-best->tau, -seg.domain().r);
  const auto family = perturbation_family(seg, a, run.scenario.seed);
  auto rep = audit_semicontinuity(seg, a, traj.delta(), family, ao.zeta);
  rep.metadata["t"] = best->t;
  rep.metadata["family_size"] = static_cast<std::int64_t>(family.size());
  rep.metadata["seed"] = static_cast<std::int64_t>(run.scenario.seed);
  return rep;
}

}  // namespace

bool ScenarioRun::all_pass() const {
  return std::all_of(reports.begin(), reports.end(), [](const AuditReport& r) { return r.pass(); });
}

int ScenarioRun::exit_code() const { return all_pass() ? 0 : 2; }

ScenarioRun execute_scenario(const Scenario& s, const RunHooks& hooks) {
  ScenarioRun run;
  run.scenario = s;
  run.built = build_scenario(s);
  const auto& b = *run.built;
  run.trajectory = integrate(b.system, b.model, b.initial, s.t0, s.t_end, b.step);
  const auto& traj = *run.trajectory;

  const auto ts = default_sample_times(traj, s.t0, s.t_end, s.max_records);
  TrackOptions to;
  to.zeta = s.tol.zeta;
  run.records = lyapunov_track(traj, ts, to);
  if (hooks.records) hooks.records(run.records);

  AuditOptions ao;
  ao.zeta = s.tol.zeta;
  ao.integrator_tol = s.tol.integrator;
  ao.delay = b.step.delay;
  for (const auto& name : s.audits) {
    if (name == "monotonicity") run.reports.push_back(audit_monotonicity(run.records));
    else if (name == "parity") run.reports.push_back(audit_parity(run.records, s.delta));
    else if (name == "drop") run.reports.push_back(audit_drop(traj, ao));
    else if (name == "regularize") run.reports.push_back(audit_regularize(traj, run.records, ao));
    else if (name == "semicontinuity") run.reports.push_back(semicontinuity_audit(run, ao));
    else if (name == "finiteness")
      run.reports.push_back(
          audit_finiteness(traj, b.system, run.records, Interval{0.5 * (s.t0 + s.t_end), s.t_end}, ao));
    else if (name == "transform") run.reports.push_back(audit_transform(b.system, traj, ao));
    else if (name == "delay") run.reports.push_back(audit_delay(traj, ao));
    else throw ConfigError("unknown audit '" + name + "'");
  }
  std::stable_sort(run.reports.begin(), run.reports.end(),
                   [](const AuditReport& x, const AuditReport& y) { return x.audit < y.audit; });
  return run;
}

// Output --------------------------------------------------------------------------

void write_plot_csv(std::ostream& os, const ScenarioRun& run) {
  const auto& traj = *run.trajectory;
  const int n = traj.n_coords();
  os << "t,V";
  for (int i = 0; i <= n; ++i) os << ",x" << i;
  os << '\n';
  for (const auto& rec : run.records) {
    os << format_double(rec.t) << ',' << (rec.v ? rec.v->value.to_string() : std::string());
    for (int i = 0; i <= n; ++i) os << ',' << format_double(traj.value(i, rec.t));
    os << '\n';
  }
}

void write_plot_svg(std::ostream& os, const ScenarioRun& run) {
  const auto& traj = *run.trajectory;
  const int n = traj.n_coords();
  const double W = 800, H = 520, left = 60, right = 20, top = 30, gap = 40;
  const double ph = (H - top - gap - 40) / 2.0;
  const double t0 = traj.t0(), t1 = traj.t_end();
  double xmin = 0, xmax = 0, vmax = 1;
  for (const auto& rec : run.records) {
    for (int i = 0; i <= n; ++i) {
      const double x = traj.value(i, rec.t);
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
    }
    if (rec.finite()) vmax = std::max(vmax, static_cast<double>(rec.v_int()));
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1;
  auto px = [&](double t) { return left + (W - left - right) * (t - t0) / (t1 - t0); };
  auto py = [&](double x) { return top + ph * (xmax - x) / (xmax - xmin); };
  auto pv = [&](double v) { return top + ph + gap + ph * (vmax + 1 - v) / (vmax + 1); };
  char buf[64];
  auto f = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return std::string(buf);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << run.scenario.name
     << ": components</text>\n";
  os << "<text x=\"" << left << "\" y=\"" << f(top + ph + gap - 8)
     << "\" font-family=\"sans-serif\" font-size=\"14\">V(x_t, -tau(t))</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right << "\" height=\"" << f(ph)
     << "\" fill=\"none\" stroke=\"#999\"/>\n";
  os << "<rect x=\"" << left << "\" y=\"" << f(top + ph + gap) << "\" width=\"" << W - left - right << "\" height=\""
     << f(ph) << "\" fill=\"none\" stroke=\"#999\"/>\n";
  if (xmin < 0 && xmax > 0)
    os << "<line x1=\"" << left << "\" x2=\"" << W - right << "\" y1=\"" << f(py(0)) << "\" y2=\"" << f(py(0))
       << "\" stroke=\"#ccc\"/>\n";
  for (int i = 0; i <= n; ++i) {
    os << "<polyline fill=\"none\" stroke=\"" << colors[i % 6] << "\" stroke-width=\"1.2\" points=\"";
    for (const auto& rec : run.records) os << f(px(rec.t)) << ',' << f(py(traj.value(i, rec.t))) << ' ';
    os << "\"/>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
  std::optional<double> prev;
  for (const auto& rec : run.records) {
    if (!rec.finite()) continue;
    const double v = rec.v_int();
    if (prev && *prev != v) os << f(px(rec.t)) << ',' << f(pv(*prev)) << ' ';
    os << f(px(rec.t)) << ',' << f(pv(v)) << ' ';
    prev = v;
  }
  os << "\"/>\n";
  for (int v = 0; v <= static_cast<int>(vmax); ++v)
    os << "<text x=\"" << left - 20 << "\" y=\"" << f(pv(v) + 4) << "\" font-family=\"sans-serif\" font-size=\"11\">"
       << v << "</text>\n";
  os << "<text x=\"" << left << "\" y=\"" << H - 10 << "\" font-family=\"sans-serif\" font-size=\"11\">t = "
     << format_double(t0) << "</text>\n";
  os << "<text x=\"" << W - right - 120 << "\" y=\"" << H - 10
     << "\" font-family=\"sans-serif\" font-size=\"11\">t = " << format_double(t1) << "</text>\n";
  os << "</svg>\n";
}

void write_outputs(const ScenarioRun& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
    return out;
  };
  const auto& traj = *run.trajectory;
  {
    auto out = open("trajectory.csv");
    write_trajectory_table(out, trajectory_table(traj));
  }
  const bool transform = std::find(run.scenario.audits.begin(), run.scenario.audits.end(), "transform") !=
                         run.scenario.audits.end();
  if (transform) {
    auto out = open("y_trajectory.csv");
    const auto y = to_y(run.built->system, traj);
    write_trajectory_table(out, y_trajectory_table(y));
  }
  {
    auto out = open("lyapunov.csv");
    write_lyapunov_csv(out, run.records);
  }
  {
    auto out = open("audits.json");
    out << audits_to_json(run.reports) << '\n';
  }
  {
    auto out = open("plot.csv");
    write_plot_csv(out, run);
  }
  if (run.scenario.svg) {
    auto out = open("plot.svg");
    write_plot_svg(out, run);
  }
}

RunResult run_scenario(const Scenario& s, const std::filesystem::path& out_root, const RunHooks& hooks) {
  RunResult res;
  res.name = s.name;
  res.output_dir = out_root / s.name;
  try {
    const auto run = execute_scenario(s, hooks);
    write_outputs(run, res.output_dir);
    res.exit_code = run.exit_code();
    std::ostringstream os;
    for (const auto& r : run.reports) os << s.name << ": " << r.audit << ' ' << to_string(r.status) << '\n';
    res.message = os.str();
  } catch (const std::exception& e) {
    res.exit_code = 1;
    res.message = s.name + ": error: " + e.what() + "\n";
  }
  return res;
}

}  // namespace ddelyap
