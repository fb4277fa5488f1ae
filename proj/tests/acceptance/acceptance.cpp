#include "acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "ddelyap/errors.hpp"

namespace ddelyap::acceptance {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double unit() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  int below(int n) { return static_cast<int>(g_() % static_cast<std::uint64_t>(n)); }

 private:
  std::mt19937_64 g_;
};

std::string num(double x) { return format_double(x); }

double meta_number(const AuditReport& r, const std::string& key, double fallback = std::nan("")) {
  const auto it = r.metadata.find(key);
  if (it == r.metadata.end()) return fallback;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  if (const auto* b = std::get_if<bool>(&it->second)) return *b ? 1.0 : 0.0;
  return fallback;
}

const AuditReport* find_report(const ScenarioRun& run, const std::string& name) {
  for (const auto& r : run.reports)
    if (r.audit == name) return &r;
  return nullptr;
}

std::string first_counterexample(const AuditReport& r) {
  if (r.counterexamples.empty()) return to_string(r.status);
  const auto& c = r.counterexamples.front();
  std::ostringstream os;
  os << c.note << " at t =";
  for (double t : c.times) os << ' ' << t;
  return os.str();
}

}  // namespace

// Corpus ------------------------------------------------------------------------

Scenario random_scenario(int k, std::uint64_t seed) {
  Rng g(seed * 1000003ULL + static_cast<std::uint64_t>(k));
  static const char* models[] = {"constant", "explicit", "threshold", "implicit"};
  const int n = k % 4;
  const std::string model = models[(k / 4) % 4];
  const int delta = (k / 16) % 2 ? 1 : -1;
  const bool saturating = model == "implicit" || (k / 32) % 2 == 1;

  Scenario s;
  s.name = "random_" + std::to_string(k);
  s.description = "randomized corpus member";
  s.delta = delta;
  s.seed = static_cast<std::uint64_t>(k) + 1;
  s.t0 = 0.0;
  s.t_end = 10.0 + 4.0 * g.unit();
  s.audits = audit_names();
  s.max_records = 1000;

  std::vector<double> mu(n + 1), beta(n + 1);
  for (int i = 0; i <= n; ++i) mu[i] = g.uniform(0.3, 1.5);
  for (int i = 0; i < n; ++i) beta[i] = g.uniform(0.5, 2.0);
  beta[n] = delta * g.uniform(1.0, 4.0);
  s.system = saturating ? "cyclic_saturating" : "cyclic_linear";
  s.system_params["n"] = {static_cast<double>(n)};
  s.system_params["mu"] = mu;
  s.system_params["beta"] = beta;
  double modulation = 0.0;
  if (saturating) {
    modulation = 0.3 * g.unit();
    s.system_params["modulation"] = {modulation};
    s.system_params["omega"] = {g.uniform(0.5, 2.5)};
  }

  const double c0 = g.uniform(-0.5, 0.5), c1 = g.uniform(0.2, 1.0), w = g.uniform(1.0, 6.0),
               ph = g.uniform(0.0, 6.283185307179586);
  s.initial.expr = num(c0) + " + " + num(c1) + "*sin(" + num(w) + "*s + " + num(ph) + ")";
  for (int i = 0; i < n; ++i) s.initial.discrete.push_back(g.uniform(-1.0, 1.0));

  s.delay.model = model;
  if (model == "constant") {
    s.delay.params["tau"] = num(g.uniform(0.5, 1.5));
  } else if (model == "explicit") {
    const double c = g.uniform(0.6, 1.4);
    const double d = c * g.uniform(0.05, 0.3);
    const double om = std::min(g.uniform(0.3, 2.0), 0.8 / d);
    const double p = g.uniform(0.0, 6.283185307179586);
    s.delay.params["tau"] = num(c) + " + " + num(d) + "*sin(" + num(om) + "*t + " + num(p) + ")";
    s.delay.params["r"] = num(c + d);
    s.delay.params["tau_min"] = num(c - d);
  } else if (model == "threshold") {
    const double A = g.uniform(0.7, 1.5), B = g.uniform(0.1, 0.6);
    s.delay.params["a"] = num(A) + " + " + num(B) + (k % 2 ? "*tanh(u)^2" : "*sin(3*u)^2/(1 + u^2)");
    s.delay.params["a_min"] = num(A);
    s.delay.params["a_max"] = num(A + B);
  } else {
    // a priori bound on |x^0'| along the saturating flow
    const double gain0 = std::abs(beta[0]) * (n == 0 ? 1.0 + modulation : 1.0);
    const double phi_max = std::abs(c0) + c1;
    const double bound = std::max(phi_max, gain0 / mu[0]);
    double L0 = 1.1 * (mu[0] * bound + gain0);
    L0 = std::max(L0, 1.1 * c1 * w);
    const double p = std::min(0.2, 0.15 / L0), q = std::min(0.1, 0.1 / L0), s3 = 0.05;
    const double c = g.uniform(1.0, 1.5);
    const double spread = p * std::numbers::pi / 2 + q + s3;
    s.delay.params["R"] = num(c) + " + " + num(p) + "*atan(v) + " + num(q) + "*tanh(x0) + " + num(s3) + "*sin(t)";
    s.delay.params["lip_r1"] = num(q);
    s.delay.params["lip_r2"] = num(p);
    s.delay.params["lip_r3"] = num(s3);
    s.delay.params["r"] = num(c + spread);
    s.delay.params["tau_min"] = num(c - spread);
    s.delay.params["L0"] = num(L0);
  }
  return s;
}

// Sign-change oracle ------------------------------------------------------------------

int brute_force_sign_changes(const SegmentFunction& seg, double a, double zeta) {
  const auto& sp = seg.continuum();
  std::vector<double> seq;
  auto push = [&](double v) {
    if (std::abs(v) > zeta) seq.push_back(v);
  };
  // interior extrema of a smooth cell from sign changes of the derivative on a sub-grid
  auto extrema = [&](double l, double r) {
    constexpr int kSub = 4;
    double tl = l;
    double dl = sp.derivative(l, Side::Right);
    for (int j = 1; j <= kSub; ++j) {
      const double tr = l + (r - l) * j / kSub;
      const double dr = sp.derivative(tr, Side::Left);
      if ((dl < 0) != (dr < 0) && dl != 0 && dr != 0) {
        double lo = tl, hi = tr;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double dm = sp.derivative(mid, Side::Right);
          if ((dm < 0) == (dl < 0)) lo = mid;
          else hi = mid;
        }
        push(sp.value(0.5 * (lo + hi)));
      }
      tl = tr;
      dl = sp.derivative(tr, Side::Right);
    }
  };
  std::vector<double> knots;
  for (const auto& p : sp.pieces())
    if (p.lo > a && p.lo < 0.0) knots.push_back(p.lo);
  constexpr int kGrid = 10000;
  double prev = a;
  push(sp.value(a));
  std::size_t kn = 0;
  for (int k = 1; k <= kGrid; ++k) {
    const double t = k == kGrid ? 0.0 : a + (0.0 - a) * k / kGrid;
    double l = prev;
    while (kn < knots.size() && knots[kn] <= l) ++kn;
    while (kn < knots.size() && knots[kn] < t) {
      extrema(l, knots[kn]);
      push(sp.value(knots[kn]));
      l = knots[kn++];
    }
    extrema(l, t);
    push(sp.value(t));
    prev = t;
  }
  for (double v : seg.discrete_values()) push(v);
  int count = 0;
  for (std::size_t i = 1; i < seq.size(); ++i)
    if ((seq[i] < 0) != (seq[i - 1] < 0)) ++count;
  return count;
}

// Engineered double zeros ---------------------------------------------------------------

namespace {

struct DoubleZeroCase {
  std::string label;
  std::string system;
  ParamMap params;
  int delta;
  double tau;
  std::vector<double> mu, beta;  // f^i = -mu_i u + beta_i v
  double phase;                  // of the second mode
  int index;
};

// Roots of prod(λ + mu_i) = prod(beta_i) e^{-λ tau} with Im λ >= 0, by Newton from a grid.
std::vector<std::complex<double>> characteristic_roots(const std::vector<double>& mu, const std::vector<double>& beta,
                                                       double tau) {
  double P = 1.0;
  for (double b : beta) P *= b;
  auto g = [&](std::complex<double> l, std::complex<double>& dg) {
    std::complex<double> prod = 1.0, dprod = 0.0;
    for (double m : mu) {
      dprod = dprod * (l + m) + prod;
      prod *= l + m;
    }
    const auto e = P * std::exp(-l * tau);
    dg = dprod + tau * e;
    return prod - e;
  };
  std::vector<std::complex<double>> roots;
  for (double a = -6.0; a <= 4.0; a += 0.5) {
    for (double b = 0.0; b <= 25.0; b += 0.5) {
      std::complex<double> l(a, b), dg;
      for (int it = 0; it < 60; ++it) {
        const auto v = g(l, dg);
        if (std::abs(dg) == 0.0) break;
        l -= v / dg;
      }
      if (std::abs(g(l, dg)) > 1e-10 || l.imag() < -1e-12 || std::abs(l) > 100) continue;
      if (std::abs(l.imag()) < 1e-10) l = {l.real(), 0.0};
      bool dup = false;
      for (const auto& r : roots) dup = dup || std::abs(r - l) < 1e-7;
      if (!dup) roots.push_back(l);
    }
  }
  std::sort(roots.begin(), roots.end(), [](auto x, auto y) { return x.imag() < y.imag(); });
  return roots;
}

// Re(e^{iθ} e^{λ s}) and the matching discrete values of the eigensolution.
std::pair<std::string, std::vector<double>> eigen_data(std::complex<double> l, double phase, const std::vector<double>& mu,
                                                       const std::vector<double>& beta) {
  std::string e = "exp(" + num(l.real()) + "*s)*cos(" + num(l.imag()) + "*s + " + num(phase) + ")";
  std::vector<double> disc;
  std::complex<double> c = std::polar(1.0, phase);
  for (std::size_t i = 0; i + 1 < mu.size(); ++i) {
    c *= (l + mu[i]) / beta[i];
    disc.push_back(c.real());
  }
  return {e, disc};
}

std::optional<EngineeredDoubleZero> engineer(const DoubleZeroCase& c) {
  const auto roots = characteristic_roots(c.mu, c.beta, c.tau);
  if (roots.size() < 2) return std::nullopt;
  const auto [e1, d1] = eigen_data(roots[0], 0.0, c.mu, c.beta);
  const auto [e2, d2] = eigen_data(roots[1], c.phase, c.mu, c.beta);
  Scenario s;
  s.name = c.label;
  s.system = c.system;
  s.system_params = c.params;
  s.delta = c.delta;
  s.t0 = 0.0;
  s.t_end = 12.0;
  s.delay.model = "constant";
  s.delay.params["tau"] = num(c.tau);
  s.h_fixed = c.tau / 64.0;
  s.initial.expr = e1;
  s.initial.discrete = d1;
  const auto b1 = build_scenario(s);
  s.initial.expr = e2;
  s.initial.discrete = d2;
  const auto b2 = build_scenario(s);
  const auto t1 = integrate(b1.system, b1.model, b1.initial, s.t0, s.t_end, b1.step);
  const auto t2 = integrate(b2.system, b2.model, b2.initial, s.t0, s.t_end, b2.step);
  const int i = c.index;
  auto D = [&](double t) {
    return extended_coordinate(t1, t, i) * extended_coordinate(t2, t, i + 1) -
           extended_coordinate(t1, t, i + 1) * extended_coordinate(t2, t, i);
  };
  const double lo = s.t0 + 2 * c.tau + 0.25, hi = s.t_end - 0.25;
  const double h = *s.h_fixed / 4;
  double tl = lo, dl = D(lo);
  for (double t = lo + h; t <= hi; t += h) {
    const double dr = D(t);
    if ((dl < 0) != (dr < 0)) {
      double a = tl, b = t, fa = dl;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const double fm = D(m);
        if ((fm < 0) == (fa < 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      const double ts = 0.5 * (a + b);
      const double u_i = extended_coordinate(t2, ts, i), u_j = extended_coordinate(t2, ts, i + 1);
      const bool use_i = std::abs(u_i) >= std::abs(u_j);
      const double den = use_i ? u_i : u_j;
      const double scale = std::max(std::abs(u_i), std::abs(u_j));
      if (scale > 0.0 && std::abs(den) > 1e-3 * scale) {
        const double lambda = -(use_i ? extended_coordinate(t1, ts, i) : extended_coordinate(t1, ts, i + 1)) / den;
        std::vector<HermitePiece> pieces;
        const auto p1 = b1.initial.continuum().pieces();
        const auto p2 = b2.initial.continuum().pieces();
        for (std::size_t k = 0; k < p1.size(); ++k) {
          HermitePiece q = p1[k];
          q.v0 += lambda * p2[k].v0;
          q.v1 += lambda * p2[k].v1;
          q.d0 += lambda * p2[k].d0;
          q.d1 += lambda * p2[k].d1;
          pieces.push_back(q);
        }
        std::vector<double> disc(d1);
        for (std::size_t k = 0; k < disc.size(); ++k) disc[k] += lambda * d2[k];
        const SegmentFunction init(b1.initial.domain(), HermiteSpline(std::move(pieces)), disc);
        EngineeredDoubleZero out;
        out.label = c.label;
        out.t_star = ts;
        out.index = i;
        out.trajectory = integrate(b1.system, b1.model, init, s.t0, s.t_end, b1.step);
        AuditOptions ao;
        out.drop = audit_drop(*out.trajectory, ao);
        return out;
      }
    }
    tl = t;
    dl = dr;
  }
  return std::nullopt;
}

}  // namespace

std::vector<EngineeredDoubleZero> engineered_double_zeros() {
  const double hp = std::numbers::pi / 2;
  auto linear = [](std::vector<double> mu, std::vector<double> beta) {
    return ParamMap{{"n", {static_cast<double>(mu.size() - 1)}}, {"mu", mu}, {"beta", beta}};
  };
  const std::vector<DoubleZeroCase> cases{
      {"wright_modes", "wright_linear", {{"alpha", {hp}}, {"mu", {0.0}}}, -1, 1.0, {0.0}, {-hp}, 0.0, 0},
      {"wright_damped", "cyclic_linear", linear({0.3}, {-1.2}), -1, 1.0, {0.3}, {-1.2}, 0.7, 0},
      {"wright_strong", "cyclic_linear", linear({0.0}, {-3.0}), -1, 1.0, {0.0}, {-3.0}, 1.3, 0},
      {"n1_index0", "cyclic_linear", linear({1.0, 0.5}, {1.0, -2.0}), -1, 1.0, {1.0, 0.5}, {1.0, -2.0}, 0.4, 0},
      {"n1_index1", "cyclic_linear", linear({1.0, 0.5}, {1.0, -2.0}), -1, 1.0, {1.0, 0.5}, {1.0, -2.0}, 0.4, 1},
      {"n1_positive", "cyclic_linear", linear({0.5, 0.5}, {1.0, 1.5}), 1, 1.0, {0.5, 0.5}, {1.0, 1.5}, 0.9, 0},
      {"n2_index1", "cyclic_linear", linear({0.5, 0.5, 0.5}, {1.0, 1.0, -2.0}), -1, 0.8, {0.5, 0.5, 0.5},
       {1.0, 1.0, -2.0}, 0.2, 1},
      {"n3_index2", "cyclic_linear", linear({0.5, 0.5, 0.5, 0.5}, {1.0, 1.0, 1.0, -3.0}), -1, 0.7,
       {0.5, 0.5, 0.5, 0.5}, {1.0, 1.0, 1.0, -3.0}, 1.1, 2},
  };
  std::vector<EngineeredDoubleZero> out;
  for (const auto& c : cases)
    if (auto e = engineer(c)) out.push_back(std::move(*e));
  return out;
}

// Criteria ----------------------------------------------------------------------------

namespace {

struct Corpus {
  std::vector<ScenarioRun> random_runs;
  std::vector<ScenarioRun> builtin_runs;
  std::vector<std::string> errors;
  double seconds = 0.0;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::vector<const ScenarioRun*> all_runs(const Corpus& c) {
  std::vector<const ScenarioRun*> out;
  for (const auto& r : c.random_runs) out.push_back(&r);
  for (const auto& r : c.builtin_runs) out.push_back(&r);
  return out;
}

CriterionResult parity_law(const Corpus& c) {
  CriterionResult res{1, "parity law", false, {}, 0.0};
  std::size_t finite = 0, exceptions = 0;
  std::set<int> ns, deltas;
  std::set<std::string> models;
  std::string first;
  for (const auto& run : c.random_runs) {
    ns.insert(run.trajectory->n_coords());
    deltas.insert(run.scenario.delta);
    models.insert(run.scenario.delay.model);
    for (const auto& rec : run.records) {
      if (!rec.finite()) continue;
      ++finite;
      const bool even = rec.v_int() % 2 == 0;
      if (even != (run.scenario.delta == 1)) {
        ++exceptions;
        if (first.empty()) first = run.scenario.name + " t = " + num(rec.t);
      }
    }
  }
  std::ostringstream os;
  os << c.random_runs.size() << " scenarios, N in {";
  for (int n : ns) os << n << (n == *ns.rbegin() ? "" : ",");
  os << "}, " << models.size() << " delay models, " << deltas.size() << " signs, " << finite
     << " finite V values, " << exceptions << " exceptions";
  if (!c.errors.empty()) os << ", " << c.errors.size() << " runs failed: " << c.errors.front();
  if (!first.empty()) os << " (first: " << first << ")";
  res.detail = os.str();
  res.pass = exceptions == 0 && c.errors.empty() && c.random_runs.size() >= 50 && ns.size() == 4 &&
             models.size() == 4 && deltas.size() == 2 && finite > 0;
  return res;
}

CriterionResult monotonicity(const Corpus& c) {
  CriterionResult res{2, "monotonicity", false, {}, 0.0};
  std::size_t pairs = 0, increases = 0, ties = 0, audit_fails = 0;
  std::string first;
  for (const auto& run : c.random_runs) {
    const LyapunovRecord* prev = nullptr;
    for (const auto& rec : run.records) {
      if (!rec.finite()) {
        if (rec.v) prev = nullptr;  // Unresolved breaks the chain
        continue;
      }
      if (prev) {
        ++pairs;
        if (rec.v_int() > prev->v_int()) {
          if (rec.v_robust && *rec.v_robust <= prev->v_int()) {
            ++ties;
          } else {
            ++increases;
            if (first.empty()) first = run.scenario.name + " t = " + num(rec.t);
          }
        }
      }
      prev = &rec;
    }
    if (const auto* r = find_report(run, "monotonicity"); r && !r->pass()) ++audit_fails;
  }
  std::ostringstream os;
  os << c.random_runs.size() << " scenarios, " << pairs << " record pairs, " << increases << " strict increases, "
     << ties << " ties within tolerance, " << audit_fails << " failing audits";
  if (!first.empty()) os << " (first: " << first << ")";
  res.detail = os.str();
  res.pass = increases == 0 && audit_fails == 0 && c.errors.empty() && c.random_runs.size() >= 50;
  return res;
}

CriterionResult drop_theorem() {
  CriterionResult res{3, "drop theorem", false, {}, 0.0};
  const auto cases = engineered_double_zeros();
  std::size_t with_events = 0, events = 0, failures = 0;
  int min_drop = 1 << 30;
  std::string first;
  for (const auto& e : cases) {
    const auto checked = static_cast<std::size_t>(meta_number(e.drop, "events_checked", 0));
    // independent recomputation at the engineered time
    const auto& traj = *e.trajectory;
    bool direct_ok = false;
    try {
      const double eta2 = iterate_eta(traj.model(), e.t_star, 2, traj);
      const auto v_t = v_value(segment_at(traj, e.t_star), -traj.delay_at(e.t_star).tau, traj.delta());
      const auto v_2 = v_value(segment_at(traj, eta2), -traj.delay_at(eta2).tau, traj.delta());
      direct_ok = v_t.value.is_finite() && v_2.value.is_finite() && v_2.value.value() - v_t.value.value() >= 2;
    } catch (const Error&) {
    }
    if (checked > 0) {
      ++with_events;
      events += checked;
      min_drop = std::min(min_drop, static_cast<int>(meta_number(e.drop, "min_drop", 0)));
    }
    if (e.drop.status == AuditStatus::Fail || e.drop.status == AuditStatus::Inconclusive || !direct_ok) {
      ++failures;
      if (first.empty()) first = e.label + ": " + first_counterexample(e.drop) + (direct_ok ? "" : " (direct check)");
    }
  }
  std::ostringstream os;
  os << cases.size() << " engineered scenarios, " << with_events << " with checked double zeros, " << events
     << " events";
  if (events > 0) os << ", min drop " << min_drop;
  if (!first.empty()) os << " (first failure: " << first << ")";
  res.detail = os.str();
  res.pass = with_events >= 5 && failures == 0 && events > 0 && min_drop >= 2;
  return res;
}

CriterionResult regularization(const Corpus& c) {
  CriterionResult res{4, "regularization", false, {}, 0.0};
  std::size_t audited = 0, exceptions = 0, runs = 0;
  std::string first;
  for (const auto* run : all_runs(c)) {
    const auto* r = find_report(*run, "regularize");
    if (!r) continue;
    ++runs;
    audited += static_cast<std::size_t>(meta_number(*r, "audited", 0));
    exceptions += r->counterexamples.size();
    if (!r->counterexamples.empty() && first.empty()) first = run->scenario.name + ": " + first_counterexample(*r);
  }
  std::ostringstream os;
  os << runs << " scenarios, " << audited << " records with V constant over three delay iterates, " << exceptions
     << " not in R";
  if (!first.empty()) os << " (first: " << first << ")";
  res.detail = os.str();
  res.pass = exceptions == 0 && audited > 0 && c.errors.empty();
  return res;
}

CriterionResult transform_fidelity(const Corpus& c) {
  CriterionResult res{5, "transform fidelity", false, {}, 0.0};
  std::size_t runs = 0, failures = 0, short_sign = 0;
  double worst_ratio = 0.0;
  std::string first;
  for (const auto* run : all_runs(c)) {
    const auto* r = find_report(*run, "transform");
    if (!r) continue;
    ++runs;
    const double ratio = meta_number(*r, "residual_max", 0) / run->scenario.tol.integrator;
    worst_ratio = std::max(worst_ratio, ratio);
    if (meta_number(*r, "sign_checks", 0) < 100) ++short_sign;
    if (!r->pass() || ratio > 50.0) {
      ++failures;
      if (first.empty()) first = run->scenario.name + ": " + first_counterexample(*r);
    }
  }
  std::ostringstream os;
  os << runs << " runs, worst residual " << worst_ratio << " x tol (bound 50), " << failures << " failing, "
     << short_sign << " runs with fewer than 100 sign checks";
  if (!first.empty()) os << " (first: " << first << ")";
  res.detail = os.str();
  res.pass = runs > 0 && failures == 0 && short_sign == 0;
  return res;
}

CriterionResult threshold_delay(const Corpus& c) {
  CriterionResult res{6, "threshold delay", false, {}, 0.0};
  std::size_t runs = 0, failures = 0;
  double worst_resid = 0.0, worst_excess = -1e300;
  std::string first;
  for (const auto* run : all_runs(c)) {
    if (run->scenario.delay.model != "threshold") continue;
    const auto* r = find_report(*run, "delay");
    if (!r) continue;
    ++runs;
    const double resid = meta_number(*r, "threshold_max_residual", 1.0);
    const double est = meta_number(*r, "eta_k_lipschitz_estimate");
    const double bound = meta_number(*r, "eta_k_lipschitz_bound");
    worst_resid = std::max(worst_resid, resid);
    if (std::isfinite(est)) worst_excess = std::max(worst_excess, est - bound);
    const bool ok = r->pass() && resid <= 1e-10 && meta_number(*r, "threshold_tau_bounds_ok", 0) == 1.0 &&
                    std::isfinite(est) && est <= bound + 1e-6;
    if (!ok) {
      ++failures;
      if (first.empty()) first = run->scenario.name + ": " + first_counterexample(*r);
    }
  }
  std::ostringstream os;
  os << runs << " threshold runs, max |integral - 1| = " << worst_resid
     << ", max (Lip eta^k estimate - a_max/a_min) = " << worst_excess << ", " << failures << " failing";
  if (!first.empty()) os << " (first: " << first << ")";
  res.detail = os.str();
  res.pass = runs > 0 && failures == 0;
  return res;
}

CriterionResult implicit_delay(const Corpus& c) {
  CriterionResult res{7, "implicit delay", false, {}, 0.0};
  std::size_t runs = 0, failures = 0;
  double worst_gap = 0.0, worst_excess = -1e300;
  std::string first;
  for (const auto* run : all_runs(c)) {
    if (run->scenario.delay.model != "implicit") continue;
    const auto* r = find_report(*run, "delay");
    if (!r) continue;
    ++runs;
    const double gap = meta_number(*r, "implicit_oracle_max_gap", 1.0);
    const double est = meta_number(*r, "lip_tau_phi_estimate");
    const double bound = meta_number(*r, "lip_tau_phi_bound");
    worst_gap = std::max(worst_gap, gap);
    worst_excess = std::max(worst_excess, est - bound);
    const auto mono = check_eta_monotone(run->trajectory->delay_log(), &run->trajectory->model());
    const bool ok = r->pass() && gap <= 1e-11 && std::isfinite(est) && est <= bound + 1e-6 && mono.pass;
    if (!ok) {
      ++failures;
      if (first.empty()) first = run->scenario.name + ": " + first_counterexample(*r);
    }
  }
  std::ostringstream os;
  os << runs << " implicit runs, max |fixed point - bisection| = " << worst_gap
     << ", max (Lip tau_2 estimate - bound) = " << worst_excess << ", " << failures << " failing";
  if (!first.empty()) os << " (first: " << first << ")";
  res.detail = os.str();
  res.pass = runs > 0 && failures == 0;
  return res;
}

CriterionResult closed_form(const Corpus& c) {
  CriterionResult res{8, "closed-form regression", false, {}, 0.0};
  const ScenarioRun* run = nullptr;
  for (const auto& r : c.builtin_runs)
    if (r.scenario.name == "wright_linear") run = &r;
  if (!run) {
    res.detail = "wright_linear run missing";
    return res;
  }
  const auto& traj = *run->trajectory;
  double err = 0.0;
  for (int k = 0; k <= 10000; ++k) {
    const double t = 10.0 * k / 10000;
    err = std::max(err, std::abs(traj.value(0, t) - std::cos(std::numbers::pi / 2 * t)));
  }
  std::set<std::string> values;
  for (const auto& rec : run->records) values.insert(rec.v ? rec.v->value.to_string() : "absent");
  std::ostringstream os;
  os << "sup |x(t) - cos(pi t/2)| on [0,10] = " << err << ", V values {";
  for (const auto& v : values) os << v << (v == *values.rbegin() ? "" : ",");
  os << "} over " << run->records.size() << " records";
  res.detail = os.str();
  res.pass = err <= 1e-6 && values.size() == 1 && *values.begin() == "1";
  return res;
}

CriterionResult oracle_equivalence(const Options& opts) {
  CriterionResult res{9, "sign-change oracle equivalence", false, {}, 0.0};
  Rng g(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  int mismatches = 0;
  std::string first;
  long long total = 0;
  for (int k = 0; k < opts.random_segments; ++k) {
    const double r = g.uniform(0.5, 2.0);
    const int pieces = 1 + g.below(12);
    const int n = g.below(4);
    std::vector<double> knots(pieces + 1);
    for (int j = 0; j <= pieces; ++j) knots[j] = -r + r * j / pieces;
    for (int j = 1; j < pieces; ++j) knots[j] += g.uniform(-0.3, 0.3) * r / pieces;
    knots.front() = -r;
    knots.back() = 0.0;
    std::vector<double> vals(pieces + 1), ders(pieces + 1);
    for (auto& v : vals) v = g.uniform(-1.0, 1.0);
    for (auto& d : ders) d = g.uniform(-6.0, 6.0);
    std::vector<double> disc(n);
    for (auto& d : disc) d = (g.unit() < 0.5 ? -1 : 1) * g.uniform(0.05, 1.0);
    const SegmentFunction seg(DomainK(r, n), HermiteSpline::from_knots(knots, vals, ders), disc);
    const double a = g.uniform(-r, -1e-3);
    const int expect = brute_force_sign_changes(seg, a);
    const auto got = sign_changes(seg, a);
    total += expect;
    if (!got.is_finite() || got.value() != expect) {
      ++mismatches;
      if (first.empty()) first = "segment " + std::to_string(k) + ": " + got.to_string() + " vs " + std::to_string(expect);
    }
  }
  std::ostringstream os;
  os << opts.random_segments << " random piecewise cubics, " << total << " sign changes in total, " << mismatches
     << " mismatches";
  if (!first.empty()) os << " (first: " << first << ")";
  res.detail = os.str();
  res.pass = mismatches == 0;
  return res;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CriterionResult determinism(const Options& opts) {
  CriterionResult res{10, "determinism", false, {}, 0.0};
  const auto root = std::filesystem::temp_directory_path() /
                    ("ddelyap_determinism_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  std::vector<Scenario> scenarios;
  for (const char* name : {"threshold_demo", "implicit_demo", "cyclic_n2_saturating"})
    scenarios.push_back(*find_scenario(default_registry(), name));
  scenarios.push_back(parse_scenario(to_ini(random_scenario(5, opts.seed)), "roundtrip"));
  std::size_t files = 0, differing = 0, errors = 0;
  std::string first;
  for (const auto& s : scenarios) {
    const auto a = run_scenario(s, root / "a");
    const auto b = run_scenario(s, root / "b");
    if (a.exit_code == 1 || b.exit_code == 1) {
      ++errors;
      if (first.empty()) first = a.message;
      continue;
    }
    for (const auto& entry : std::filesystem::directory_iterator(a.output_dir)) {
      ++files;
      const auto other = b.output_dir / entry.path().filename();
      if (!std::filesystem::exists(other) || read_file(entry.path()) != read_file(other)) {
        ++differing;
        if (first.empty()) first = s.name + "/" + entry.path().filename().string();
      }
    }
  }
  std::error_code ec;
  std::filesystem::remove_all(root, ec);
  std::ostringstream os;
  os << scenarios.size() << " scenarios run twice, " << files << " files compared, " << differing << " differ, "
     << errors << " run errors";
  if (!first.empty()) os << " (first: " << first << ")";
  res.detail = os.str();
  res.pass = files > 0 && differing == 0 && errors == 0;
  return res;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const Options& opts, std::ostream& out) {
  auto wanted = [&](int id) { return opts.only.empty() || std::find(opts.only.begin(), opts.only.end(), id) != opts.only.end(); };
  auto note = [&](const std::string& s) {
    if (opts.progress) opts.progress(s);
  };
  const bool need_corpus = wanted(1) || wanted(2) || wanted(4) || wanted(5) || wanted(6) || wanted(7) || wanted(8);
  Corpus corpus;
  if (need_corpus) {
    const auto t0 = Clock::now();
    const bool need_random = wanted(1) || wanted(2) || wanted(4) || wanted(5) || wanted(6) || wanted(7);
    if (need_random) {
      for (int k = 0; k < opts.random_scenarios; ++k) {
        const auto s = random_scenario(k, opts.seed);
        try {
          corpus.random_runs.push_back(execute_scenario(s));
        } catch (const std::exception& e) {
          corpus.errors.push_back(s.name + ": " + e.what());
        }
        note("corpus: " + s.name + " done");
      }
    }
    for (const auto& e : default_registry().scenarios) {
      try {
        corpus.builtin_runs.push_back(execute_scenario(*find_scenario(default_registry(), e.name)));
      } catch (const std::exception& ex) {
        corpus.errors.push_back(e.name + ": " + ex.what());
      }
      note("corpus: " + e.name + " done");
    }
    corpus.seconds = since(t0);
  }

  std::vector<CriterionResult> results;
  auto record = [&](CriterionResult r, Clock::time_point t0) {
    r.seconds = since(t0);
    out << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.id << " (" << r.title << "): " << r.detail << " ["
        << std::fixed;
    out.precision(1);
    out << r.seconds << " s]" << std::endl;
    out.unsetf(std::ios::floatfield);
    out.precision(6);
    results.push_back(std::move(r));
  };
  // the shared corpus is charged to the first criterion that uses it
  bool corpus_charged = false;
  auto start = [&]() {
    auto t = Clock::now();
    if (need_corpus && !corpus_charged) {
      corpus_charged = true;
      t -= std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(corpus.seconds));
    }
    return t;
  };
  if (wanted(1)) {
    const auto t = start();
    record(parity_law(corpus), t);
  }
  if (wanted(2)) {
    const auto t = start();
    record(monotonicity(corpus), t);
  }
  if (wanted(3)) {
    const auto t = Clock::now();
    record(drop_theorem(), t);
  }
  if (wanted(4)) {
    const auto t = start();
    record(regularization(corpus), t);
  }
  if (wanted(5)) {
    const auto t = start();
    record(transform_fidelity(corpus), t);
  }
  if (wanted(6)) {
    const auto t = start();
    record(threshold_delay(corpus), t);
  }
  if (wanted(7)) {
    const auto t = start();
    record(implicit_delay(corpus), t);
  }
  if (wanted(8)) {
    const auto t = start();
    record(closed_form(corpus), t);
  }
  if (wanted(9)) {
    const auto t = Clock::now();
    record(oracle_equivalence(opts), t);
  }
  if (wanted(10)) {
    const auto t = Clock::now();
    record(determinism(opts), t);
  }
  return results;
}

}  // namespace ddelyap::acceptance
