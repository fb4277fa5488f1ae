#include "ddelyap/delays.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ddelyap/errors.hpp"
#include "ddelyap/quadrature.hpp"

namespace ddelyap {

std::vector<double> History::breakpoints(double, double) const { return {}; }

std::optional<std::vector<double>> History::state(double) const { return std::nullopt; }

FunctionHistory::FunctionHistory(std::function<double(double)> x0, Interval coverage,
                                 std::function<std::vector<double>(double)> state)
    : x0_(std::move(x0)), coverage_(coverage), state_(std::move(state)) {}

double FunctionHistory::x0(double t) const {
  if (!coverage_.contains(t, 1e-12 * std::max(1.0, std::abs(t)))) {
    std::ostringstream os;
    os << "history does not cover t=" << t;
    throw CoverageError(os.str());
  }
  return x0_(t);
}

std::optional<std::vector<double>> FunctionHistory::state(double t) const {
  if (!state_) return std::nullopt;
  return state_(t);
}

namespace {

double slack_for(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

void require_coverage(const History& h, double lo, double hi, const char* who) {
  const auto cov = h.coverage();
  if (lo < cov.lo - slack_for(lo) || hi > cov.hi + slack_for(hi)) {
    std::ostringstream os;
    os << who << ": history covers [" << cov.lo << ", " << cov.hi << "] but [" << lo << ", " << hi
       << "] is needed";
    throw CoverageError(os.str());
  }
}

void check_record(const DelayedTimeRecord& rec, double r) {
  if (!(rec.tau > 0.0) || rec.tau > r * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "delay tau=" << rec.tau << " at t=" << rec.t << " violates 0 < tau <= r=" << r;
    throw InvariantError(os.str());
  }
}

}  // namespace

DelayModel::DelayModel(Variant v) : v_(std::move(v)) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantDelay>) {
          if (!(m.tau0 > 0.0)) throw ConfigError("constant delay: tau0 must be positive");
        } else if constexpr (std::is_same_v<T, ExplicitEtaDelay>) {
          if (!m.eta) throw ConfigError("explicit delay: eta missing");
          if (!(m.r > 0.0)) throw ConfigError("explicit delay: r must be positive");
          if (!(m.tau_min > 0.0) || m.tau_min > m.r)
            throw ConfigError("explicit delay: tau_min must lie in (0, r]");
        } else if constexpr (std::is_same_v<T, ThresholdDelay>) {
          if (!m.a) throw ConfigError("threshold delay: a missing");
          if (!(m.a_min > 0.0) || !(m.a_min <= m.a_max))
            throw ConfigError("threshold delay: need 0 < a_min <= a_max");
        } else {
          if (!m.R) throw ConfigError("implicit delay: R missing");
          if (!(m.r > 0.0) || !(m.L0 > 0.0)) throw ConfigError("implicit delay: r and L0 must be positive");
          if (!(m.tau_min > 0.0) || m.tau_min > m.r)
            throw ConfigError("implicit delay: tau_min must lie in (0, r]");
          if (m.lip_r1 < 0 || m.lip_r2 < 0 || m.lip_r3 < 0)
            throw ConfigError("implicit delay: Lipschitz constants must be nonnegative");
          if (!(m.lip_r3 < 1.0)) throw ConfigError("implicit delay: contraction condition requires Lip R3 < 1");
          if (!((m.lip_r1 + 2.0 * m.lip_r2) / (1.0 - m.lip_r3) < 1.0 / m.L0))
            throw ConfigError("implicit delay: contraction condition requires (Lip R1 + 2 Lip R2)/(1 - Lip R3) < 1/L0");
        }
      },
      v_);
}

std::string DelayModel::kind() const {
  switch (v_.index()) {
    case 0: return "constant";
    case 1: return "explicit";
    case 2: return "threshold";
    default: return "implicit";
  }
}

double DelayModel::r() const {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantDelay>) return m.tau0;
        else if constexpr (std::is_same_v<T, ThresholdDelay>) return 1.0 / m.a_min;
        else return m.r;
      },
      v_);
}

double DelayModel::tau_lower_bound() const {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantDelay>) return m.tau0;
        else if constexpr (std::is_same_v<T, ThresholdDelay>) return 1.0 / m.a_max;
        else return m.tau_min;
      },
      v_);
}

bool DelayModel::state_dependent() const { return v_.index() >= 2; }

DelayedTimeRecord solve_threshold(const std::function<double(double)>& a, double a_min, double a_max,
                                  const History& history, double t, double tol) {
  const double tau_lo = 1.0 / a_max;
  const double tau_hi = 1.0 / a_min;
  const double lo = t - tau_hi;
  require_coverage(history, lo, t, "solve_threshold");
  const double qtol = 1e-3 * tol;

  auto integrand = [&](double s) {
    const double v = a(history.x0(s));
    if (!std::isfinite(v)) throw NumericError("threshold delay: non-finite a(x)", 0);
    return v;
  };
  auto integrate = [&](double x, double y) {
    const auto q = adaptive_gauss_legendre(integrand, x, y, qtol);
    if (!q.converged) throw SolverError("threshold delay: quadrature did not converge");
    return q.value;
  };

  std::vector<double> nodes{t};
  auto bps = history.breakpoints(lo, t);
  std::sort(bps.begin(), bps.end(), std::greater<>());
  for (double b : bps)
    if (b < t && b > lo) nodes.push_back(b);
  nodes.push_back(lo);

  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
    const double hi_n = nodes[j];
    const double lo_n = nodes[j + 1];
    const double piece = integrate(lo_n, hi_n);
    if (acc + piece < 1.0 - 0.1 * tol && j + 2 < nodes.size()) {
      acc += piece;
      continue;
    }
    if (acc + piece < 1.0 - 0.1 * tol) {
      std::ostringstream os;
      os << "threshold delay: integral over [t - 1/a_min, t] is " << acc + piece
         << " < 1 at t=" << t << " (a below a_min?)";
      throw SolverError(os.str());
    }
    // root s in [lo_n, hi_n] of acc + ∫_s^{hi_n} a - 1
    double left = lo_n;
    double right = hi_n;
    double s = std::clamp(hi_n - (1.0 - acc) / integrand(hi_n), left, right);
    double resid = 0.0;
    int it = 0;
    for (; it < 200; ++it) {
      const double g = acc + integrate(s, hi_n) - 1.0;
      resid = g;
      if (std::abs(g) <= 0.1 * tol) break;
      if (g > 0) left = s;  // too much mass: move s right
      else right = s;
      double next = s + g / integrand(s);  // Newton with G'(s) = -a(x0(s))
      if (!(next > left && next < right)) next = 0.5 * (left + right);
      if (right - left <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s))) {
        s = next;
        resid = acc + integrate(s, hi_n) - 1.0;
        break;
      }
      s = next;
    }
    DelayedTimeRecord rec{t, t - s, s, it + 1, std::abs(resid)};
    if (rec.tau < tau_lo * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "threshold delay: tau=" << rec.tau << " < 1/a_max at t=" << t << " (a above a_max?)";
      throw SolverError(os.str());
    }
    rec.tau = std::min(rec.tau, tau_hi);
    rec.eta = t - rec.tau;
    return rec;
  }
  throw SolverError("threshold delay: empty bracket");
}

std::optional<DelayedTimeRecord> History::threshold_delay(const ThresholdDelay&, double, double) const {
  return std::nullopt;
}

DelayedTimeRecord solve_threshold(const ThresholdDelay& model, const History& history, double t, double tol) {
  return solve_threshold(model.a, model.a_min, model.a_max, history, t, tol);
}

int implicit_iteration_bound(const ImplicitDelay& model, double tol) {
  const double q = model.lip_r2 * model.L0;
  if (q <= 0.0) return 1;
  return static_cast<int>(std::ceil(std::log(tol * (1.0 - q) / model.r) / std::log(q))) + 1;
}

DelayedTimeRecord solve_implicit(const ImplicitDelay& model, std::span<const double> state,
                                 const History& history, double t, double tol) {
  const double q = model.lip_r2 * model.L0;
  if (!(q < 1.0)) throw ConfigError("implicit delay: Lip R2 * L0 must be < 1");
  require_coverage(history, t - model.r, t, "solve_implicit");
  auto map = [&](double s) {
    const double v = model.R(state, history.x0(t - s), t);
    if (!(v > 0.0) || v > model.r * (1.0 + 1e-12) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "implicit delay: R=" << v << " outside (0, r] at t=" << t;
      throw SolverError(os.str());
    }
    return std::min(v, model.r);
  };

  double s = 0.5 * model.r;
  const int bound = implicit_iteration_bound(model, tol) + 2;
  std::vector<double> trace;
  if (q == 0.0) {
    s = map(s);
    return {t, s, t - s, 1, std::abs(s - map(s))};
  }
  const double stop = tol * (1.0 - q) / q;
  for (int it = 1; it <= bound; ++it) {
    const double next = map(s);
    trace.push_back(next);
    if (std::abs(next - s) <= stop) {
      return {t, next, t - next, it, std::abs(next - map(next))};
    }
    s = next;
  }
  std::ostringstream os;
  os << "implicit delay: no convergence at t=" << t << " after " << bound << " iterations; trace:";
  for (double x : trace) os << ' ' << x;
  throw SolverError(os.str());
}

DelayedTimeRecord eta_at(const DelayModel& model, double t, const History& history,
                         std::span<const double> state, const DelaySolveOptions& opts) {
  DelayedTimeRecord rec = std::visit(
      [&](const auto& m) -> DelayedTimeRecord {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantDelay>) {
          return {t, m.tau0, t - m.tau0, 0, 0.0};
        } else if constexpr (std::is_same_v<T, ExplicitEtaDelay>) {
          const double e = m.eta(t);
          return {t, t - e, e, 0, 0.0};
        } else if constexpr (std::is_same_v<T, ThresholdDelay>) {
          if (auto fast = history.threshold_delay(m, t, opts.threshold_tol)) return *fast;
          return solve_threshold(m, history, t, opts.threshold_tol);
        } else {
          if (!state.empty()) return solve_implicit(m, state, history, t, opts.implicit_tol);
          auto st = history.state(t);
          if (!st) {
            std::ostringstream os;
            os << "implicit delay: state x(t) unavailable at t=" << t;
            throw CoverageError(os.str());
          }
          return solve_implicit(m, *st, history, t, opts.implicit_tol);
        }
      },
      model.variant());
  check_record(rec, model.r());
  return rec;
}

double iterate_eta(const DelayModel& model, double t, int k, const History& history,
                   const DelaySolveOptions& opts) {
  if (k < 0) throw DomainError("iterate_eta: k must be nonnegative");
  double cur = t;
  for (int j = 1; j <= k; ++j) {
    try {
      cur = eta_at(model, cur, history, {}, opts).eta;
    } catch (const CoverageError& e) {
      std::ostringstream os;
      os << "iterate_eta: iterate " << j << " failed: " << e.what();
      throw CoverageError(os.str());
    }
  }
  return cur;
}

ImplicitLipschitzBounds implicit_lipschitz_bounds(const ImplicitDelay& m) {
  const double denom = 1.0 - m.lip_r2 * m.L0;
  return {m.lip_r3 / denom, (m.lip_r1 + m.lip_r2) / denom,
          (m.lip_r3 + (m.lip_r1 + m.lip_r2) * m.L0) / denom};
}

MonotoneReport check_eta_monotone(std::span<const DelayedTimeRecord> records, const DelayModel* model) {
  MonotoneReport rep;
  rep.lipschitz_bound = std::numeric_limits<double>::quiet_NaN();
  if (model != nullptr) {
    if (const auto* im = std::get_if<ImplicitDelay>(&model->variant()))
      rep.lipschitz_bound = implicit_lipschitz_bounds(*im).eta_increasing;
  }
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    if (!(records[i + 1].eta > records[i].eta)) {
      rep.pass = false;
      rep.violation_index = i;
      rep.t1 = records[i].t;
      rep.eta1 = records[i].eta;
      rep.t2 = records[i + 1].t;
      rep.eta2 = records[i + 1].eta;
      break;
    }
  }
  return rep;
}

double estimate_eta_lipschitz(const DelayModel& model, std::span<const double> t_grid, int k_max,
                              const History& history, const DelaySolveOptions& opts) {
  std::vector<double> grid(t_grid.begin(), t_grid.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.size() < 2) throw DomainError("estimate_eta_lipschitz: need at least two grid points");
  double best = 0.0;
  std::vector<double> cur = grid;
  for (int k = 1; k <= k_max; ++k) {
    for (auto& x : cur) x = eta_at(model, x, history, {}, opts).eta;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
      best = std::max(best, std::abs(cur[i + 1] - cur[i]) / (grid[i + 1] - grid[i]));
  }
  return best;
}

}  // namespace ddelyap
