#include "ddelyap/systems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ddelyap/errors.hpp"

namespace ddelyap {

double central_difference(const std::function<double(double)>& g, double x) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  const double h = base * (1.0 + std::abs(x));
  return (g(x + h) - g(x - h)) / (2.0 * h);
}

CyclicSystem::CyclicSystem(std::vector<Coupling> equations, int delta, std::string name)
    : eqs_(std::move(equations)), delta_(delta), name_(std::move(name)) {
  if (eqs_.empty()) throw ConfigError("CyclicSystem: at least one equation required");
  if (delta_ != 1 && delta_ != -1) throw ConfigError("CyclicSystem: delta must be +1 or -1");
  bool analytic = true;
  for (const auto& e : eqs_) {
    if (!e.f) throw ConfigError("CyclicSystem: missing right-hand side");
    if (!e.d2 || !e.d3) analytic = false;
  }
  mode_ = analytic ? DerivativeMode::Analytic : DerivativeMode::CentralDifference;
}

CyclicSystem CyclicSystem::with_finite_differences() const {
  CyclicSystem copy(*this);
  copy.force_fd_ = true;
  copy.mode_ = DerivativeMode::CentralDifference;
  return copy;
}

double CyclicSystem::f(int i, double t, double u, double v) const { return eqs_.at(i).f(t, u, v); }

double CyclicSystem::d2(int i, double t, double u, double v) const {
  const auto& e = eqs_.at(i);
  if (e.d2 && !force_fd_) return e.d2(t, u, v);
  return central_difference([&](double x) { return e.f(t, x, v); }, u);
}

double CyclicSystem::d3(int i, double t, double u, double v) const {
  const auto& e = eqs_.at(i);
  if (e.d3 && !force_fd_) return e.d3(t, u, v);
  return central_difference([&](double x) { return e.f(t, u, x); }, v);
}

void CyclicSystem::eval_rhs(double t, std::span<const double> state, double delayed_value,
                            std::span<double> out) const {
  const int n = n_coords();
  if (static_cast<int>(state.size()) != n + 1 || out.size() != state.size())
    throw DomainError("eval_rhs: state must have N+1 entries");
  for (int i = 0; i <= n; ++i) {
    const double v = i < n ? state[i + 1] : delayed_value;
    const double y = eqs_[i].f(t, state[i], v);
    if (!std::isfinite(y)) {
      std::ostringstream os;
      os << "eval_rhs: non-finite value of f^" << i << " at t=" << t;
      throw NumericError(os.str(), i);
    }
    out[i] = y;
  }
}

std::vector<double> CyclicSystem::eval_rhs(double t, std::span<const double> state, double delayed_value) const {
  std::vector<double> out(state.size());
  eval_rhs(t, state, delayed_value, out);
  return out;
}

std::vector<double> eval_rhs(const CyclicSystem& sys, double t, std::span<const double> state,
                             double delayed_value) {
  return sys.eval_rhs(t, state, delayed_value);
}

FeedbackReport check_feedback(const CyclicSystem& sys, std::span<const double> t_samples,
                              std::span<const double> v_samples, double zeta) {
  FeedbackReport rep;
  const int n = sys.n_coords();
  auto fail = [&](std::string clause, int i, double t, double v, double value) {
    rep.pass = false;
    ++rep.failures;
    if (!rep.first_failure) rep.first_failure = FeedbackFailure{std::move(clause), i, t, v, value};
  };
  for (double t : t_samples) {
    for (int i = 0; i <= n; ++i) {
      const double sgn = i < n ? 1.0 : static_cast<double>(sys.delta());
      const std::string who = i < n ? "f^" + std::to_string(i) : "f^N";
      for (double v : v_samples) {
        if (v == 0.0) throw DomainError("check_feedback: v samples must be nonzero");
        const double val = sgn * v * sys.f(i, t, 0.0, v);
        ++rep.checks;
        if (!(val > 0.0))
          fail(i < n ? "H2: v*f^i(t,0,v) > 0" : "H2: delta*v*f^N(t,0,v) > 0", i, t, v, val);
      }
      const double d = sgn * sys.d3(i, t, 0.0, 0.0);
      ++rep.checks;
      if (!(d > zeta)) fail(i < n ? "H2: D3 f^i(t,0,0) > 0" : "H2: delta*D3 f^N(t,0,0) > 0", i, t, 0.0, d);
    }
  }
  return rep;
}

double check_linear_bound(const CyclicSystem& sys, const Box& box, std::span<const double> t_samples,
                          int grid, double zeta) {
  if (!(box.u_hi >= box.u_lo && box.v_hi >= box.v_lo) || !std::isfinite(box.u_lo) ||
      !std::isfinite(box.u_hi) || !std::isfinite(box.v_lo) || !std::isfinite(box.v_hi))
    throw DomainError("check_linear_bound: box must be bounded");
  if (grid % 2 == 0) ++grid;
  grid = std::max(grid, 3);
  auto axis = [&](double lo, double hi) {
    std::vector<double> xs(grid);
    for (int k = 0; k < grid; ++k) xs[k] = lo + (hi - lo) * k / (grid - 1);
    // include zero whenever the range straddles it
    if (lo < 0 && hi > 0) xs.push_back(0.0);
    return xs;
  };
  const auto us = axis(box.u_lo, box.u_hi);
  const auto vs = axis(box.v_lo, box.v_hi);
  double c = 0.0;
  bool any = false;
  for (double t : t_samples)
    for (int i = 0; i <= sys.n_coords(); ++i)
      for (double u : us)
        for (double v : vs) {
          const double denom = std::abs(u) + std::abs(v);
          if (denom <= zeta) continue;
          any = true;
          c = std::max(c, std::abs(sys.f(i, t, u, v)) / denom);
        }
  if (!any) throw DomainError("check_linear_bound: all samples degenerate");
  return c;
}

// Built-in library -----------------------------------------------------------

namespace {

double pick(const std::vector<double>& xs, int i, const char* what) {
  if (xs.empty()) throw ConfigError(std::string("missing parameter ") + what);
  if (xs.size() == 1) return xs[0];
  if (i >= static_cast<int>(xs.size()))
    throw ConfigError(std::string("parameter ") + what + " has too few entries");
  return xs[i];
}

const std::vector<double>& param(const ParamMap& p, const std::string& key, const std::vector<double>& dflt) {
  auto it = p.find(key);
  return it == p.end() ? dflt : it->second;
}

double scalar_param(const ParamMap& p, const std::string& key, double dflt) {
  auto it = p.find(key);
  if (it == p.end()) return dflt;
  if (it->second.size() != 1) throw ConfigError("parameter " + key + " must be a scalar");
  return it->second[0];
}

}  // namespace

CyclicSystem wright_linear(double alpha, double mu, int delta) {
  Coupling c;
  c.f = [=](double, double u, double v) { return -mu * u - alpha * v; };
  c.d2 = [=](double, double, double) { return -mu; };
  c.d3 = [=](double, double, double) { return -alpha; };
  return CyclicSystem({c}, delta, "wright_linear");
}

CyclicSystem cyclic_linear(int n_coords, std::vector<double> mu, std::vector<double> beta, int delta) {
  if (n_coords < 0) throw ConfigError("cyclic_linear: n must be nonnegative");
  std::vector<Coupling> eqs;
  for (int i = 0; i <= n_coords; ++i) {
    const double m = pick(mu, i, "mu");
    const double b = pick(beta, i, "beta");
    Coupling c;
    c.f = [=](double, double u, double v) { return -m * u + b * v; };
    c.d2 = [=](double, double, double) { return -m; };
    c.d3 = [=](double, double, double) { return b; };
    eqs.push_back(std::move(c));
  }
  return CyclicSystem(std::move(eqs), delta, "cyclic_linear");
}

CyclicSystem cyclic_saturating(int n_coords, std::vector<double> mu, std::vector<double> beta, int delta,
                               double modulation, double omega) {
  if (n_coords < 0) throw ConfigError("cyclic_saturating: n must be nonnegative");
  if (std::abs(modulation) >= 1.0) throw ConfigError("cyclic_saturating: |modulation| must be < 1");
  std::vector<Coupling> eqs;
  for (int i = 0; i <= n_coords; ++i) {
    const double m = pick(mu, i, "mu");
    const double b = pick(beta, i, "beta");
    const double mod = i == n_coords ? modulation : 0.0;
    Coupling c;
    c.f = [=](double t, double u, double v) { return -m * u + b * (1.0 + mod * std::sin(omega * t)) * std::tanh(v); };
    c.d2 = [=](double, double, double) { return -m; };
    c.d3 = [=](double t, double, double v) {
      const double th = std::tanh(v);
      return b * (1.0 + mod * std::sin(omega * t)) * (1.0 - th * th);
    };
    eqs.push_back(std::move(c));
  }
  return CyclicSystem(std::move(eqs), delta, "cyclic_saturating");
}

CyclicSystem make_builtin_system(const std::string& name, const ParamMap& params, int delta) {
  static const std::vector<double> kHalfPi{1.5707963267948966};
  static const std::vector<double> kZero{0.0};
  static const std::vector<double> kOne{1.0};
  if (name == "wright_linear") {
    return wright_linear(scalar_param(params, "alpha", kHalfPi[0]), scalar_param(params, "mu", 0.0), delta);
  }
  if (name == "cyclic_linear" || name == "cyclic_saturating") {
    const double nd = scalar_param(params, "n", 1.0);
    if (nd < 0 || nd != std::floor(nd)) throw ConfigError(name + ": n must be a nonnegative integer");
    const int n = static_cast<int>(nd);
    auto mu = param(params, "mu", kZero);
    auto beta = param(params, "beta", kOne);
    if (params.count("gain")) {
      // closing gain given separately from the forward couplings
      std::vector<double> b(n + 1);
      for (int i = 0; i < n; ++i) b[i] = pick(beta, i, "beta");
      b[n] = scalar_param(params, "gain", 1.0);
      beta = b;
    }
    CyclicSystem sys = name == "cyclic_linear"
                           ? cyclic_linear(n, mu, beta, delta)
                           : cyclic_saturating(n, mu, beta, delta, scalar_param(params, "modulation", 0.0),
                                               scalar_param(params, "omega", 1.0));
    return sys;
  }
  throw ConfigError("unknown system '" + name + "'");
}

std::vector<std::string> builtin_system_names() {
  return {"cyclic_linear", "cyclic_saturating", "wright_linear"};
}

}  // namespace ddelyap
