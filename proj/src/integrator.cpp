#include "ddelyap/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <sstream>

#include "ddelyap/errors.hpp"
#include "ddelyap/quadrature.hpp"

namespace ddelyap {

namespace {

double time_slack(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

std::vector<HermitePiece> shifted_pieces(std::span<const HermitePiece> pieces, double offset) {
  std::vector<HermitePiece> out(pieces.begin(), pieces.end());
  for (auto& p : out) {
    p.lo += offset;
    p.hi += offset;
  }
  return out;
}

// Trims a contiguous piece list to [lo, hi], dropping slivers.
std::vector<HermitePiece> trim_pieces(std::vector<HermitePiece> pieces, double lo, double hi) {
  const double eps_lo = time_slack(lo);
  const double eps_hi = time_slack(hi);
  while (pieces.size() > 1 && pieces.front().hi <= lo + eps_lo) pieces.erase(pieces.begin());
  while (pieces.size() > 1 && pieces.back().lo >= hi - eps_hi) pieces.pop_back();
  if (pieces.empty()) throw CoverageError("trajectory: empty window");
  auto& f = pieces.front();
  if (f.lo != lo) f = f.restricted(lo, f.hi);
  auto& b = pieces.back();
  if (b.hi != hi) b = b.restricted(b.lo, hi);
  return pieces;
}

}  // namespace

// Trajectory -----------------------------------------------------------------

Trajectory::Trajectory(const CyclicSystem& sys, DelayModel model, const SegmentFunction& initial, double t0)
    : n_(sys.n_coords()), delta_(sys.delta()), model_(std::move(model)), t0_(t0) {
  if (initial.domain().n_coords != n_) {
    std::ostringstream os;
    os << "initial segment has " << initial.domain().n_coords << " discrete coordinates, system needs " << n_;
    throw ConfigError(os.str());
  }
  if (initial.domain().r < model_.r() * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "initial segment covers [-" << initial.domain().r << ", 0] but the delay bound is r=" << model_.r();
    throw ConfigError(os.str());
  }
  initial_ = HermiteSpline(shifted_pieces(initial.continuum().pieces(), t0));
  knots_.push_back(t0);
  values_.push_back(initial.continuum().value(0.0));
  for (double v : initial.discrete_values()) values_.push_back(v);
  derivs_.assign(n_ + 1, 0.0);
  cumulative_error_.push_back(0.0);
}

Interval Trajectory::coverage() const { return {initial_.lo(), knots_.back()}; }

Interval Trajectory::component_coverage(int i) const {
  if (i < 0 || i > n_) throw DomainError("trajectory: component index out of range");
  if (i == 0) return coverage();
  return {t0_, knots_.back()};
}

std::size_t Trajectory::locate(double t, Side side) const {
  // piece k spans [knots_[k], knots_[k+1]]
  const std::size_t pieces = knots_.size() - 1;
  auto it = side == Side::Right ? std::upper_bound(knots_.begin(), knots_.end(), t)
                                : std::lower_bound(knots_.begin(), knots_.end(), t);
  std::size_t k = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
  return std::min(k, pieces - 1);
}

double Trajectory::value(int i, double t) const {
  const auto cov = component_coverage(i);
  if (!cov.contains(t, time_slack(t))) {
    std::ostringstream os;
    os << "trajectory: x^" << i << "(" << t << ") outside coverage [" << cov.lo << ", " << cov.hi << "]";
    throw CoverageError(os.str());
  }
  if (i == 0 && t < t0_) return initial_.value(std::max(t, initial_.lo()));
  if (knots_.size() == 1) return values_[i];
  const std::size_t k = locate(t, Side::Right);
  const HermitePiece p{knots_[k], knots_[k + 1], knot_value(k, i), knot_value(k + 1, i),
                       knot_derivative(k, i), knot_derivative(k + 1, i)};
  return p.value(std::min(t, knots_.back()));
}

double Trajectory::derivative(int i, double t, Side side) const {
  const auto cov = component_coverage(i);
  if (!cov.contains(t, time_slack(t))) throw CoverageError("trajectory: derivative outside coverage");
  if (i == 0 && (t < t0_ || (t == t0_ && side == Side::Left))) {
    return initial_.derivative(std::clamp(t, initial_.lo(), initial_.hi()), Side::Left);
  }
  if (knots_.size() == 1) return derivs_[i];
  const std::size_t k = locate(t, side);
  const HermitePiece p{knots_[k], knots_[k + 1], knot_value(k, i), knot_value(k + 1, i),
                       knot_derivative(k, i), knot_derivative(k + 1, i)};
  return p.derivative(std::clamp(t, knots_.front(), knots_.back()));
}

double Trajectory::x0(double t) const { return value(0, t); }

std::vector<double> Trajectory::breakpoints(double lo, double hi) const {
  std::vector<double> out;
  if (lo < t0_) {
    for (const auto& p : initial_.pieces())
      if (p.lo > lo && p.lo < hi) out.push_back(p.lo);
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), lo);
  for (; it != knots_.end() && *it < hi; ++it) out.push_back(*it);
  return out;
}

std::optional<std::vector<double>> Trajectory::state(double t) const {
  if (t < t0_ - time_slack(t0_) || t > knots_.back() + time_slack(t)) return std::nullopt;
  std::vector<double> x(n_ + 1);
  for (int i = 0; i <= n_; ++i) x[i] = value(i, std::max(t, t0_));
  return x;
}

HermiteSpline Trajectory::component_spline(int i, double lo, double hi) const {
  const auto cov = component_coverage(i);
  if (!(hi > lo) || lo < cov.lo - time_slack(lo) || hi > cov.hi + time_slack(hi)) {
    std::ostringstream os;
    os << "trajectory: window [" << lo << ", " << hi << "] outside coverage of x^" << i;
    throw CoverageError(os.str());
  }
  lo = std::max(lo, cov.lo);
  hi = std::min(hi, cov.hi);
  std::vector<HermitePiece> pieces;
  if (i == 0 && lo < t0_) {
    const auto ip = initial_.pieces();
    for (std::size_t k = initial_.locate(lo); k < ip.size() && ip[k].lo < hi; ++k) pieces.push_back(ip[k]);
  }
  if (hi > t0_ && knots_.size() > 1) {
    for (std::size_t k = locate(std::max(lo, t0_), Side::Right); k + 1 < knots_.size() && knots_[k] < hi; ++k) {
      pieces.push_back({knots_[k], knots_[k + 1], knot_value(k, i), knot_value(k + 1, i), knot_derivative(k, i),
                        knot_derivative(k + 1, i)});
    }
  }
  return HermiteSpline(trim_pieces(std::move(pieces), lo, hi));
}

void Trajectory::append(double h, std::span<const double> x1, std::span<const double> dx1, double error_estimate) {
  if (static_cast<int>(x1.size()) != n_ + 1 || static_cast<int>(dx1.size()) != n_ + 1)
    throw DomainError("trajectory: state size mismatch");
  if (!(h > 0.0)) throw DomainError("trajectory: step must be positive");
  step_log_.push_back({knots_.back(), h, error_estimate});
  knots_.push_back(knots_.back() + h);
  values_.insert(values_.end(), x1.begin(), x1.end());
  derivs_.insert(derivs_.end(), dx1.begin(), dx1.end());
  cumulative_error_.push_back(cumulative_error_.back() + error_estimate);
}

HermitePiece Trajectory::x0_piece(std::size_t j) const {
  const auto init = initial_.pieces();
  if (j < init.size()) return init[j];
  const std::size_t k = j - init.size();
  return {knots_[k], knots_[k + 1], knot_value(k, 0), knot_value(k + 1, 0), knot_derivative(k, 0),
          knot_derivative(k + 1, 0)};
}

std::optional<DelayedTimeRecord> Trajectory::threshold_delay(const ThresholdDelay& m, double t, double tol) const {
  if (std::get_if<ThresholdDelay>(&model_.variant()) != &m) return std::nullopt;
  return threshold_delay_extended(t, tol, nullptr);
}

std::optional<DelayedTimeRecord> Trajectory::threshold_delay_extended(double t, double tol,
                                                                      const HermitePiece* ext) const {
  const auto* own = std::get_if<ThresholdDelay>(&model_.variant());
  if (own == nullptr) return std::nullopt;
  const ThresholdDelay& m = *own;
  const double tau_lo = 1.0 / m.a_max;
  const double tau_hi = 1.0 / m.a_min;
  const double end = ext != nullptr ? ext->hi : knots_.back();
  if (tol < 1e-12 || t > end || t - tau_hi < initial_.lo()) return std::nullopt;

  auto& c = threshold_integral_.get();
  std::lock_guard lock(c.mu);
  auto piece_integral = [&](const HermitePiece& p, double lo, double hi) {
    auto g = [&](double s) {
      const double v = m.a(p.value(s));
      if (!std::isfinite(v)) throw NumericError("threshold delay: non-finite a(x)", 0);
      return v;
    };
    return adaptive_gauss_legendre(g, lo, hi, 1e-14 * std::max(hi - lo, 1e-3), 8, 12).value;
  };

  const std::size_t total = initial_.pieces().size() + knots_.size();
  if (c.nodes.empty()) {
    c.nodes.push_back(initial_.lo());
    c.cum.push_back(0.0);
  }
  while (c.nodes.size() < total) {
    const std::size_t j = c.nodes.size() - 1;
    const auto p = x0_piece(j);
    c.cum.push_back(c.cum.back() + piece_integral(p, p.lo, p.hi));
    c.nodes.push_back(j + 1 < initial_.pieces().size() + 1 ? p.hi : knots_[j + 1 - initial_.pieces().size()]);
  }

  auto piece_of = [&](double x) {
    auto it = std::upper_bound(c.nodes.begin(), c.nodes.end(), x);
    std::size_t j = it == c.nodes.begin() ? 0 : static_cast<std::size_t>(it - c.nodes.begin()) - 1;
    return std::min(j, c.nodes.size() - 2);
  };
  const bool extended = ext != nullptr && t > knots_.back();
  double target = 0.0;
  if (extended) {
    target = c.cum.back() + piece_integral(*ext, knots_.back(), t) - 1.0;
  } else {
    const std::size_t jt = piece_of(t);
    target = c.cum[jt] + piece_integral(x0_piece(jt), c.nodes[jt], t) - 1.0;
  }
  HermitePiece p;
  double base = 0.0;
  double right = 0.0;
  double cum0 = 0.0;
  if (extended && target >= c.cum.back()) {
    p = *ext;
    base = knots_.back();
    right = t;
    cum0 = c.cum.back();
  } else {
    auto kt = std::upper_bound(c.cum.begin(), c.cum.end(), target);
    std::size_t k = kt == c.cum.begin() ? 0 : static_cast<std::size_t>(kt - c.cum.begin()) - 1;
    k = std::min(k, c.nodes.size() - 2);
    p = x0_piece(k);
    base = c.nodes[k];
    right = c.nodes[k + 1];
    cum0 = c.cum[k];
  }
  double left = base;
  auto G = [&](double s) { return cum0 + piece_integral(p, base, s) - target; };
  double s = std::clamp(base + (target - cum0) / m.a(p.value(base)), left, right);
  double resid = 0.0;
  int it = 0;
  for (; it < 200; ++it) {
    const double g = G(s);
    resid = g;
    if (std::abs(g) <= 0.1 * tol) break;
    if (g > 0) right = s;
    else left = s;
    double next = s - g / m.a(p.value(s));
    if (!(next > left && next < right)) next = 0.5 * (left + right);
    if (right - left <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s))) {
      s = next;
      resid = G(s);
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

DelayedTimeRecord Trajectory::delay_at(double t, const DelaySolveOptions& opts) const {
  return eta_at(model_, t, *this, {}, opts);
}

double Trajectory::error_estimate(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t + time_slack(t));
  if (it == knots_.begin()) return 0.0;
  return cumulative_error_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double Trajectory::max_local_error() const {
  double m = 0.0;
  for (const auto& s : step_log_) m = std::max(m, s.error_estimate);
  return m;
}

// Integration ----------------------------------------------------------------

namespace {

// Finalized history plus a provisional continuation of x^0 past the current
// step start (extrapolated last dense-output piece) for stage-level delays.
class ExtendedHistory : public History {
 public:
  ExtendedHistory(const Trajectory& traj, double t_n, double hi, const HermitePiece& extension)
      : traj_(traj), t_n_(t_n), hi_(hi), ext_(extension) {}

  Interval coverage() const override { return {traj_.coverage().lo, hi_}; }
  double x0(double t) const override {
    if (t <= t_n_) return traj_.x0(t);
    if (t > hi_ + time_slack(hi_)) throw CoverageError("stage history: beyond step end");
    return ext_.value(t);
  }
  std::optional<DelayedTimeRecord> threshold_delay(const ThresholdDelay&, double t, double tol) const override {
    if (t_n_ != traj_.t_end()) return std::nullopt;
    return traj_.threshold_delay_extended(t, tol, &ext_);
  }
  std::vector<double> breakpoints(double lo, double hi) const override {
    auto b = traj_.breakpoints(lo, std::min(hi, t_n_));
    if (t_n_ > lo && t_n_ < hi) b.push_back(t_n_);
    return b;
  }

 private:
  const Trajectory& traj_;
  double t_n_;
  double hi_;
  HermitePiece ext_;
};

}  // namespace

Trajectory integrate(const CyclicSystem& sys, const DelayModel& model, const SegmentFunction& initial, double t0,
                     double t_end, const StepConfig& cfg) {
  if (!(t_end > t0)) throw ConfigError("integrate: t_end must exceed t0");
  if (!(cfg.tol > 0.0)) throw ConfigError("integrate: tol must be positive");
  Trajectory traj(sys, model, initial, t0);
  const int n = sys.n_coords();
  const std::size_t dim = static_cast<std::size_t>(n) + 1;
  const double cap = cfg.kappa * model.tau_lower_bound();
  if (!(cap > 0.0)) throw ConfigError("integrate: step cap must be positive");
  const double h_max = std::min(cfg.h_max, cap);
  if (cfg.h_fixed && (!(*cfg.h_fixed > 0.0) || *cfg.h_fixed > cap * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "integrate: fixed step " << *cfg.h_fixed << " exceeds the method-of-steps cap " << cap;
    throw ConfigError(os.str());
  }

  std::vector<double> y(dim), y1(dim), ys(dim), k1(dim), k2(dim), k3(dim), k4(dim), k5(dim);
  for (std::size_t i = 0; i < dim; ++i) y[i] = traj.knot_value(0, static_cast<int>(i));

  std::vector<DelayedTimeRecord> log;
  {
    DelayedTimeRecord rec = eta_at(traj.model(), t0, traj, y, cfg.delay);
    log.push_back(rec);
  }

  double t_n = t0;
  HermitePiece extension{};
  bool have_extension = false;

  auto rhs = [&](const History& hist, double t, std::span<const double> state, std::span<double> out) {
    const DelayedTimeRecord rec = eta_at(model, t, hist, state, cfg.delay);
    if (rec.eta > t_n + time_slack(t_n)) {
      std::ostringstream os;
      os << "method of steps violated: eta(" << t << ")=" << rec.eta << " > step start " << t_n;
      throw InvariantError(os.str());
    }
    sys.eval_rhs(t, state, traj.x0(rec.eta), out);
  };

  rhs(traj, t0, y, k1);
  std::copy(k1.begin(), k1.end(), traj.derivs_.begin());  // right derivative at t0

  double h = cfg.h_fixed ? *cfg.h_fixed : std::min({h_max, 1e-2 * model.r(), t_end - t0});
  std::size_t steps = 0;
  while (t_n < t_end - time_slack(t_end)) {
    if (++steps > cfg.max_steps) throw SolverError("integrate: step budget exhausted");
    double step = h;
    if (t_n + step > t_end - time_slack(t_end)) step = t_end - t_n;

    if (!have_extension) {
      // first step: linear continuation from the initial value with slope k1
      extension = HermitePiece{t_n, t_n + 1.0, y[0], y[0] + k1[0], k1[0], k1[0]};
    }
    const ExtendedHistory hist(traj, t_n, t_n + step, extension);

    for (std::size_t i = 0; i < dim; ++i) ys[i] = y[i] + 0.5 * step * k1[i];
    rhs(hist, t_n + 0.5 * step, ys, k2);
    for (std::size_t i = 0; i < dim; ++i) ys[i] = y[i] + 0.5 * step * k2[i];
    rhs(hist, t_n + 0.5 * step, ys, k3);
    for (std::size_t i = 0; i < dim; ++i) ys[i] = y[i] + step * k3[i];
    rhs(hist, t_n + step, ys, k4);
    for (std::size_t i = 0; i < dim; ++i) {
      y1[i] = y[i] + step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(y1[i])) throw NumericError("integrate: non-finite state", static_cast<int>(i));
    }
    rhs(hist, t_n + step, y1, k5);

    std::vector<double> err(dim);
    for (std::size_t i = 0; i < dim; ++i) err[i] = std::abs(step / 6.0 * (k4[i] - k5[i]));
    {
      // defect of the dense output inside the step; it sees interpolation
      // error of delayed terms which the embedded pair misses
      const HermitePiece x0_piece{t_n, t_n + step, y[0], y1[0], k1[0], k5[0]};
      const ExtendedHistory dense_hist(traj, t_n, t_n + step, x0_piece);
      for (double frac : {0.25, 0.75}) {
        const double ts = t_n + frac * step;
        for (std::size_t i = 0; i < dim; ++i) {
          const HermitePiece p{t_n, t_n + step, y[i], y1[i], k1[i], k5[i]};
          ys[i] = p.value(ts);
          k2[i] = p.derivative(ts);
        }
        rhs(dense_hist, ts, ys, k3);
        for (std::size_t i = 0; i < dim; ++i) err[i] = std::max(err[i], step * std::abs(k2[i] - k3[i]));
      }
    }
    double err_abs = 0.0;
    double err_norm = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      err_abs = std::max(err_abs, err[i]);
      const double scale = cfg.tol * std::max({1.0, std::abs(y[i]), std::abs(y1[i])});
      err_norm = std::max(err_norm, err[i] / scale);
    }

    const double fac = err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.25) : 5.0;
    if (cfg.h_fixed || err_norm <= 1.0) {
      extension = HermitePiece{t_n, t_n + step, y[0], y1[0], k1[0], k5[0]};
      have_extension = true;
      traj.append(step, y1, k5, err_abs);
      t_n = traj.t_end();
      y = y1;
      k1 = k5;
      log.push_back(eta_at(traj.model(), t_n, traj, y, cfg.delay));
      if (!cfg.h_fixed) h = std::min(h_max, step * std::clamp(fac, 0.2, 5.0));
    } else {
      h = step * std::clamp(fac, 0.2, 0.9);
      if (h < cfg.h_min) {
        std::ostringstream os;
        os << "integrate: step size underflow at t=" << t_n;
        throw SolverError(os.str());
      }
    }
  }
  traj.set_delay_log(std::move(log));
  return traj;
}

// Segments and zeros --------------------------------------------------------

SegmentFunction segment_at(const Trajectory& traj, double t) {
  const double r = traj.r();
  auto sp = traj.component_spline(0, t - r, t);
  std::vector<HermitePiece> pieces = shifted_pieces(sp.pieces(), -t);
  pieces.front().lo = -r;
  pieces.back().hi = 0.0;
  std::vector<double> discrete(traj.n_coords());
  for (int i = 1; i <= traj.n_coords(); ++i) discrete[i - 1] = traj.value(i, t);
  return SegmentFunction(DomainK(r, traj.n_coords()), HermiteSpline(std::move(pieces)), std::move(discrete));
}

std::vector<ComponentZero> zeros_of_component(const Trajectory& traj, int i, Interval window, double zeta) {
  const auto sp = traj.component_spline(i, window.lo, window.hi);
  std::vector<ComponentZero> out;
  for (const auto& z : spline_zeros(sp, window.lo, window.hi, zeta)) out.push_back({z.s, z.flat});
  return out;
}

double extended_coordinate(const Trajectory& traj, double t, int i) {
  if (i <= traj.n_coords()) return traj.value(i, t);
  if (i == traj.n_coords() + 1) return traj.x0(traj.delay_at(t).eta);
  throw DomainError("extended_coordinate: index out of range");
}

namespace {

// Times in [lo, hi] with η(t) = target; η is increasing along the run.
std::optional<double> eta_preimage(const Trajectory& traj, double target, double lo, double hi) {
  auto g = [&](double t) { return traj.delay_at(t).eta - target; };
  double glo = g(lo);
  double ghi = g(hi);
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if ((glo > 0) == (ghi > 0)) return std::nullopt;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<DoubleZero> detect_double_zero(const Trajectory& traj, Interval window, double zeta) {
  const int n = traj.n_coords();
  // candidate times per pair index i: zeros of x_t(i) and x_t(i+1)
  std::vector<std::vector<double>> zeros(n + 2);
  for (int i = 0; i <= n; ++i)
    for (const auto& z : zeros_of_component(traj, i, window, zeta)) zeros[i].push_back(z.t);
  {
    // zeros of t ↦ x^0(η(t)) are preimages of zeros of x^0
    const double elo = traj.delay_at(window.lo).eta;
    const double ehi = traj.delay_at(window.hi).eta;
    if (ehi > elo) {
      const auto knots = traj.knots();
      for (const auto& z : zeros_of_component(traj, 0, {elo, ehi}, zeta)) {
        // bracket on knots to keep bisection local
        double lo = window.lo;
        double hi = window.hi;
        auto it = std::lower_bound(knots.begin(), knots.end(), window.lo);
        for (; it != knots.end() && *it <= window.hi; ++it) {
          const double e = traj.delay_at(*it).eta;
          if (e <= z.t) lo = *it;
          if (e >= z.t) {
            hi = *it;
            break;
          }
        }
        if (auto t = eta_preimage(traj, z.t, lo, hi)) zeros[n + 1].push_back(*t);
      }
    }
  }

  struct Cand {
    double t;
    int index;
    double m;
  };
  std::vector<Cand> cands;
  for (int i = 0; i <= n; ++i) {
    std::vector<double> ts = zeros[i];
    ts.insert(ts.end(), zeros[i + 1].begin(), zeros[i + 1].end());
    for (double t : ts) {
      if (t < window.lo || t > window.hi) continue;
      const double m = std::max(std::abs(extended_coordinate(traj, t, i)), std::abs(extended_coordinate(traj, t, i + 1)));
      if (m <= zeta) cands.push_back({t, i, m});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return a.index != b.index ? a.index < b.index : a.t < b.t;
  });
  std::vector<Cand> merged;
  for (const auto& c : cands) {
    if (!merged.empty() && merged.back().index == c.index && c.t - merged.back().t <= 1e-9) {
      if (c.m < merged.back().m) merged.back() = c;
      continue;
    }
    merged.push_back(c);
  }
  std::vector<DoubleZero> out;
  for (const auto& c : merged) out.push_back({c.t, c.index});
  std::sort(out.begin(), out.end(), [](const DoubleZero& a, const DoubleZero& b) {
    return a.t != b.t ? a.t < b.t : a.index < b.index;
  });
  return out;
}

// CSV --------------------------------------------------------------------------

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

TrajectoryTable trajectory_table(const Trajectory& traj) {
  TrajectoryTable tab;
  tab.columns.push_back("t");
  for (int i = 0; i <= traj.n_coords(); ++i) tab.columns.push_back("x" + std::to_string(i));
  tab.columns.push_back("tau");
  tab.columns.push_back("eta");
  const auto knots = traj.knots();
  const auto log = traj.delay_log();
  for (std::size_t k = 0; k < knots.size(); ++k) {
    std::vector<double> row{knots[k]};
    for (int i = 0; i <= traj.n_coords(); ++i) row.push_back(traj.knot_value(k, i));
    if (k < log.size()) {
      row.push_back(log[k].tau);
      row.push_back(log[k].eta);
    } else {
      const auto rec = traj.delay_at(knots[k]);
      row.push_back(rec.tau);
      row.push_back(rec.eta);
    }
    tab.rows.push_back(std::move(row));
  }
  return tab;
}

void write_trajectory_table(std::ostream& os, const TrajectoryTable& table) {
  for (const auto& m : table.metadata) os << "# " << m << '\n';
  for (std::size_t c = 0; c < table.columns.size(); ++c) os << (c ? "," : "") << table.columns[c];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c]);
    os << '\n';
  }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  write_trajectory_table(os, trajectory_table(traj));
}

TrajectoryTable read_trajectory_csv(std::istream& is) {
  TrajectoryTable tab;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      tab.metadata.push_back(line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!header) {
      tab.columns = fields;
      header = true;
      continue;
    }
    if (fields.size() != tab.columns.size()) {
      std::ostringstream os;
      os << "trajectory csv line " << lineno << ": expected " << tab.columns.size() << " fields, got "
         << fields.size();
      throw ConfigError(os.str());
    }
    std::vector<double> row;
    for (const auto& x : fields) {
      char* end = nullptr;
      const double v = std::strtod(x.c_str(), &end);
      if (end == x.c_str() || *end != '\0') {
        std::ostringstream os;
        os << "trajectory csv line " << lineno << ": bad number '" << x << "'";
        throw ConfigError(os.str());
      }
      row.push_back(v);
    }
    tab.rows.push_back(std::move(row));
  }
  if (!header) throw ConfigError("trajectory csv: missing header");
  return tab;
}

}  // namespace ddelyap
