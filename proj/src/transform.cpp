#include "ddelyap/transform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddelyap/errors.hpp"
#include "ddelyap/quadrature.hpp"

namespace ddelyap {

namespace {

double time_slack(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

double gl01(const std::function<double(double)>& g, int order) { return gauss_legendre_integrate(g, 0.0, 1.0, order); }

// x^{i+1}(t) with x^{N+1}(t) = x^0(η(t))
double next_coordinate(const Trajectory& traj, int i, double t) {
  if (i < traj.n_coords()) return traj.value(i + 1, t);
  return traj.x0(traj.delay_at(t).eta);
}

}  // namespace

constexpr double kQuotientThreshold = 1e-3;

double coefficient_a(const CyclicSystem& sys, int i, double t, double u, double v, int quad_order) {
  if (std::abs(u) >= kQuotientThreshold) return (sys.f(i, t, u, v) - sys.f(i, t, 0.0, v)) / u;
  return gl01([&](double h) { return sys.d2(i, t, h * u, v); }, quad_order);
}

double coefficient_b(const CyclicSystem& sys, int i, double t, double v, int quad_order) {
  if (std::abs(v) >= kQuotientThreshold) return (sys.f(i, t, 0.0, v) - sys.f(i, t, 0.0, 0.0)) / v;
  return gl01([&](double h) { return sys.d3(i, t, 0.0, h * v); }, quad_order);
}

Coefficients coefficients_at(const CyclicSystem& sys, const Trajectory& traj, double t, int quad_order) {
  const int n = traj.n_coords();
  Coefficients c;
  c.a.resize(n + 1);
  c.b.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double u = traj.value(i, t);
    const double v = next_coordinate(traj, i, t);
    c.a[i] = coefficient_a(sys, i, t, u, v, quad_order);
    c.b[i] = coefficient_b(sys, i, t, v, quad_order);
    if (std::abs(v) > 1e-3) {
      const double quad = gl01([&](double h) { return sys.d3(i, t, 0.0, h * v); }, quad_order);
      const double dev = std::abs(quad - c.b[i]) / std::max(std::abs(c.b[i]), 1e-300);
      c.b_closed_form_deviation = std::max(c.b_closed_form_deviation, dev);
    }
  }
  return c;
}

// CoefficientTrack ----------------------------------------------------------

CoefficientTrack::CoefficientTrack(const CyclicSystem& sys, const Trajectory& traj, double t_ref, int quad_order)
    : sys_(&sys), traj_(&traj), t_ref_(t_ref), order_(quad_order) {
  if (t_ref < traj.t0() - time_slack(t_ref) || t_ref > traj.t_end()) {
    std::ostringstream os;
    os << "coefficient track: t_ref=" << t_ref << " outside [" << traj.t0() << ", " << traj.t_end() << "]";
    throw CoverageError(os.str());
  }
  t_ref_ = std::max(t_ref, traj.t0());
  const auto knots = traj.knots();
  first_knot_ = static_cast<std::size_t>(std::lower_bound(knots.begin(), knots.end(), t_ref_) - knots.begin());
  const int n = traj.n_coords();
  const std::size_t dim = static_cast<std::size_t>(n) + 1;
  knot_A_.assign((knots.size() - first_knot_) * dim, 0.0);

  auto integrate_all = [&](double lo, double hi, std::span<double> out) {
    if (!(hi > lo)) return;
    const auto& rule = gauss_legendre(order_);
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (int q = 0; q < order_; ++q) {
      const double t = mid + half * rule.nodes[q];
      const double closing = traj.x0(traj.delay_at(t).eta);
      for (int i = 0; i <= n; ++i) {
        const double v = i < n ? traj.value(i + 1, t) : closing;
        out[i] += half * rule.weights[q] * coefficient_a(sys, i, t, traj.value(i, t), v, order_);
      }
    }
  };

  if (first_knot_ < knots.size()) {
    std::span<double> a0(knot_A_.data(), dim);
    integrate_all(t_ref_, knots[first_knot_], a0);
    for (std::size_t k = first_knot_ + 1; k < knots.size(); ++k) {
      const std::size_t row = (k - first_knot_) * dim;
      std::copy(knot_A_.begin() + (row - dim), knot_A_.begin() + row, knot_A_.begin() + row);
      integrate_all(knots[k - 1], knots[k], std::span<double>(knot_A_.data() + row, dim));
    }
  }
}

double CoefficientTrack::a(int i, double t) const {
  return coefficient_a(*sys_, i, t, traj_->value(i, t), next_coordinate(*traj_, i, t), order_);
}

double CoefficientTrack::b(int i, double t) const {
  return coefficient_b(*sys_, i, t, next_coordinate(*traj_, i, t), order_);
}

double CoefficientTrack::A(int i, double t) const {
  if (t < t_ref_ - time_slack(t) || t > traj_->t_end() + time_slack(t)) {
    std::ostringstream os;
    os << "coefficient track: A(" << t << ") outside [" << t_ref_ << ", " << traj_->t_end() << "]";
    throw CoverageError(os.str());
  }
  const auto knots = traj_->knots();
  const std::size_t dim = static_cast<std::size_t>(n_coords()) + 1;
  double base_t = t_ref_;
  double base = 0.0;
  auto it = std::upper_bound(knots.begin() + static_cast<std::ptrdiff_t>(first_knot_), knots.end(), t);
  if (it != knots.begin() + static_cast<std::ptrdiff_t>(first_knot_)) {
    const std::size_t k = static_cast<std::size_t>(it - knots.begin()) - 1;
    base_t = knots[k];
    base = knot_A_[(k - first_knot_) * dim + i];
  }
  if (t <= base_t) return base;
  return base + gauss_legendre_integrate([&](double s) { return a(i, s); }, base_t, t, order_);
}

bool CoefficientTrack::c_defined(int i, double t) const {
  if (i < n_coords()) return true;
  return traj_->delay_at(t).eta >= t_ref_ - time_slack(t_ref_);
}

double CoefficientTrack::c(int i, double t) const {
  const int n = n_coords();
  double value = 0.0;
  if (i < n) {
    value = b(i, t) * std::exp(A(i + 1, t) - A(i, t));
  } else {
    const double eta = traj_->delay_at(t).eta;
    value = b(n, t) * std::exp(A(0, std::max(eta, t_ref_)) - A(n, t));
    if (eta < t_ref_ - time_slack(t_ref_)) {
      std::ostringstream os;
      os << "coefficient track: c_N(" << t << ") needs eta=" << eta << " >= t_ref=" << t_ref_;
      throw CoverageError(os.str());
    }
  }
  const double sign = i < n ? 1.0 : static_cast<double>(traj_->delta());
  if (!(sign * value > 0.0)) {
    std::ostringstream os;
    os << "c-positivity violated: c_" << i << "(" << t << ")=" << value << " with sign factor " << sign;
    throw InvariantError(os.str());
  }
  return value;
}

// YTrajectory ---------------------------------------------------------------

YTrajectory::YTrajectory(const CyclicSystem& sys, const Trajectory& traj, double t_ref, int quad_order)
    : sys_(&sys), traj_(&traj), track_(std::make_shared<CoefficientTrack>(sys, traj, t_ref, quad_order)) {}

double YTrajectory::value(int i, double t) const { return std::exp(-track_->A(i, t)) * traj_->value(i, t); }

double YTrajectory::derivative(int i, double t, Side side) const {
  const double x = traj_->value(i, t);
  return std::exp(-track_->A(i, t)) * (traj_->derivative(i, t, side) - track_->a(i, t) * x);
}

double YTrajectory::extended(double t, int i) const {
  if (i <= n_coords()) return value(i, t);
  if (i == n_coords() + 1) {
    const double eta = traj_->delay_at(t).eta;
    return value(0, eta);
  }
  throw DomainError("YTrajectory: index out of range");
}

YTrajectory to_y(const CyclicSystem& sys, const Trajectory& traj, std::optional<double> t_ref, int quad_order) {
  return YTrajectory(sys, traj, t_ref.value_or(traj.t0()), quad_order);
}

SegmentFunction y_segment_at(const YTrajectory& y, double t) {
  const auto& traj = y.x();
  const double r = traj.r();
  const double lo = t - r;
  if (lo < y.coverage().lo - time_slack(lo)) {
    std::ostringstream os;
    os << "y segment at t=" << t << " needs y^0 from " << lo << " but y starts at " << y.coverage().lo;
    throw CoverageError(os.str());
  }
  std::vector<double> times{std::max(lo, y.coverage().lo)};
  for (double k : traj.breakpoints(lo, t))
    if (k > times.back() + time_slack(k) && k < t - time_slack(t)) times.push_back(k);
  times.push_back(t);
  std::vector<HermitePiece> pieces;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double a = times[k];
    const double b = times[k + 1];
    pieces.push_back({a - t, b - t, y.value(0, a), y.value(0, b), y.derivative(0, a, Side::Right),
                      y.derivative(0, b, Side::Left)});
  }
  pieces.front().lo = -r;
  pieces.back().hi = 0.0;
  std::vector<double> discrete(traj.n_coords());
  for (int i = 1; i <= traj.n_coords(); ++i) discrete[i - 1] = y.value(i, t);
  return SegmentFunction(DomainK(r, traj.n_coords()), HermiteSpline(std::move(pieces)), std::move(discrete));
}

ResidualReport residual_linear_system(const YTrajectory& y, std::span<const double> sample_grid) {
  ResidualReport rep;
  const int n = y.n_coords();
  const auto& track = y.track();
  for (double t : sample_grid) {
    for (int i = 0; i <= n; ++i) {
      if (i == n && !track.c_defined(i, t)) {
        ++rep.skipped;
        continue;
      }
      const double res = std::abs(y.derivative(i, t) - track.c(i, t) * y.extended(t, i + 1));
      const double scaled = res * std::exp(track.A(i, t));
      const auto& x = y.x();
      const double next = i < n ? x.value(i + 1, t) : x.x0(x.delay_at(t).eta);
      const double rel = scaled / std::max({1.0, std::abs(x.value(i, t)), std::abs(next)});
      ++rep.checked;
      rep.max_residual = std::max(rep.max_residual, res);
      rep.max_scaled_residual = std::max(rep.max_scaled_residual, scaled);
      if (rel > rep.max_relative_residual || rep.index_at_max < 0) {
        rep.max_relative_residual = std::max(rep.max_relative_residual, rel);
        rep.t_at_max = t;
        rep.index_at_max = i;
      }
    }
  }
  return rep;
}

bool sign_agreement(const SegmentFunction& xseg, const SegmentFunction& yseg, double zeta) {
  if (xseg.domain().n_coords != yseg.domain().n_coords || xseg.domain().r != yseg.domain().r)
    throw DomainError("sign_agreement: segments live on different domains");
  const double r = xseg.domain().r;
  auto samples = continuum_samples(xseg.continuum(), -r, 0.0, 16);
  const auto ys = continuum_samples(yseg.continuum(), -r, 0.0, 16);
  samples.insert(samples.end(), ys.begin(), ys.end());
  auto agree = [&](double a, double b) { return std::max(std::abs(a), std::abs(b)) <= zeta || a * b > 0.0; };
  for (double s : samples)
    if (!agree(xseg.eval(s), yseg.eval(s))) return false;
  for (int i = 1; i <= xseg.domain().n_coords; ++i)
    if (!agree(xseg.eval(i), yseg.eval(i))) return false;
  return true;
}

TrajectoryTable y_trajectory_table(const YTrajectory& y) {
  const auto& traj = y.x();
  TrajectoryTable tab;
  tab.metadata.push_back("component_set=y");
  tab.metadata.push_back("t_ref=" + format_double(y.coverage().lo));
  tab.columns.push_back("t");
  for (int i = 0; i <= traj.n_coords(); ++i) tab.columns.push_back("x" + std::to_string(i));
  tab.columns.push_back("tau");
  tab.columns.push_back("eta");
  const auto knots = traj.knots();
  const auto log = traj.delay_log();
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (knots[k] < y.coverage().lo) continue;
    std::vector<double> row{knots[k]};
    for (int i = 0; i <= traj.n_coords(); ++i) row.push_back(y.value(i, knots[k]));
    const auto rec = k < log.size() ? log[k] : traj.delay_at(knots[k]);
    row.push_back(rec.tau);
    row.push_back(rec.eta);
    tab.rows.push_back(std::move(row));
  }
  return tab;
}

}  // namespace ddelyap
