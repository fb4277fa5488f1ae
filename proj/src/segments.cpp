#include "ddelyap/segments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddelyap/errors.hpp"

namespace ddelyap {

namespace {

int sign_of(double v, double zeta) {
  if (std::abs(v) <= zeta) return 0;
  return v > 0 ? 1 : -1;
}

// x*y > 0 with both factors beyond the zero threshold
bool strictly_positive(double x, double y, double zeta) {
  return std::abs(x) > zeta && std::abs(y) > zeta && x * y > 0;
}

bool is_zero(double v, double zeta) { return std::abs(v) <= zeta; }

void check_left_end(const DomainK& dom, double a) {
  if (!(a >= -dom.r && a < 0.0)) {
    std::ostringstream os;
    os << "left end a=" << a << " not in [-r, 0) with r=" << dom.r;
    throw DomainError(os.str());
  }
}

double bisect_root(const HermiteSpline& sp, double lo, double hi) {
  double flo = sp.value(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = sp.value(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

DomainK::DomainK(double r_, int n_coords_) : r(r_), n_coords(n_coords_) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("DomainK: r must be positive");
  if (n_coords < 0) throw DomainError("DomainK: n_coords must be nonnegative");
}

bool DomainK::contains(double s) const {
  if (s >= -r && s <= 0.0) return true;
  return s >= 1.0 && s <= n_coords && s == std::floor(s);
}

SegmentFunction::SegmentFunction(DomainK domain, HermiteSpline continuum, std::vector<double> discrete)
    : domain_(domain), continuum_(std::move(continuum)), discrete_(std::move(discrete)) {
  if (continuum_.empty()) throw DomainError("SegmentFunction: empty continuum part");
  const double tol = 1e-9 * std::max(1.0, domain_.r);
  if (std::abs(continuum_.lo() + domain_.r) > tol || std::abs(continuum_.hi()) > tol)
    throw DomainError("SegmentFunction: continuum part must live on [-r, 0]");
  if (static_cast<int>(discrete_.size()) != domain_.n_coords)
    throw DomainError("SegmentFunction: discrete_values must have n_coords entries");
}

SegmentFunction SegmentFunction::from_function(DomainK domain, const std::function<double(double)>& value,
                                               const std::function<double(double)>& derivative,
                                               std::vector<double> discrete, int pieces) {
  return SegmentFunction(domain, HermiteSpline::from_function(value, derivative, -domain.r, 0.0, pieces),
                         std::move(discrete));
}

double SegmentFunction::eval(double s) const {
  if (s >= -domain_.r && s <= 0.0) return continuum_.value(s);
  if (domain_.contains(s)) return discrete_[static_cast<std::size_t>(s) - 1];
  std::ostringstream os;
  os << "eval: s=" << s << " is not a point of K";
  throw DomainError(os.str());
}

double SegmentFunction::derivative(double s, Side side) const {
  if (!(s >= -domain_.r && s <= 0.0)) throw DomainError("derivative: s outside [-r, 0]");
  return continuum_.derivative(s, side);
}

double eval(const SegmentFunction& seg, double s) { return seg.eval(s); }

SignChangeCount SignChangeCount::finite(int n) {
  if (n < 0) throw DomainError("SignChangeCount: negative count");
  return SignChangeCount(n);
}

SignChangeCount SignChangeCount::unresolved() { return SignChangeCount(-1); }

int SignChangeCount::value() const {
  if (!is_finite()) throw UndefinedValueError("sign change count is Unresolved");
  return value_;
}

std::string SignChangeCount::to_string() const {
  return is_finite() ? std::to_string(value_) : std::string("unresolved");
}

std::vector<double> continuum_samples(const HermiteSpline& spline, double a, double b, int refinement) {
  std::vector<double> out;
  refinement = std::max(refinement, 1);
  for (const auto& p : spline.pieces()) {
    const double l = std::max(p.lo, a);
    const double h = std::min(p.hi, b);
    if (h < l) continue;
    out.push_back(l);
    if (h > l) {
      for (int j = 1; j < refinement; ++j) out.push_back(l + (h - l) * j / refinement);
      for (double c : p.critical_points())
        if (c > l && c < h) out.push_back(c);
    }
    out.push_back(h);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SignChangeCount sign_changes(const SegmentFunction& seg, double a, const SignChangeOptions& opts) {
  const auto& dom = seg.domain();
  check_left_end(dom, a);
  const auto& sp = seg.continuum();
  const auto samples = continuum_samples(sp, a, 0.0, opts.refinement);

  int knots = 1;
  for (const auto& p : sp.pieces())
    if (p.hi > a) ++knots;
  const int cap = opts.cap.value_or(4 * knots);

  int count = 0;
  int last = 0;
  auto feed = [&](double v) {
    const int sg = sign_of(v, opts.zeta);
    if (sg == 0) return;
    if (last != 0 && sg != last) ++count;
    last = sg;
  };
  for (double s : samples) feed(sp.value(s));
  for (double v : seg.discrete_values()) feed(v);
  if (last == 0) throw UndefinedValueError("sign_changes: segment is identically zero on [a,0] ∪ {1..N}");
  if (count > cap) return SignChangeCount::unresolved();
  return SignChangeCount::finite(count);
}

LyapunovValue v_from_count(SignChangeCount count, int delta) {
  if (delta != 1 && delta != -1) throw DomainError("v_value: delta must be +1 or -1");
  if (!count.is_finite()) return {SignChangeCount::unresolved(), Parity::Undefined};
  const int k = count.value();
  const bool even = k % 2 == 0;
  int v = k;
  if (delta == 1 && !even) v = k + 1;
  if (delta == -1 && even) v = k + 1;
  return {SignChangeCount::finite(v), v % 2 == 0 ? Parity::Even : Parity::Odd};
}

LyapunovValue v_value(const SegmentFunction& seg, double a, int delta, const SignChangeOptions& opts) {
  if (delta != 1 && delta != -1) throw DomainError("v_value: delta must be +1 or -1");
  return v_from_count(sign_changes(seg, a, opts), delta);
}

std::vector<ContinuumZero> spline_zeros(const HermiteSpline& spline, double lo, double hi, double zeta,
                                        int refinement) {
  const auto samples = continuum_samples(spline, lo, hi, refinement);
  const std::size_t n = samples.size();
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) vals[i] = spline.value(samples[i]);

  auto slope_at = [&](double s) {
    return spline.derivative(s, s >= spline.hi() ? Side::Left : Side::Right);
  };

  struct Event {
    double pos;  // position in sample-index units (i or i+0.5)
    double s;
    double slope;
    double absval;
    bool root;
  };
  std::vector<Event> events;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(vals[i]) <= zeta)
      events.push_back({static_cast<double>(i), samples[i], slope_at(samples[i]), std::abs(vals[i]), false});
    if (i + 1 < n && vals[i] * vals[i + 1] < 0) {
      const double r = bisect_root(spline, samples[i], samples[i + 1]);
      events.push_back({i + 0.5, r, slope_at(r), 0.0, true});
    }
  }

  std::vector<ContinuumZero> out;
  std::size_t j = 0;
  while (j < events.size()) {
    std::size_t g = j;
    // merge events connected through samples that are all within zeta
    while (g + 1 < events.size()) {
      bool connected = true;
      for (auto i = static_cast<std::size_t>(std::floor(events[g].pos)) + 1;
           static_cast<double>(i) < events[g + 1].pos; ++i) {
        if (std::abs(vals[i]) > zeta) {
          connected = false;
          break;
        }
      }
      if (!connected) break;
      ++g;
    }
    const Event* rep = nullptr;
    for (std::size_t q = j; q <= g; ++q) {
      if (events[q].root) {
        rep = &events[q];
        break;
      }
    }
    if (rep == nullptr) {
      rep = &events[j];
      for (std::size_t q = j; q <= g; ++q)
        if (events[q].absval < rep->absval) rep = &events[q];
    }
    out.push_back({rep->s, rep->slope, std::abs(rep->slope) <= zeta});
    j = g + 1;
  }
  return out;
}

RegularityReport membership(const SegmentFunction& seg, double a, int delta, double zeta) {
  if (delta != 1 && delta != -1) throw DomainError("membership: delta must be +1 or -1");
  const auto& dom = seg.domain();
  check_left_end(dom, a);
  const int n = dom.n_coords;
  const auto& sp = seg.continuum();
  auto phi = [&](int i) { return seg.eval(static_cast<double>(i)); };  // i in {0..N}
  const double phi_a = sp.value(a);
  const double dphi_a = sp.derivative(a, Side::Right);
  const double phi_0 = sp.value(0.0);
  const double dphi_0 = sp.derivative(0.0, Side::Left);

  RegularityReport rep;
  if (is_zero(phi_0, zeta)) {
    // for N = 0 the successor of coordinate 0 is the delayed value φ(a),
    // which enters through the feedback sign
    rep.in_S0 = n >= 1 ? strictly_positive(dphi_0, phi(1), zeta)
                       : strictly_positive(delta * dphi_0, phi_a, zeta);
  }
  if (is_zero(phi_a, zeta)) rep.in_Sa = strictly_positive(-delta * phi(n), dphi_a, zeta);
  for (const auto& z : spline_zeros(sp, a, 0.0, zeta)) {
    if (z.flat) {
      rep.in_Sstar = false;
      break;
    }
  }
  if (n >= 1 && is_zero(phi(n), zeta)) rep.in_SN = strictly_positive(-delta * phi(n - 1), phi_a, zeta);
  for (int i = 1; i <= n - 1; ++i) {
    bool ok = true;
    if (is_zero(phi(i), zeta)) ok = strictly_positive(-phi(i - 1), phi(i + 1), zeta);
    rep.in_Si.push_back(ok);
  }
  rep.in_R = rep.in_S0 && rep.in_Sa && rep.in_Sstar && rep.in_SN &&
             std::all_of(rep.in_Si.begin(), rep.in_Si.end(), [](bool b) { return b; });
  return rep;
}

ThetaWitnesses select_thetas(const SegmentFunction& seg, double a, const SignChangeOptions& opts) {
  const auto count = sign_changes(seg, a, opts);
  if (!count.is_finite()) throw UndefinedValueError("select_thetas: sign change count is Unresolved");
  const auto& dom = seg.domain();
  const auto& sp = seg.continuum();
  const double zeta = opts.zeta;

  ThetaWitnesses w;
  int cur = 0;
  for (int i = dom.n_coords; i >= 0; --i) {
    const int sg = sign_of(seg.eval(static_cast<double>(i)), zeta);
    if (sg == 0) continue;
    if (cur == 0) {
      w.points.push_back(i);
      cur = sg;
    } else if (sg != cur) {
      w.points.push_back(i);
      cur = sg;
      ++w.n;
    }
  }
  auto samples = continuum_samples(sp, a, 0.0, opts.refinement);
  for (auto it = samples.rbegin(); it != samples.rend(); ++it) {
    const double s = *it;
    if (s >= 0.0 && cur != 0) continue;  // the origin was handled with the discrete part
    const int sg = sign_of(sp.value(s), zeta);
    if (sg == 0) continue;
    if (cur == 0 || sg != cur) {
      w.points.push_back(s);
      cur = sg;
    }
  }
  w.k = static_cast<int>(w.points.size()) - 1;
  return w;
}

}  // namespace ddelyap
