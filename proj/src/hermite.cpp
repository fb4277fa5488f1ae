#include "ddelyap/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddelyap/errors.hpp"

namespace ddelyap {

double HermitePiece::value(double t) const {
  const double h = hi - lo;
  const double s = (t - lo) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * v0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * v1 +
         (s3 - s2) * h * d1;
}

double HermitePiece::derivative(double t) const {
  const double h = hi - lo;
  const double s = (t - lo) / h;
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * v0 + (-6 * s2 + 6 * s) * v1) / h + (3 * s2 - 4 * s + 1) * d0 +
         (3 * s2 - 2 * s) * d1;
}

std::vector<double> HermitePiece::critical_points() const {
  // derivative * h as a quadratic in the local coordinate s ∈ [0,1]
  const double h = hi - lo;
  const double a = 6 * v0 - 6 * v1 + 3 * h * (d0 + d1);
  const double b = -6 * v0 + 6 * v1 - h * (4 * d0 + 2 * d1);
  const double c = h * d0;
  std::vector<double> roots;
  const double scale = std::abs(a) + std::abs(b) + std::abs(c);
  if (scale == 0.0) return roots;
  if (std::abs(a) <= 1e-14 * scale) {
    if (std::abs(b) > 1e-14 * scale) roots.push_back(-c / b);
  } else {
    const double disc = b * b - 4 * a * c;
    if (disc >= 0) {
      const double sq = std::sqrt(disc);
      const double q = -0.5 * (b + std::copysign(sq, b));
      if (q != 0.0) {
        roots.push_back(q / a);
        roots.push_back(c / q);
      } else {
        roots.push_back(0.0);
      }
    }
  }
  std::vector<double> out;
  for (double s : roots) {
    if (s > 0.0 && s < 1.0) out.push_back(lo + s * h);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

HermitePiece HermitePiece::restricted(double a, double b) const {
  return HermitePiece{a, b, value(a), value(b), derivative(a), derivative(b)};
}

HermiteSpline::HermiteSpline(std::vector<HermitePiece> pieces) : pieces_(std::move(pieces)) {
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    if (!(pieces_[k].hi > pieces_[k].lo)) throw DomainError("HermiteSpline: empty piece");
    if (k > 0 && pieces_[k].lo != pieces_[k - 1].hi)
      throw DomainError("HermiteSpline: pieces are not contiguous");
  }
}

HermiteSpline HermiteSpline::from_function(const std::function<double(double)>& value,
                                           const std::function<double(double)>& derivative,
                                           double lo, double hi, int pieces) {
  if (pieces < 1 || !(hi > lo)) throw DomainError("HermiteSpline::from_function: bad interval");
  std::vector<double> knots(pieces + 1), values(pieces + 1), derivs(pieces + 1);
  for (int k = 0; k <= pieces; ++k) {
    knots[k] = k == pieces ? hi : lo + (hi - lo) * k / pieces;
    values[k] = value(knots[k]);
    derivs[k] = derivative(knots[k]);
  }
  return from_knots(knots, values, derivs);
}

HermiteSpline HermiteSpline::from_knots(std::span<const double> knots, std::span<const double> values,
                                        std::span<const double> derivatives) {
  if (knots.size() < 2 || values.size() != knots.size() || derivatives.size() != knots.size())
    throw DomainError("HermiteSpline::from_knots: inconsistent knot data");
  std::vector<HermitePiece> pieces;
  pieces.reserve(knots.size() - 1);
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    pieces.push_back({knots[k], knots[k + 1], values[k], values[k + 1], derivatives[k],
                      derivatives[k + 1]});
  }
  return HermiteSpline(std::move(pieces));
}

double HermiteSpline::lo() const {
  if (pieces_.empty()) throw DomainError("HermiteSpline: empty");
  return pieces_.front().lo;
}

double HermiteSpline::hi() const {
  if (pieces_.empty()) throw DomainError("HermiteSpline: empty");
  return pieces_.back().hi;
}

void HermiteSpline::check_in_range(double t) const {
  const double l = lo();
  const double h = hi();
  const double slack = 1e-12 * std::max({1.0, std::abs(l), std::abs(h)});
  if (!(t >= l - slack && t <= h + slack)) {
    std::ostringstream os;
    os << "HermiteSpline: t=" << t << " outside [" << l << ", " << h << "]";
    throw DomainError(os.str());
  }
}

std::size_t HermiteSpline::locate(double t, Side side) const {
  check_in_range(t);
  const auto n = pieces_.size();
  if (side == Side::Right) {
    // first piece with hi > t
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                               [](double x, const HermitePiece& p) { return x < p.hi; });
    return it == pieces_.end() ? n - 1 : static_cast<std::size_t>(it - pieces_.begin());
  }
  // first piece with hi >= t
  auto it = std::lower_bound(pieces_.begin(), pieces_.end(), t,
                             [](const HermitePiece& p, double x) { return p.hi < x; });
  if (it == pieces_.end()) return n - 1;
  auto k = static_cast<std::size_t>(it - pieces_.begin());
  if (k > 0 && t <= pieces_[k].lo) --k;
  return k;
}

double HermiteSpline::value(double t) const {
  const auto& p = pieces_[locate(t)];
  if (t <= p.lo) return p.v0;
  if (t >= p.hi) return p.v1;
  return p.value(t);
}

double HermiteSpline::derivative(double t, Side side) const {
  const auto& p = pieces_[locate(t, side)];
  if (t <= p.lo) return p.d0;
  if (t >= p.hi) return p.d1;
  return p.derivative(t);
}

HermiteSpline HermiteSpline::restricted(double a, double b) const {
  check_in_range(a);
  check_in_range(b);
  if (!(b > a)) throw DomainError("HermiteSpline::restricted: empty interval");
  std::vector<HermitePiece> out;
  for (const auto& p : pieces_) {
    const double l = std::max(p.lo, a);
    const double h = std::min(p.hi, b);
    if (h <= l) continue;
    if (l == p.lo && h == p.hi) {
      out.push_back(p);
    } else {
      HermitePiece q = p.restricted(l, h);
      // keep exact knot data where the cut coincides with a knot
      if (l == p.lo) { q.v0 = p.v0; q.d0 = p.d0; }
      if (h == p.hi) { q.v1 = p.v1; q.d1 = p.d1; }
      out.push_back(q);
    }
  }
  // guard against a and b snapped outside by the slack
  if (out.empty()) throw DomainError("HermiteSpline::restricted: empty result");
  if (out.front().lo != a) out.front() = out.front().restricted(a, out.front().hi);
  if (out.back().hi != b) out.back() = out.back().restricted(out.back().lo, b);
  return HermiteSpline(std::move(out));
}

HermiteSpline HermiteSpline::shifted(double offset) const {
  std::vector<HermitePiece> out(pieces_);
  for (auto& p : out) {
    p.lo -= offset;
    p.hi -= offset;
  }
  // keep the pieces contiguous after rounding
  for (std::size_t k = 1; k < out.size(); ++k) out[k].lo = out[k - 1].hi;
  return HermiteSpline(std::move(out));
}

}  // namespace ddelyap
