#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddelyap/hermite.hpp"

namespace ddelyap {

/// Default threshold below which a sample counts as zero for sign logic.
inline constexpr double kDefaultZeta = 1e-9;

/// The hybrid domain K = [-r, 0] ∪ {1, ..., N}.
struct DomainK {
  double r = 1.0;
  int n_coords = 0;

  DomainK() = default;
  DomainK(double r_, int n_coords_);

  bool contains(double s) const;
};

/// An element of C_K: a C^1 piecewise-cubic continuum part on [-r, 0] and
/// the N discrete coordinate values. Points of K are plain reals: s ∈ [-r,0]
/// addresses the continuum part, an integer s ∈ {1..N} a coordinate.
class SegmentFunction {
 public:
  SegmentFunction(DomainK domain, HermiteSpline continuum, std::vector<double> discrete);

  /// Samples a closed-form C^1 function onto `pieces` Hermite pieces.
  static SegmentFunction from_function(DomainK domain, const std::function<double(double)>& value,
                                       const std::function<double(double)>& derivative,
                                       std::vector<double> discrete, int pieces = 256);

  const DomainK& domain() const noexcept { return domain_; }
  const HermiteSpline& continuum() const noexcept { return continuum_; }
  std::span<const double> discrete_values() const noexcept { return discrete_; }

  /// φ(s) for s ∈ K; DomainError otherwise.
  double eval(double s) const;
  /// One-sided derivative of the continuum part at s ∈ [-r, 0].
  double derivative(double s, Side side = Side::Right) const;

 private:
  DomainK domain_;
  HermiteSpline continuum_;
  std::vector<double> discrete_;
};

double eval(const SegmentFunction& seg, double s);

/// Either a nonnegative count or Unresolved (the count exceeded the
/// resolution cap). Reading value() of an Unresolved count throws.
class SignChangeCount {
 public:
  static SignChangeCount finite(int n);
  static SignChangeCount unresolved();

  bool is_finite() const noexcept { return value_ >= 0; }
  int value() const;
  std::string to_string() const;

  friend bool operator==(const SignChangeCount&, const SignChangeCount&) = default;

 private:
  explicit SignChangeCount(int v) : value_(v) {}
  int value_ = 0;
};

enum class Parity { Even, Odd, Undefined };

struct LyapunovValue {
  SignChangeCount value = SignChangeCount::finite(0);
  Parity parity = Parity::Undefined;

  friend bool operator==(const LyapunovValue&, const LyapunovValue&) = default;
};

struct SignChangeOptions {
  double zeta = kDefaultZeta;
  /// Equal sub-samples per Hermite piece on top of knots and critical points.
  int refinement = 16;
  /// Counts above the cap are reported Unresolved. Defaults to four times
  /// the number of continuum knots inside [a, 0].
  std::optional<int> cap;
};

/// Number of sign changes of φ on [a, 0] ∪ {1..N}. Throws DomainError for
/// a ∉ [-r, 0) and UndefinedValueError when φ is within ζ of zero on the set.
SignChangeCount sign_changes(const SegmentFunction& seg, double a, const SignChangeOptions& opts = {});

/// V^+ (delta = +1) or V^- (delta = -1): the count rounded up to the next
/// even or odd integer.
LyapunovValue v_from_count(SignChangeCount count, int delta);
LyapunovValue v_value(const SegmentFunction& seg, double a, int delta,
                      const SignChangeOptions& opts = {});

/// Membership flags for the regularity sets at left end a.
struct RegularityReport {
  bool in_S0 = true;
  bool in_Sa = true;
  bool in_Sstar = true;
  bool in_SN = true;         // always true for N = 0 (set not defined)
  std::vector<bool> in_Si;   // entry i-1 holds S^i, 1 <= i <= N-1
  bool in_R = true;
};

RegularityReport membership(const SegmentFunction& seg, double a, int delta,
                            double zeta = kDefaultZeta);

/// A zero of the continuum part, with the slope used to classify it.
struct ContinuumZero {
  double s = 0.0;
  double slope = 0.0;
  bool flat = false;
};

/// All zeros of a Hermite spline on [lo, hi]: sign-change roots refined by
/// bisection, plus knots, critical points and sub-samples with |value| <= zeta
/// (touching zeros). Zeros with |slope| <= zeta are flagged flat.
std::vector<ContinuumZero> spline_zeros(const HermiteSpline& spline, double lo, double hi,
                                        double zeta = kDefaultZeta, int refinement = 4);

/// Witnesses θ_0 > θ_1 > ... > θ_k of the sign changes, chosen greedily from
/// the top of K: the discrete part {0..N} first, then the continuum.
struct ThetaWitnesses {
  std::vector<double> points;  // θ_0, θ_1, ..., θ_k (descending)
  int k = 0;                   // number of sign changes
  int n = 0;                   // sign changes realised on {0..N}
};

ThetaWitnesses select_thetas(const SegmentFunction& seg, double a, const SignChangeOptions& opts = {});

/// Sorted sample points of the continuum on [a, 0] used by the sign logic:
/// knots, critical points of each piece and `refinement` equal sub-samples.
std::vector<double> continuum_samples(const HermiteSpline& spline, double a, double b, int refinement);

}  // namespace ddelyap
