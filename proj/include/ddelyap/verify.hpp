#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ddelyap/integrator.hpp"
#include "ddelyap/segments.hpp"
#include "ddelyap/systems.hpp"

namespace ddelyap {

/// V(x_t, -τ(t)) and companions at one sample time.
struct LyapunovRecord {
  double t = 0.0;
  double tau = 0.0;
  /// Absent when the segment is identically zero.
  std::optional<SignChangeCount> sc;
  std::optional<LyapunovValue> v;
  bool parity_ok = true;
  bool in_R = false;
  std::optional<int> double_zero;
  double error_estimate = 0.0;
  /// V with the zero threshold widened by the error estimate; used to tell
  /// a genuine increase from a tie within tolerance. Not serialized.
  std::optional<int> v_robust;

  bool zero_segment() const { return !sc.has_value(); }
  bool finite() const { return v && v->value.is_finite(); }
  int v_int() const { return v->value.value(); }
};

struct TrackOptions {
  double zeta = kDefaultZeta;
  /// Multiple of the error estimate added to zeta for v_robust.
  double robust_factor = 10.0;
  SignChangeOptions sign;  // zeta is overridden
};

/// One record per sample time: x_t, a = -τ(t), sc, V, membership and the double-zero flag.
std::vector<LyapunovRecord> lyapunov_track(const Trajectory& traj, std::span<const double> sample_times,
                                           const TrackOptions& opts = {});

/// Accepted step endpoints in [lo, hi], evenly thinned to at most max_count.
std::vector<double> default_sample_times(const Trajectory& traj, double lo, double hi, std::size_t max_count = 2000);

// Reports -------------------------------------------------------------------

enum class AuditStatus { Pass, Fail, Inconclusive, Vacuous };
std::string to_string(AuditStatus s);
std::optional<AuditStatus> audit_status_from_string(const std::string& s);

using MetaValue = std::variant<bool, std::int64_t, double, std::string>;

struct Counterexample {
  std::vector<double> times;
  std::vector<double> values;
  std::string note;
  friend bool operator==(const Counterexample&, const Counterexample&) = default;
};

struct AuditReport {
  std::string audit;
  AuditStatus status = AuditStatus::Vacuous;
  std::vector<Counterexample> counterexamples;
  std::map<std::string, MetaValue> metadata;

  /// Pass or vacuous.
  bool pass() const { return status == AuditStatus::Pass || status == AuditStatus::Vacuous; }
  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

// Audits --------------------------------------------------------------------

struct AuditOptions {
  double zeta = kDefaultZeta;
  /// Integrator tolerance of the run (for residual bounds and metadata).
  double integrator_tol = 1e-8;
  /// Multiple of the error estimate within which comparisons count as ties.
  double robust_factor = 10.0;
  DelaySolveOptions delay;
};

/// V nonincreasing over finite records; Unresolved records are gaps, ties
/// within tolerance pass.
AuditReport audit_monotonicity(std::span<const LyapunovRecord> records);

/// Every finite V has the parity of delta.
AuditReport audit_parity(std::span<const LyapunovRecord> records, int delta);

/// V(x_{η²(t)}) > V(x_t) at every detected double zero t with coverage of η²(t).
AuditReport audit_drop(const Trajectory& traj, const AuditOptions& opts = {},
                       std::optional<Interval> window = std::nullopt);

/// x_t ∈ R_{-τ(t)} at every record with V(η³(t)) = V(t).
AuditReport audit_regularize(const Trajectory& traj, std::span<const LyapunovRecord> records,
                             const AuditOptions& opts = {});

struct PerturbedSegment {
  SegmentFunction seg;
  double a;
};

/// Lower semicontinuity of V along a convergent family, and continuity when
/// the limit is in R_a. The tail is the second half of the family.
AuditReport audit_semicontinuity(const SegmentFunction& seg, double a, int delta,
                                 std::span<const PerturbedSegment> family, double zeta = kDefaultZeta);

/// No Unresolved counts in the window and no clustering of zeros below the
/// step-size floor; clusters are checked for the all-components-vanish
/// condition. Attaches the linear-bound and η-Lipschitz certificates.
AuditReport audit_finiteness(const Trajectory& traj, const CyclicSystem& sys, std::span<const LyapunovRecord> records,
                             Interval window, const AuditOptions& opts = {});

/// Residual of the linear system for y at knots and step midpoints, sign
/// agreement and V(x_t) = V(y_t) at `samples` evenly spaced times, R
/// transfer and c-positivity.
AuditReport audit_transform(const CyclicSystem& sys, const Trajectory& traj, const AuditOptions& opts = {},
                            int samples = 100, double residual_factor = 50.0);

/// Delay invariants along the run: 0 < τ <= r, η strictly increasing, and
/// the class-specific solver checks (threshold integral residual and η^k
/// Lipschitz bound; implicit fixed point versus bisection and the τ
/// Lipschitz bounds; L0 cross-check).
AuditReport audit_delay(const Trajectory& traj, const AuditOptions& opts = {});

/// τ by bisection on g(τ) = τ - R(state, x^0(t - τ), t) over (0, r].
double implicit_bisection_oracle(const ImplicitDelay& model, std::span<const double> state, const History& history,
                                 double t, double tol = 1e-14);

// Serialization -----------------------------------------------------------

/// Lyapunov CSV `t,tau,sc,V,parity_ok,in_R,double_zero_index,error_estimate`.
void write_lyapunov_csv(std::ostream& os, std::span<const LyapunovRecord> records);
std::vector<LyapunovRecord> read_lyapunov_csv(std::istream& is);
/// Equality on the serialized fields.
bool same_serialized(const LyapunovRecord& a, const LyapunovRecord& b);

std::string audit_to_json(const AuditReport& report, int indent = 2);
AuditReport audit_from_json(const std::string& text);
/// Reports sorted by name, as a JSON array.
std::string audits_to_json(std::vector<AuditReport> reports, int indent = 2);
std::vector<AuditReport> audits_from_json(const std::string& text);

}  // namespace ddelyap
