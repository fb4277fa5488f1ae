#include "ddelyap/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ddelyap/errors.hpp"
#include "ddelyap/quadrature.hpp"
#include "ddelyap/transform.hpp"

namespace ddelyap {

namespace {

double time_slack(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

std::int64_t as_int(std::size_t n) { return static_cast<std::int64_t>(n); }

AuditStatus combine(bool any_fail, bool any_inconclusive, std::size_t checked) {
  if (any_fail) return AuditStatus::Fail;
  if (any_inconclusive) return AuditStatus::Inconclusive;
  return checked > 0 ? AuditStatus::Pass : AuditStatus::Vacuous;
}

// V(x_t, -τ(t)) or nullopt when zero or Unresolved.
std::optional<int> v_at(const Trajectory& traj, double t, double zeta) {
  const auto seg = segment_at(traj, t);
  const double a = -traj.delay_at(t).tau;
  try {
    SignChangeOptions so;
    so.zeta = zeta;
    const auto v = v_value(seg, a, traj.delta(), so);
    if (!v.value.is_finite()) return std::nullopt;
    return v.value.value();
  } catch (const UndefinedValueError&) {
    return std::nullopt;
  }
}

}  // namespace

// Track ---------------------------------------------------------------------

std::vector<LyapunovRecord> lyapunov_track(const Trajectory& traj, std::span<const double> sample_times,
                                           const TrackOptions& opts) {
  std::vector<LyapunovRecord> out;
  out.reserve(sample_times.size());
  const int n = traj.n_coords();
  const int delta = traj.delta();
  for (double t : sample_times) {
    LyapunovRecord rec;
    rec.t = t;
    const auto d = traj.delay_at(t);
    rec.tau = d.tau;
    const auto seg = segment_at(traj, t);
    const double a = std::max(-d.tau, -seg.domain().r);
    rec.error_estimate = traj.error_estimate(t);
    SignChangeOptions so = opts.sign;
    so.zeta = opts.zeta;
    try {
      rec.sc = sign_changes(seg, a, so);
    } catch (const UndefinedValueError&) {
    }
    if (rec.sc) {
      rec.v = v_from_count(*rec.sc, delta);
      if (rec.v->value.is_finite()) rec.parity_ok = (rec.v->value.value() % 2 == 0) == (delta == 1);
      rec.in_R = membership(seg, a, delta, opts.zeta).in_R;
      SignChangeOptions robust = so;
      robust.zeta = opts.zeta + opts.robust_factor * rec.error_estimate;
      try {
        const auto sc2 = sign_changes(seg, a, robust);
        if (sc2.is_finite()) rec.v_robust = v_from_count(sc2, delta).value.value();
      } catch (const UndefinedValueError&) {
      }
    }
    for (int i = 0; i <= n; ++i) {
      const double xi = i == 0 ? seg.eval(0.0) : seg.eval(i);
      const double xn = i < n ? seg.eval(i + 1) : seg.eval(a);
      if (std::abs(xi) <= opts.zeta && std::abs(xn) <= opts.zeta) {
        rec.double_zero = i;
        break;
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<double> default_sample_times(const Trajectory& traj, double lo, double hi, std::size_t max_count) {
  std::vector<double> ts;
  for (double k : traj.knots())
    if (k >= lo - time_slack(lo) && k <= hi + time_slack(hi)) ts.push_back(k);
  if (ts.size() <= max_count || max_count < 2) return ts;
  std::vector<double> out;
  out.reserve(max_count);
  const double step = static_cast<double>(ts.size() - 1) / static_cast<double>(max_count - 1);
  for (std::size_t j = 0; j < max_count; ++j) {
    const auto k = static_cast<std::size_t>(std::llround(step * static_cast<double>(j)));
    if (out.empty() || ts[k] != out.back()) out.push_back(ts[k]);
  }
  return out;
}

std::string to_string(AuditStatus s) {
  switch (s) {
    case AuditStatus::Pass: return "pass";
    case AuditStatus::Fail: return "fail";
    case AuditStatus::Inconclusive: return "inconclusive";
    case AuditStatus::Vacuous: return "vacuous";
  }
  return "unknown";
}

std::optional<AuditStatus> audit_status_from_string(const std::string& s) {
  if (s == "pass") return AuditStatus::Pass;
  if (s == "fail") return AuditStatus::Fail;
  if (s == "inconclusive") return AuditStatus::Inconclusive;
  if (s == "vacuous") return AuditStatus::Vacuous;
  return std::nullopt;
}

// Monotonicity and parity ------------------------------------------------------

AuditReport audit_monotonicity(std::span<const LyapunovRecord> records) {
  AuditReport rep;
  rep.audit = "monotonicity";
  std::size_t checked = 0, gaps = 0, ties = 0, zero = 0;
  const LyapunovRecord* prev = nullptr;
  for (const auto& rec : records) {
    if (rec.zero_segment()) {
      ++zero;
      continue;
    }
    if (!rec.finite()) {
      ++gaps;
      prev = nullptr;
      continue;
    }
    if (prev != nullptr) {
      ++checked;
      if (rec.v_int() > prev->v_int()) {
        if (rec.v_robust && *rec.v_robust <= prev->v_int()) {
          ++ties;
          continue;  // keep prev as the reference
        }
        rep.counterexamples.push_back(
            {{prev->t, rec.t}, {double(prev->v_int()), double(rec.v_int())}, "V increased"});
      }
    }
    prev = &rec;
  }
  rep.status = combine(!rep.counterexamples.empty(), false, checked);
  rep.metadata["records"] = as_int(records.size());
  rep.metadata["pairs_checked"] = as_int(checked);
  rep.metadata["unresolved_gaps"] = as_int(gaps);
  rep.metadata["ties_within_tolerance"] = as_int(ties);
  rep.metadata["zero_segments"] = as_int(zero);
  return rep;
}

AuditReport audit_parity(std::span<const LyapunovRecord> records, int delta) {
  AuditReport rep;
  rep.audit = "parity";
  std::size_t checked = 0;
  for (const auto& rec : records) {
    if (!rec.finite()) continue;
    ++checked;
    const bool even = rec.v_int() % 2 == 0;
    if (even != (delta == 1))
      rep.counterexamples.push_back({{rec.t}, {double(rec.v_int())}, "parity contradicts delta"});
  }
  rep.status = combine(!rep.counterexamples.empty(), false, checked);
  rep.metadata["delta"] = std::int64_t{delta};
  rep.metadata["finite_records"] = as_int(checked);
  return rep;
}

// Drop -------------------------------------------------------------------------

AuditReport audit_drop(const Trajectory& traj, const AuditOptions& opts, std::optional<Interval> window) {
  AuditReport rep;
  rep.audit = "drop";
  const Interval w = window.value_or(Interval{traj.t0(), traj.t_end()});
  const auto events = detect_double_zero(traj, w, opts.zeta);
  std::size_t checked = 0, gaps = 0, inconclusive = 0;
  int min_drop = std::numeric_limits<int>::max();
  for (const auto& ev : events) {
    double eta2 = 0.0;
    std::optional<int> v_t, v_2;
    try {
      eta2 = iterate_eta(traj.model(), ev.t, 2, traj, opts.delay);
      v_t = v_at(traj, ev.t, opts.zeta);
      v_2 = v_at(traj, eta2, opts.zeta);
    } catch (const CoverageError&) {
      ++gaps;
      continue;
    }
    if (!v_t || !v_2) {
      ++gaps;
      continue;
    }
    ++checked;
    min_drop = std::min(min_drop, *v_2 - *v_t);
    if (*v_2 > *v_t) continue;
    const double err = traj.error_estimate(ev.t);
    const double zr = opts.zeta + opts.robust_factor * err;
    const auto r_t = v_at(traj, ev.t, zr);
    const auto r_2 = v_at(traj, eta2, zr);
    if (!r_t || !r_2 || *r_2 != *v_2 || *r_t != *v_t) {
      ++inconclusive;  // tie within tolerance for a strict claim
      continue;
    }
    std::ostringstream note;
    note << "no strict drop at double zero of index " << ev.index;
    rep.counterexamples.push_back({{eta2, ev.t}, {double(*v_2), double(*v_t)}, note.str()});
  }
  rep.status = combine(!rep.counterexamples.empty(), inconclusive > 0, checked);
  rep.metadata["events_detected"] = as_int(events.size());
  rep.metadata["events_checked"] = as_int(checked);
  rep.metadata["coverage_gaps"] = as_int(gaps);
  rep.metadata["ties_within_tolerance"] = as_int(inconclusive);
  if (checked > 0) rep.metadata["min_drop"] = std::int64_t{min_drop};
  rep.metadata["window_lo"] = w.lo;
  rep.metadata["window_hi"] = w.hi;
  rep.metadata["zeta"] = opts.zeta;
  rep.metadata["scope"] = std::string("finite V at both times only; the infinite branch is not finitely checkable");
  return rep;
}

// Regularization --------------------------------------------------------------------

AuditReport audit_regularize(const Trajectory& traj, std::span<const LyapunovRecord> records, const AuditOptions& opts) {
  AuditReport rep;
  rep.audit = "regularize";
  std::size_t audited = 0, gaps = 0, skipped = 0;
  for (const auto& rec : records) {
    if (!rec.finite()) continue;
    std::optional<int> v3;
    double eta3 = 0.0;
    try {
      eta3 = iterate_eta(traj.model(), rec.t, 3, traj, opts.delay);
      v3 = v_at(traj, eta3, opts.zeta);
    } catch (const CoverageError&) {
      ++gaps;
      continue;
    }
    if (!v3) {
      ++gaps;
      continue;
    }
    if (*v3 != rec.v_int()) {
      ++skipped;
      continue;
    }
    ++audited;
    if (!rec.in_R) {
      const auto seg = segment_at(traj, rec.t);
      const auto m = membership(seg, -rec.tau, traj.delta(), opts.zeta);
      std::ostringstream note;
      note << "x_t not in R with V constant on [eta^3(t), t]; failed:";
      if (!m.in_S0) note << " S0";
      if (!m.in_Sa) note << " Sa";
      if (!m.in_Sstar) note << " S*";
      if (!m.in_SN) note << " SN";
      for (std::size_t i = 0; i < m.in_Si.size(); ++i)
        if (!m.in_Si[i]) note << " S" << i + 1;
      rep.counterexamples.push_back({{eta3, rec.t}, {double(*v3), double(rec.v_int())}, note.str()});
    }
  }
  rep.status = combine(!rep.counterexamples.empty(), false, audited);
  rep.metadata["audited"] = as_int(audited);
  rep.metadata["coverage_gaps"] = as_int(gaps);
  rep.metadata["precondition_not_met"] = as_int(skipped);
  rep.metadata["zeta"] = opts.zeta;
  return rep;
}

// Semicontinuity ----------------------------------------------------------------

AuditReport audit_semicontinuity(const SegmentFunction& seg, double a, int delta,
                                 std::span<const PerturbedSegment> family, double zeta) {
  AuditReport rep;
  rep.audit = "semicontinuity";
  SignChangeOptions so;
  so.zeta = zeta;
  std::optional<int> v0;
  try {
    const auto v = v_value(seg, a, delta, so);
    if (v.value.is_finite()) v0 = v.value.value();
  } catch (const UndefinedValueError&) {
  }
  if (!v0 || family.empty()) {
    rep.status = AuditStatus::Vacuous;
    rep.metadata["note"] = std::string(v0 ? "empty family" : "limit value undefined or unresolved");
    return rep;
  }
  const bool in_R = membership(seg, a, delta, zeta).in_R;
  std::size_t checked = 0, gaps = 0;
  const std::size_t start = family.size() / 2;
  for (std::size_t k = start; k < family.size(); ++k) {
    std::optional<int> vk;
    try {
      const auto v = v_value(family[k].seg, family[k].a, delta, so);
      if (v.value.is_finite()) vk = v.value.value();
    } catch (const UndefinedValueError&) {
    }
    if (!vk) {
      ++gaps;
      continue;
    }
    ++checked;
    if (*vk < *v0) {
      rep.counterexamples.push_back({{double(k)}, {double(*v0), double(*vk)}, "V dropped in the limit direction"});
    } else if (in_R && *vk != *v0) {
      rep.counterexamples.push_back({{double(k)}, {double(*v0), double(*vk)}, "V not continuous at a point of R"});
    }
  }
  rep.status = combine(!rep.counterexamples.empty(), false, checked);
  rep.metadata["limit_V"] = std::int64_t{*v0};
  rep.metadata["limit_in_R"] = in_R;
  rep.metadata["branch"] = std::string(in_R ? "continuity" : "lower semicontinuity");
  rep.metadata["tail_checked"] = as_int(checked);
  rep.metadata["unresolved_gaps"] = as_int(gaps);
  return rep;
}

// Finiteness ----------------------------------------------------------------------

AuditReport audit_finiteness(const Trajectory& traj, const CyclicSystem& sys, std::span<const LyapunovRecord> records,
                             Interval window, const AuditOptions& opts) {
  AuditReport rep;
  rep.audit = "finiteness";
  rep.metadata["window_lo"] = window.lo;
  rep.metadata["window_hi"] = window.hi;
  std::size_t in_window = 0, nonzero = 0, unresolved = 0;
  for (const auto& rec : records) {
    if (rec.t < window.lo - time_slack(window.lo) || rec.t > window.hi + time_slack(window.hi)) continue;
    ++in_window;
    if (rec.zero_segment()) continue;
    ++nonzero;
    if (!rec.finite()) {
      ++unresolved;
      rep.counterexamples.push_back({{rec.t}, {}, "resolution gap: sign changes exceed the cap"});
    }
  }
  rep.metadata["records"] = as_int(in_window);
  rep.metadata["unresolved"] = as_int(unresolved);
  if (nonzero == 0) {
    rep.status = AuditStatus::Vacuous;
    rep.metadata["note"] = std::string("not applicable: trajectory is zero on the window");
    return rep;
  }

  // zero clustering: three consecutive zeros of one component inside one step
  const auto knots = traj.knots();
  auto local_step = [&](double t) {
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    if (it == knots.begin() || it == knots.end()) return traj.step_log().empty() ? 0.0 : traj.step_log().back().h;
    return *it - *(it - 1);
  };
  double min_gap = std::numeric_limits<double>::infinity();
  std::size_t clusters = 0, artifacts = 0;
  const double lo = std::max(window.lo, traj.t0());
  for (int i = 0; i <= traj.n_coords() && window.hi > lo; ++i) {
    const auto zs = zeros_of_component(traj, i, {lo, window.hi}, opts.zeta);
    for (std::size_t k = 0; k + 1 < zs.size(); ++k) min_gap = std::min(min_gap, zs[k + 1].t - zs[k].t);
    for (std::size_t k = 0; k + 2 < zs.size(); ++k) {
      const double span = zs[k + 2].t - zs[k].t;
      if (span >= local_step(zs[k + 1].t)) continue;
      ++clusters;
      const double sigma = zs[k + 1].t;
      const double zr = opts.zeta + opts.robust_factor * traj.error_estimate(sigma);
      double worst = 0.0;
      for (int j = 0; j <= traj.n_coords(); ++j) worst = std::max(worst, std::abs(traj.value(j, sigma)));
      const bool vanish = worst <= zr;
      if (!vanish) ++artifacts;
      std::ostringstream note;
      note << "zeros of x^" << i << " cluster below the step size; "
           << (vanish ? "all components vanish (suspected oscillation point)"
                      : "a component does not vanish: resolution artifact");
      rep.counterexamples.push_back({{zs[k].t, sigma, zs[k + 2].t}, {worst}, note.str()});
      k += 2;
    }
  }
  rep.metadata["min_zero_gap"] = std::isfinite(min_gap) ? min_gap : -1.0;
  rep.metadata["zero_clusters"] = as_int(clusters);
  rep.metadata["resolution_artifacts"] = as_int(artifacts);

  // certificates
  try {
    Box box{0.0, 0.0, 0.0, 0.0};
    std::vector<double> ts;
    for (double t : default_sample_times(traj, lo, window.hi, 9)) {
      ts.push_back(t);
      for (int j = 0; j <= traj.n_coords(); ++j) {
        const double v = traj.value(j, t);
        box.u_lo = std::min(box.u_lo, v);
        box.u_hi = std::max(box.u_hi, v);
      }
    }
    box.v_lo = box.u_lo;
    box.v_hi = box.u_hi;
    if (box.u_hi > box.u_lo && !ts.empty()) rep.metadata["linear_bound_C"] = check_linear_bound(sys, box, ts, 21, opts.zeta);
  } catch (const Error& e) {
    rep.metadata["linear_bound_C"] = std::string("unavailable: ") + e.what();
  }
  {
    const double r = traj.r();
    std::vector<double> grid;
    const double glo = std::max(window.lo, traj.t0() + 6.0 * r);
    if (window.hi > glo)
      for (int k = 0; k <= 40; ++k) grid.push_back(glo + (window.hi - glo) * k / 40.0);
    int kmax = 5;
    if (grid.size() >= 2) {
      for (; kmax >= 1; --kmax) {
        try {
          rep.metadata["eta_lipschitz_estimate"] = estimate_eta_lipschitz(traj.model(), grid, kmax, traj, opts.delay);
          rep.metadata["eta_lipschitz_k_max"] = std::int64_t{kmax};
          break;
        } catch (const CoverageError&) {
        }
      }
    }
  }
  rep.metadata["scope"] = std::string("finite window only; entire-solution hypotheses are not finitely checkable");
  rep.status = unresolved > 0 || clusters > 0 ? AuditStatus::Inconclusive : AuditStatus::Pass;
  return rep;
}

// Transform -------------------------------------------------------------------------

AuditReport audit_transform(const CyclicSystem& sys, const Trajectory& traj, const AuditOptions& opts, int samples,
                            double residual_factor) {
  AuditReport rep;
  rep.audit = "transform";
  const double bound = residual_factor * opts.integrator_tol;
  rep.metadata["residual_bound"] = bound;
  std::size_t checked = 0;
  try {
    const auto y = to_y(sys, traj);
    std::vector<double> grid;
    const auto knots = traj.knots();
    for (std::size_t k = 0; k < knots.size(); ++k) {
      grid.push_back(knots[k]);
      if (k + 1 < knots.size()) grid.push_back(0.5 * (knots[k] + knots[k + 1]));
    }
    const auto res = residual_linear_system(y, grid);
    checked += res.checked;
    rep.metadata["residual_max"] = res.max_relative_residual;
    rep.metadata["residual_max_x_units"] = res.max_scaled_residual;
    rep.metadata["residual_max_unscaled"] = res.max_residual;
    rep.metadata["residual_points"] = as_int(res.checked);
    rep.metadata["residual_skipped"] = as_int(res.skipped);
    if (res.max_relative_residual > bound) {
      std::ostringstream note;
      note << "y residual of component " << res.index_at_max << " exceeds " << bound;
      rep.counterexamples.push_back({{res.t_at_max}, {res.max_relative_residual}, note.str()});
    }

    const double r = traj.r();
    const double lo = traj.t0() + r;
    std::size_t sign_checks = 0, v_checks = 0, r_checks = 0;
    double b_dev = 0.0;
    if (traj.t_end() > lo && samples > 0) {
      for (int k = 0; k < samples; ++k) {
        const double t = samples == 1 ? traj.t_end() : lo + (traj.t_end() - lo) * k / (samples - 1);
        const auto xs = segment_at(traj, t);
        const auto ys = y_segment_at(y, t);
        ++sign_checks;
        if (!sign_agreement(xs, ys, opts.zeta))
          rep.counterexamples.push_back({{t}, {}, "sign of x_t and y_t disagree"});
        const double a = -traj.delay_at(t).tau;
        SignChangeOptions so;
        so.zeta = opts.zeta;
        std::optional<LyapunovValue> vx, vy;
        try {
          vx = v_value(xs, a, traj.delta(), so);
        } catch (const UndefinedValueError&) {
        }
        try {
          vy = v_value(ys, a, traj.delta(), so);
        } catch (const UndefinedValueError&) {
        }
        ++v_checks;
        if (vx.has_value() != vy.has_value() || (vx && !(*vx == *vy))) {
          rep.counterexamples.push_back({{t},
                                         {vx && vx->value.is_finite() ? double(vx->value.value()) : -1.0,
                                          vy && vy->value.is_finite() ? double(vy->value.value()) : -1.0},
                                         "V(x_t) != V(y_t)"});
        }
        if (vx) {
          ++r_checks;
          if (membership(ys, a, traj.delta(), opts.zeta).in_R && !membership(xs, a, traj.delta(), opts.zeta).in_R)
            rep.counterexamples.push_back({{t}, {}, "y_t in R but x_t not in R"});
        }
        b_dev = std::max(b_dev, coefficients_at(sys, traj, t).b_closed_form_deviation);
      }
    }
    checked += sign_checks;
    rep.metadata["sign_checks"] = as_int(sign_checks);
    rep.metadata["v_checks"] = as_int(v_checks);
    rep.metadata["r_transfer_checks"] = as_int(r_checks);
    rep.metadata["b_closed_form_deviation"] = b_dev;
    rep.metadata["y_coverage_lo"] = y.coverage().lo;
    rep.metadata["y_coverage_hi"] = y.coverage().hi;
  } catch (const InvariantError& e) {
    rep.counterexamples.push_back({{}, {}, std::string("c-positivity: ") + e.what()});
  }
  rep.status = combine(!rep.counterexamples.empty(), false, checked);
  return rep;
}

// Delays ------------------------------------------------------------------------------

double implicit_bisection_oracle(const ImplicitDelay& model, std::span<const double> state, const History& history,
                                 double t, double tol) {
  auto g = [&](double tau) { return tau - model.R(state, history.x0(t - tau), t); };
  double lo = 0.0;
  double hi = model.r;
  if (g(hi) < 0.0) throw SolverError("bisection oracle: g(r) < 0");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

// x^0 on a fixed segment, re-anchored at time t_anchor and shifted by dv.
class ShiftedHistory : public History {
 public:
  ShiftedHistory(const History& base, double base_t, double anchor, double dv)
      : base_(base), base_t_(base_t), anchor_(anchor), dv_(dv) {}
  Interval coverage() const override {
    const auto c = base_.coverage();
    return {c.lo - base_t_ + anchor_, anchor_};
  }
  double x0(double t) const override { return base_.x0(t - anchor_ + base_t_) + dv_; }

 private:
  const History& base_;
  double base_t_, anchor_, dv_;
};

void audit_threshold(const Trajectory& traj, const ThresholdDelay& m, AuditReport& rep, std::size_t& checked) {
  double worst_resid = 0.0;
  bool bounds_ok = true;
  for (const auto& rec : traj.delay_log()) {
    // independent quadrature, split at the dense-output knots
    auto pts = traj.breakpoints(rec.eta, rec.t);
    pts.insert(pts.begin(), rec.eta);
    pts.push_back(rec.t);
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
      integral += adaptive_simpson([&](double s) { return m.a(traj.x0(s)); }, pts[k], pts[k + 1], 1e-14).value;
    const double resid = std::abs(integral - 1.0);
    worst_resid = std::max(worst_resid, resid);
    ++checked;
    if (resid > 1e-10) rep.counterexamples.push_back({{rec.t}, {resid}, "threshold integral residual above 1e-10"});
    if (rec.tau < (1.0 / m.a_max) * (1 - 1e-12) || rec.tau > (1.0 / m.a_min) * (1 + 1e-12)) {
      bounds_ok = false;
      rep.counterexamples.push_back({{rec.t}, {rec.tau}, "tau outside [1/a_max, 1/a_min]"});
    }
  }
  rep.metadata["threshold_max_residual"] = worst_resid;
  rep.metadata["threshold_tau_bounds_ok"] = bounds_ok;
  const double r = 1.0 / m.a_min;
  const double glo = traj.t0() + 5.0 * r;
  if (traj.t_end() > glo + r) {
    std::vector<double> grid;
    for (double t : default_sample_times(traj, glo, traj.t_end(), 200)) grid.push_back(t);
    if (grid.size() >= 2) {
      double worst = 0.0;
      for (int k = 1; k <= 5; ++k) {
        const double est = estimate_eta_lipschitz(traj.model(), grid, k, traj);
        worst = std::max(worst, est);
      }
      const double bound = m.a_max / m.a_min + 1e-6;
      rep.metadata["eta_k_lipschitz_estimate"] = worst;
      rep.metadata["eta_k_lipschitz_bound"] = bound;
      ++checked;
      if (worst > bound) rep.counterexamples.push_back({{}, {worst, bound}, "eta^k Lipschitz estimate above a_max/a_min"});
    }
  } else {
    rep.metadata["eta_k_lipschitz_estimate"] = std::string("run too short for k <= 5");
  }
}

void audit_implicit(const Trajectory& traj, const ImplicitDelay& m, const AuditOptions& opts, AuditReport& rep,
                    std::size_t& checked) {
  double worst_gap = 0.0;
  for (const auto& rec : traj.delay_log()) {
    const auto st = traj.state(rec.t);
    if (!st) continue;
    const double oracle = implicit_bisection_oracle(m, *st, traj, rec.t);
    const double gap = std::abs(oracle - rec.tau);
    worst_gap = std::max(worst_gap, gap);
    ++checked;
    if (gap > 1e-11) rep.counterexamples.push_back({{rec.t}, {rec.tau, oracle}, "fixed point and bisection oracle differ"});
  }
  rep.metadata["implicit_oracle_max_gap"] = worst_gap;

  const auto bounds = implicit_lipschitz_bounds(m);
  double lip_t = 0.0, lip_phi = 0.0;
  const auto ts = default_sample_times(traj, traj.t0(), traj.t_end(), 60);
  const double eps = 1e-5;
  const double dt = 1e-4;
  for (double t : ts) {
    const auto st = traj.state(t);
    if (!st) continue;
    const ShiftedHistory base(traj, t, t, 0.0);
    const double tau0 = solve_implicit(m, *st, base, t, opts.delay.implicit_tol).tau;
    // τ_1: time argument only, segment held fixed
    const ShiftedHistory moved(traj, t, t + dt, 0.0);
    const double tau_dt = solve_implicit(m, *st, moved, t + dt, opts.delay.implicit_tol).tau;
    lip_t = std::max(lip_t, std::abs(tau_dt - tau0) / dt);
    // τ_2: sup-norm perturbations of the segment (state and history)
    for (double sgn_state : {-1.0, 1.0}) {
      for (double sgn_hist : {-1.0, 1.0}) {
        std::vector<double> ps = *st;
        for (auto& v : ps) v += sgn_state * eps;
        const ShiftedHistory pert(traj, t, t, sgn_hist * eps);
        const double tp = solve_implicit(m, ps, pert, t, opts.delay.implicit_tol).tau;
        lip_phi = std::max(lip_phi, std::abs(tp - tau0) / eps);
      }
    }
  }
  rep.metadata["lip_tau_t_estimate"] = lip_t;
  rep.metadata["lip_tau_t_bound"] = bounds.tau_t;
  rep.metadata["lip_tau_phi_estimate"] = lip_phi;
  rep.metadata["lip_tau_phi_bound"] = bounds.tau_phi;
  rep.metadata["eta_increasing_factor"] = bounds.eta_increasing;
  checked += 2;
  if (lip_t > bounds.tau_t + 1e-6) rep.counterexamples.push_back({{}, {lip_t, bounds.tau_t}, "Lip tau_1 above bound"});
  if (lip_phi > bounds.tau_phi + 1e-6)
    rep.counterexamples.push_back({{}, {lip_phi, bounds.tau_phi}, "Lip tau_2 above bound"});

  // L0 cross-check on the computed x^0
  double lmax = 0.0;
  for (const auto& p : traj.initial_continuum().pieces())
    for (int q = 0; q <= 8; ++q) lmax = std::max(lmax, std::abs(p.derivative(p.lo + (p.hi - p.lo) * q / 8.0)));
  for (std::size_t k = 0; k < traj.knots().size(); ++k) lmax = std::max(lmax, std::abs(traj.knot_derivative(k, 0)));
  rep.metadata["empirical_L0"] = lmax;
  rep.metadata["L0"] = m.L0;
  rep.metadata["certified"] = lmax <= m.L0 * (1.0 + 1e-9);
}

}  // namespace

AuditReport audit_delay(const Trajectory& traj, const AuditOptions& opts) {
  AuditReport rep;
  rep.audit = "delay";
  const auto& model = traj.model();
  rep.metadata["model"] = model.kind();
  rep.metadata["r"] = model.r();
  std::size_t checked = 0;
  const auto log = traj.delay_log();
  for (const auto& rec : log) {
    ++checked;
    if (!(rec.tau > 0.0) || rec.tau > model.r() * (1 + 1e-12))
      rep.counterexamples.push_back({{rec.t}, {rec.tau}, "tau outside (0, r]"});
  }
  const auto mono = check_eta_monotone(log, &model);
  if (!mono.pass)
    rep.counterexamples.push_back({{mono.t1, mono.t2}, {mono.eta1, mono.eta2}, "eta not strictly increasing"});
  rep.metadata["records"] = as_int(log.size());
  if (const auto* th = std::get_if<ThresholdDelay>(&model.variant())) audit_threshold(traj, *th, rep, checked);
  if (const auto* im = std::get_if<ImplicitDelay>(&model.variant())) audit_implicit(traj, *im, opts, rep, checked);
  rep.status = combine(!rep.counterexamples.empty(), false, checked);
  return rep;
}

}  // namespace ddelyap
