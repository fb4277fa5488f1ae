#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ddelyap/scenario.hpp"

namespace ddelyap::acceptance {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  /// Criteria to run; empty means all.
  std::vector<int> only;
  std::uint64_t seed = 20240611;
  int random_scenarios = 64;
  int random_segments = 1000;
  /// Progress messages, one line each.
  std::function<void(const std::string&)> progress;
};

/// Runs the acceptance criteria, printing one line per criterion to `out`.
std::vector<CriterionResult> run_acceptance(const Options& opts, std::ostream& out);

/// Randomized scenario k of the parity/monotonicity corpus: N = k mod 4,
/// delay model cycling through all four classes, both feedback signs.
Scenario random_scenario(int k, std::uint64_t seed);

/// Dense-grid sign-change counter: 10^4 equally spaced samples on [a, 0]
/// plus the interior extrema of every grid cell, then the discrete part.
int brute_force_sign_changes(const SegmentFunction& seg, double a, double zeta = kDefaultZeta);

struct EngineeredDoubleZero {
  std::string label;
  double t_star = 0.0;
  int index = 0;
  std::optional<Trajectory> trajectory;
  AuditReport drop;
};

/// Linear scenarios with fixed steps whose initial data is a combination of
/// two data chosen so that x_t(i) and x_t(i+1) vanish together at t_star.
std::vector<EngineeredDoubleZero> engineered_double_zeros();

}  // namespace ddelyap::acceptance
