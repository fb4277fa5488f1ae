#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddelyap/integrator.hpp"
#include "ddelyap/verify.hpp"

namespace ddelyap {

// Configuration ---------------------------------------------------------------

/// Raw delay section: `model` plus its keys as written (numbers or expressions).
struct DelaySpec {
  std::string model = "constant";
  std::map<std::string, std::string> params;
};

/// Initial segment: a closed-form expression in s or a sampled table, plus
/// the discrete values x^1..x^N.
struct InitialSpec {
  std::optional<std::string> expr;
  std::vector<std::pair<double, double>> table;  // (s, value), ascending s
  std::vector<double> discrete;
  int pieces = 256;
};

struct Tolerances {
  double integrator = 1e-8;
  double zeta = kDefaultZeta;
  double delay = 1e-10;
};

struct Scenario {
  std::string name;
  std::string description;
  std::string system;
  ParamMap system_params;
  DelaySpec delay;
  InitialSpec initial;
  double t0 = 0.0;
  double t_end = 10.0;
  int delta = -1;
  Tolerances tol;
  std::vector<std::string> audits;
  std::uint64_t seed = 0;
  std::optional<double> h_fixed;
  std::optional<double> h_max;
  double kappa = 0.5;
  std::size_t max_records = 2000;
  bool svg = false;
};

/// Audit names in report order.
const std::vector<std::string>& audit_names();
/// Delay model names accepted in `[delay] model`.
const std::vector<std::string>& delay_model_names();

/// Parses the INI text. ConfigError messages carry `origin:line:` for
/// syntax problems and `[section] key:` for bad values.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);
/// Canonical INI text; parse_scenario(to_ini(s)) reproduces s.
std::string to_ini(const Scenario& s);

/// Validated, ready-to-run objects.
struct BuiltScenario {
  CyclicSystem system;
  DelayModel model;
  SegmentFunction initial;
  StepConfig step;
};

/// Builds system, delay model and initial segment and checks them: known
/// names, the feedback hypothesis (the error names the H2 clause), the delay
/// bounds, coverage of [-r, 0] by the initial segment, and for the implicit
/// delay the L0-Lipschitz condition on the initial data.
BuiltScenario build_scenario(const Scenario& s);

// Execution -------------------------------------------------------------------

struct RunHooks {
  /// Called on the Lyapunov records before the audits; test fixtures use it
  /// to inject records.
  std::function<void(std::vector<LyapunovRecord>&)> records;
};

struct ScenarioRun {
  Scenario scenario;
  std::optional<BuiltScenario> built;
  std::optional<Trajectory> trajectory;
  std::vector<LyapunovRecord> records;
  std::vector<AuditReport> reports;  // sorted by name

  bool all_pass() const;
  /// 0 when every requested audit passes or is vacuous, 2 otherwise.
  int exit_code() const;
};

/// Integrates, tracks V and runs the requested audits; no file output.
ScenarioRun execute_scenario(const Scenario& s, const RunHooks& hooks = {});

/// Writes trajectory.csv, y_trajectory.csv (with the transform audit),
/// lyapunov.csv, audits.json, plot.csv and optionally plot.svg.
void write_outputs(const ScenarioRun& run, const std::filesystem::path& dir);

/// Columns `t,V,x0..xN` at the record times; V is a step function between rows.
void write_plot_csv(std::ostream& os, const ScenarioRun& run);
void write_plot_svg(std::ostream& os, const ScenarioRun& run);

struct RunResult {
  std::string name;
  std::filesystem::path output_dir;
  int exit_code = 1;
  std::string message;
};

/// Parses, executes and writes into out_root/<name>; runtime and validation
/// errors give exit code 1 with the message.
RunResult run_scenario(const Scenario& s, const std::filesystem::path& out_root, const RunHooks& hooks = {});

// Registry --------------------------------------------------------------------

struct RegistryEntry {
  std::string name;
  std::string ini;
};

struct Registry {
  std::vector<RegistryEntry> scenarios;
  std::vector<std::string> systems;
  std::vector<std::string> delay_models;
  std::vector<std::string> audits;
  bool empty() const { return scenarios.empty() && systems.empty() && delay_models.empty() && audits.empty(); }
};

/// Built-in scenarios, systems, delay models and audits, sorted by name.
const Registry& default_registry();
std::optional<Scenario> find_scenario(const Registry& reg, const std::string& name);

/// Text or JSON listing in a fixed order; empty text for an empty registry.
std::string list_registry(const Registry& reg, bool json);

}  // namespace ddelyap
