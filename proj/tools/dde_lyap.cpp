#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "acceptance.hpp"
#include "ddelyap/errors.hpp"
#include "ddelyap/scenario.hpp"

namespace fs = std::filesystem;
using namespace ddelyap;

namespace {

// A path to an INI file, else the name of a built-in scenario.
Scenario resolve(const std::string& arg) {
  if (fs::is_regular_file(arg)) return load_scenario(arg);
  if (auto s = find_scenario(default_registry(), arg)) return *s;
  throw ConfigError(arg + ": no such file or built-in scenario (see `dde-lyap list`)");
}

fs::path default_out_root() {
  if (const char* env = std::getenv("DDE_LYAP_OUT"); env != nullptr && *env != '\0') return env;
  return "dde-lyap-out";
}

int run_command(const std::vector<std::string>& args, const std::string& out, int jobs) {
  std::vector<Scenario> scenarios;
  std::set<std::string> names;
  for (const auto& a : args) {
    try {
      scenarios.push_back(resolve(a));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    if (!names.insert(scenarios.back().name).second) {
      std::cerr << "error: scenario name '" << scenarios.back().name << "' given twice\n";
      return 1;
    }
  }
  const fs::path root = out.empty() ? default_out_root() : fs::path(out);

  std::vector<RunResult> results(scenarios.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t k = next++; k < scenarios.size(); k = next++) {
      results[k] = run_scenario(scenarios[k], root);
      std::lock_guard lock(io);
      std::cout << results[k].message;
      if (results[k].exit_code != 1) std::cout << scenarios[k].name << ": outputs in " << results[k].output_dir.string() << '\n';
      std::cout.flush();
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(scenarios.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < n; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = 0;
  for (const auto& r : results) {
    if (r.exit_code == 1) return 1;
    code = std::max(code, r.exit_code);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete Lyapunov functional for cyclic delay equations: simulate, track V, audit"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run scenarios (INI files or built-in names)");
  std::vector<std::string> inputs;
  std::string out;
  int jobs = 1;
  run->add_option("scenarios", inputs, "Scenario files or built-in names")->required();
  run->add_option("--out", out, "Output root (default $DDE_LYAP_OUT or ./dde-lyap-out)");
  run->add_option("--jobs", jobs, "Scenarios run in parallel")->check(CLI::Range(1, 256));

  auto* list = app.add_subcommand("list", "List built-in scenarios, systems, delay models and audits");
  bool json = false;
  list->add_flag("--json", json, "Machine-readable listing");

  auto* self = app.add_subcommand("selftest", "Run the acceptance suite");
  acceptance::Options opts;
  bool verbose = false;
  self->add_option("--only", opts.only, "Criterion numbers (default all)")->check(CLI::Range(1, 10));
  self->add_option("--seed", opts.seed, "Seed of the randomized corpus");
  self->add_flag("-v,--verbose", verbose, "Progress on stderr");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(inputs, out, jobs);
    if (*list) {
      std::cout << list_registry(default_registry(), json);
      return 0;
    }
    if (*self) {
      if (verbose) opts.progress = [](const std::string& s) { std::cerr << s << '\n'; };
      const auto results = acceptance::run_acceptance(opts, std::cout);
      int failed = 0;
      for (const auto& r : results) failed += r.pass ? 0 : 1;
      std::cout << results.size() - failed << "/" << results.size() << " criteria passed" << std::endl;
      return failed == 0 ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
