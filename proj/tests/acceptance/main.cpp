#include <iostream>

#include "CLI11.hpp"
#include "acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite: one PASS/FAIL line per criterion"};
  ddelyap::acceptance::Options opts;
  bool verbose = false;
  app.add_option("--only", opts.only, "Criterion numbers to run (default all)")->check(CLI::Range(1, 10));
  app.add_option("--seed", opts.seed, "Seed of the randomized corpus");
  app.add_option("--scenarios", opts.random_scenarios, "Randomized scenarios for criteria 1-2")->check(CLI::Range(1, 10000));
  app.add_option("--segments", opts.random_segments, "Random segments for criterion 9")->check(CLI::Range(1, 1000000));
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");
  CLI11_PARSE(app, argc, argv);
  if (verbose) opts.progress = [](const std::string& s) { std::cerr << s << '\n'; };
  const auto results = ddelyap::acceptance::run_acceptance(opts, std::cout);
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
