#include <cstdio>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "gfpeel/errors.hpp"
#include "gfpeel/suites.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria: one PASS/FAIL line per check"};
  std::vector<int> criteria;
  std::uint64_t seed = gfpeel::kAcceptanceSeed;
  std::string json_path;
  app.add_option("--criterion,-c", criteria, "criterion number (1-5); repeatable, default all")
      ->check(CLI::Range(1, 5));
  app.add_option("--seed", seed, "master seed");
  app.add_option("--json", json_path, "write the summaries to this file");
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty()) criteria = {1, 2, 3, 4, 5};

  bool ok = true;
  nlohmann::json all = nlohmann::json::array();
  for (int c : criteria) {
    try {
      const gfpeel::SuiteResult r = gfpeel::run_suite(c, seed);
      std::cout << "== criterion " << c << ": " << r.name << '\n';
      for (const gfpeel::Check& check : r.checks) std::cout << check.line() << '\n';
      std::cout << (r.pass() ? "PASS" : "FAIL") << " criterion " << c << '\n' << std::flush;
      ok = ok && r.pass();
      all.push_back(r.to_json());
    } catch (const std::exception& e) {
      std::cout << "FAIL criterion " << c << ": " << e.what() << '\n';
      ok = false;
    }
  }
  if (!json_path.empty()) {
    if (std::FILE* f = std::fopen(json_path.c_str(), "w")) {
      std::fputs(all.dump(2).c_str(), f);
      std::fclose(f);
    }
  }
  return ok ? 0 : 1;
}
