/*
 Copyright 2026 The MDGPS Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <exception>
#include <iostream>

#include "criteria.hpp"

int main(int argc, char** argv) {
  using namespace mdgps::acceptance;

  CLI::App app{"Acceptance criteria; prints one PASS or FAIL line per criterion"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Run only these criteria (1 to 11)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  for (const Criterion& c : all_criteria()) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, fmt::format("threw: {}", e.what())};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) ++failed;
    std::cout << fmt::format("{} criterion {:>2} {}: {} [{:.1f} s]", outcome.pass ? "PASS" : "FAIL", c.id,
                             c.name, outcome.detail, seconds)
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
