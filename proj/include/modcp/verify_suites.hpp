#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace modcp {

// One batch of randomized checks for a single result, aggregated to worst
// residuals. status: "ok" when every instance met its tolerance, "stalled"
// when the only failures were solver budgets, "failed" when a converged
// instance violated an asserted bound.
struct SuiteResult {
  std::string suite;
  std::string status = "ok";
  int instances = 0;
  std::map<std::string, double> residuals;
};

const std::vector<std::string>& suite_names();

// sizes may carry {"instances": n} to scale the batch; unknown names throw
// UnknownSuite. Identical (name, seed, sizes) runs produce identical results.
SuiteResult run_suite(const std::string& name, std::uint64_t seed, int instances = 0);

}  // namespace modcp
