#pragma once

#include <string>
#include <vector>

namespace absa {

struct GradCheckResult {
  std::string component;    // linear | gru | san | tfm | crf
  double max_rel_err = 0.0;
  std::string worst_param;  // parameter holding the worst entry
  long long entries = 0;    // parameter entries checked
  bool pass = false;
};

// Central finite differences (h = 1e-6) against the analytic gradients of
// the full training loss — encoder (unfrozen) + head + NLL — at dim_h = 8,
// T = 5, on a two-sentence batch with one padded row; dropout off. One
// result per head variant; every trainable parameter entry is checked.
// corrupt injects a deliberate error into each component's first analytic
// gradient so the failure path (and its reporting) can be exercised.
std::vector<GradCheckResult> run_gradient_suite(double tol = 1e-4,
                                                bool corrupt = false);

bool all_passed(const std::vector<GradCheckResult>& results);

// One line per component: name, worst relative error, entry count, verdict.
std::string gradcheck_table(const std::vector<GradCheckResult>& results);

}  // namespace absa
