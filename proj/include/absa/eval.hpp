#pragma once

#include <string>
#include <vector>

#include "absa/tags.hpp"

namespace absa {

struct EvalReport {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  // Single line "P=0.xxxx R=0.xxxx F1=0.xxxx".
  std::string line() const;
  // Machine-readable key=value block, one field per line.
  std::string keyvals() const;
};

// Span-level micro-averaged P/R/F1. A prediction is a true positive iff a
// gold span in the same sentence matches start, end, and sentiment exactly;
// counts are pooled over all sentences first. Duplicate predictions within a
// sentence are collapsed before counting. ContractError when gold and pred
// have different sentence counts.
EvalReport micro_prf(const std::vector<std::vector<AspectSpan>>& gold,
                     const std::vector<std::vector<AspectSpan>>& pred);

}  // namespace absa
