#include "absa/eval.hpp"

#include <algorithm>
#include <cstdio>

#include "absa/error.hpp"

namespace absa {

namespace {

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string EvalReport::line() const {
  return "P=" + fmt4(precision) + " R=" + fmt4(recall) + " F1=" + fmt4(f1);
}

std::string EvalReport::keyvals() const {
  return "tp=" + std::to_string(tp) + "\nfp=" + std::to_string(fp) +
         "\nfn=" + std::to_string(fn) + "\nprecision=" + fmt4(precision) +
         "\nrecall=" + fmt4(recall) + "\nf1=" + fmt4(f1) + "\n";
}

EvalReport micro_prf(const std::vector<std::vector<AspectSpan>>& gold,
                     const std::vector<std::vector<AspectSpan>>& pred) {
  if (gold.size() != pred.size()) {
    throw ContractError("micro_prf: " + std::to_string(gold.size()) +
                        " gold sentences vs " + std::to_string(pred.size()) +
                        " predicted");
  }
  EvalReport r;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    std::vector<AspectSpan> p = pred[s];
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    long long tp_here = 0;
    for (const AspectSpan& sp : p) {
      if (std::find(gold[s].begin(), gold[s].end(), sp) != gold[s].end())
        ++tp_here;
    }
    r.tp += tp_here;
    r.fp += static_cast<long long>(p.size()) - tp_here;
    r.fn += static_cast<long long>(gold[s].size()) - tp_here;
  }
  if (r.tp + r.fp > 0) r.precision = static_cast<double>(r.tp) / (r.tp + r.fp);
  if (r.tp + r.fn > 0) r.recall = static_cast<double>(r.tp) / (r.tp + r.fn);
  if (r.precision + r.recall > 0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

}  // namespace absa
