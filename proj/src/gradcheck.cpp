#include "absa/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "absa/model.hpp"
#include "absa/tensor.hpp"

namespace absa {

namespace {

constexpr double kStep = 1e-6;

Batch probe_batch() {
  Batch batch;
  batch.token_ids = {{3, 1, 4, 1, 5}, {9, 2, 6, 0, 0}};
  batch.mask = {{1, 1, 1, 1, 1}, {1, 1, 1, 0, 0}};
  batch.tag_ids = {{0, 1, 2, 3, 0}, {4, 0, 12, 0, 0}};
  batch.lengths = {5, 3};
  return batch;
}

ModelConfig probe_config(HeadKind kind) {
  ModelConfig mc;
  mc.encoder.vocab_size = 11;
  mc.encoder.max_len = 6;
  mc.encoder.num_layers = 1;
  mc.encoder.dim_h = 8;
  mc.encoder.num_attn_heads = 2;
  mc.encoder.ffn_dim = 32;
  mc.head = kind;
  mc.head_attn_heads = 2;
  mc.head_ffn_dim = 16;
  mc.dropout = 0.0;  // finite differences need a deterministic loss
  return mc;
}

GradCheckResult check_component(HeadKind kind, double tol, bool corrupt) {
  Rng rng(7100 + static_cast<int>(kind));
  Model model(probe_config(kind), rng);
  Batch batch = probe_batch();
  Rng dropout_rng(1);  // never consulted while dropout = 0
  auto loss_value = [&]() {
    return model.batch_loss(batch, dropout_rng, true).item();
  };

  ParamList leaves = model.trainable();
  std::vector<std::vector<double>> analytic;
  for (NamedParam& p : leaves) p.tensor.zero_grad();
  {
    Tape tape;
    Tensor loss = model.batch_loss(batch, dropout_rng, true);
    backward(loss);
  }
  for (const NamedParam& p : leaves) analytic.push_back(p.tensor.grad());
  if (corrupt && !analytic.empty() && !analytic[0].empty())
    analytic[0][0] += 0.5;

  GradCheckResult result;
  result.component = head_name(kind);
  result.worst_param = "-";
  for (std::size_t pi = 0; pi < leaves.size(); ++pi) {
    std::vector<double>& w = leaves[pi].tensor.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      double keep = w[k];
      w[k] = keep + kStep;
      double fp = loss_value();
      w[k] = keep - kStep;
      double fm = loss_value();
      w[k] = keep;
      double numeric = (fp - fm) / (2.0 * kStep);
      double exact = analytic[pi][k];
      double rel = std::fabs(exact - numeric) /
                   std::max({std::fabs(exact), std::fabs(numeric), 1e-3});
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_param = leaves[pi].name;
      }
      ++result.entries;
    }
  }
  result.pass = result.max_rel_err < tol;
  return result;
}

}  // namespace

std::vector<GradCheckResult> run_gradient_suite(double tol, bool corrupt) {
  std::vector<GradCheckResult> results;
  for (HeadKind kind : {HeadKind::LINEAR, HeadKind::GRU, HeadKind::SAN,
                        HeadKind::TFM, HeadKind::CRF}) {
    results.push_back(check_component(kind, tol, corrupt));
  }
  return results;
}

bool all_passed(const std::vector<GradCheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const GradCheckResult& r) { return r.pass; });
}

std::string gradcheck_table(const std::vector<GradCheckResult>& results) {
  std::ostringstream out;
  for (const GradCheckResult& r : results) {
    char err[32];
    std::snprintf(err, sizeof(err), "%.3e", r.max_rel_err);
    out << r.component << ": max_rel_err=" << err
        << " entries=" << r.entries << " worst=" << r.worst_param << ' '
        << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  return out.str();
}

}  // namespace absa
