#pragma once

#include <vector>

#include "absa/params.hpp"
#include "absa/rng.hpp"
#include "absa/tags.hpp"
#include "absa/tensor.hpp"

namespace absa {

// Linear-chain CRF over k tags with synthetic boundary states. The scoring
// functions are generic in k: m_p is [T x k] and m_a is [(k+2) x (k+2)] with
// START = k and STOP = k+1. Only the entries a scoring path can read are
// meaningful: START->y, y->y', y->STOP. Transitions into START and out of
// STOP are never read, so they stay at their -1e4 initialization forever
// (zero gradient; the optimizer cannot move them).

inline int crf_start_state(int num_tags) { return num_tags; }
inline int crf_stop_state(int num_tags) { return num_tags + 1; }

// s(x, y) = M_A[START, y_1] + sum_t M_P[t, y_t] + sum_t M_A[y_t, y_t+1]
//         + M_A[y_T, STOP], kept on the tape for training.
Tensor crf_sequence_score(const Tensor& m_p, const Tensor& m_a,
                          const std::vector<int>& y);

// log sum_y exp(s(x, y)) by the forward algorithm in log space (exact).
Tensor crf_log_partition(const Tensor& m_p, const Tensor& m_a);

// log_partition - sequence_score(gold); >= 0 up to rounding.
Tensor crf_nll(const Tensor& m_p, const Tensor& m_a,
               const std::vector<int>& gold);

struct ViterbiResult {
  std::vector<int> path;
  double score = 0.0;
};

// Max-scoring sequence; ties break toward the lowest tag index at every step.
// constrain_bioes additionally forbids transitions the 13-tag validity
// automaton rejects (only meaningful for k = 13).
ViterbiResult crf_viterbi(const Tensor& m_p, const Tensor& m_a,
                          bool constrain_bioes = false);

// The CRF head proper: emission projection plus the transition matrix.
class CrfHead {
 public:
  CrfHead(int dim_h, Rng& rng);

  // M^P = H^L W_e + b_e (raw scores).
  Tensor emissions(const Tensor& h_l) const;

  Tensor nll(const Tensor& h_l, const std::vector<int>& gold) const;
  ViterbiResult decode(const Tensor& h_l, bool constrain_bioes = false) const;

  const Tensor& transitions() const { return m_a_; }
  void collect_params(ParamList& out) const;

 private:
  Tensor w_e_, b_e_;  // [dim_h x 13] / [13]
  Tensor m_a_;        // [(13+2) x (13+2)]
};

}  // namespace absa
