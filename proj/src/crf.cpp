#include "absa/crf.hpp"

#include <cmath>
#include <limits>

#include "absa/error.hpp"
#include "absa/ops.hpp"

namespace absa {

namespace {

constexpr double kInitStd = 0.02;
constexpr double kBoundaryScore = -1e4;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// m_p [T x k] with T >= 1; m_a [(k+2) x (k+2)].
int check_crf_shapes(const Tensor& m_p, const Tensor& m_a) {
  if (m_p.rank() != 2 || m_p.rows() < 1) {
    throw ContractError("crf: emission matrix must have at least one row, "
                        "got " + shape_str(m_p.shape()));
  }
  int k = m_p.cols();
  if (m_a.rank() != 2 || m_a.rows() != k + 2 || m_a.cols() != k + 2) {
    throw ShapeError("crf: transition matrix " + shape_str(m_a.shape()) +
                     " does not match " + std::to_string(k) + " tags (+2)");
  }
  return k;
}

void check_path(const std::vector<int>& y, int t_len, int k) {
  if (static_cast<int>(y.size()) != t_len) {
    throw ContractError("crf: path length " + std::to_string(y.size()) +
                        " vs " + std::to_string(t_len) + " emission rows");
  }
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (y[t] < 0 || y[t] >= k) {
      throw ContractError("crf: tag " + std::to_string(y[t]) +
                          " out of range [0," + std::to_string(k) +
                          ") at position " + std::to_string(t));
    }
  }
}

// Validity-automaton transitions for the 13-tag alphabet, with from/to
// allowed to be the START/STOP boundary states.
bool bioes_allowed(int from, int to, int k) {
  int start = crf_start_state(k), stop = crf_stop_state(k);
  bool from_closed;
  Sentiment open_sent = Sentiment::POS;
  if (from == start) {
    from_closed = true;
  } else {
    TagPos p = tag_pos(from);
    from_closed = p == TagPos::O || p == TagPos::S || p == TagPos::E;
    if (!from_closed) open_sent = tag_sentiment(from);
  }
  if (to == stop) return from_closed;
  TagPos q = tag_pos(to);
  if (from_closed) return q == TagPos::O || q == TagPos::B || q == TagPos::S;
  return (q == TagPos::I || q == TagPos::E) && tag_sentiment(to) == open_sent;
}

}  // namespace

Tensor crf_sequence_score(const Tensor& m_p, const Tensor& m_a,
                          const std::vector<int>& y) {
  int k = check_crf_shapes(m_p, m_a);
  int t_len = m_p.rows();
  check_path(y, t_len, k);
  std::vector<int> from(y.size() + 1), to(y.size() + 1);
  from[0] = crf_start_state(k);
  for (std::size_t t = 0; t < y.size(); ++t) {
    to[t] = y[t];
    from[t + 1] = y[t];
  }
  to[y.size()] = crf_stop_state(k);
  Tensor transitions = sum_all(pick_entries(m_a, from, to));
  Tensor emissions = sum_all(pick_rows(m_p, y));
  return add(transitions, emissions);
}

Tensor crf_log_partition(const Tensor& m_p, const Tensor& m_a) {
  int k = check_crf_shapes(m_p, m_a);
  int t_len = m_p.rows();
  Tensor start_row = slice_vec(take_row(m_a, crf_start_state(k)), 0, k);
  std::vector<int> rows(static_cast<std::size_t>(k));
  std::vector<int> stops(static_cast<std::size_t>(k), crf_stop_state(k));
  for (int i = 0; i < k; ++i) rows[static_cast<std::size_t>(i)] = i;
  Tensor stop_col = pick_entries(m_a, rows, stops);

  // alpha[j] = log sum over paths ending in tag j at step t.
  Tensor alpha = add(take_row(m_p, 0), start_row);
  if (t_len > 1) {
    Tensor inner_t = transpose(slice_block(m_a, 0, k, 0, k));
    for (int t = 1; t < t_len; ++t) {
      // row j of add_row_bias(inner_t, alpha) holds alpha[i] + M_A[i, j].
      alpha = add(logsumexp_rows(add_row_bias(inner_t, alpha)),
                  take_row(m_p, t));
    }
  }
  return logsumexp_all(add(alpha, stop_col));
}

Tensor crf_nll(const Tensor& m_p, const Tensor& m_a,
               const std::vector<int>& gold) {
  return sub(crf_log_partition(m_p, m_a), crf_sequence_score(m_p, m_a, gold));
}

ViterbiResult crf_viterbi(const Tensor& m_p, const Tensor& m_a,
                          bool constrain_bioes) {
  int k = check_crf_shapes(m_p, m_a);
  int t_len = m_p.rows();
  if (constrain_bioes && k != kNumTags) {
    throw ContractError("crf: BIOES-constrained decode needs the 13-tag "
                        "alphabet, got " + std::to_string(k) + " tags");
  }
  int start = crf_start_state(k), stop = crf_stop_state(k);
  auto allowed = [&](int from, int to) {
    return !constrain_bioes || bioes_allowed(from, to, k);
  };

  std::vector<double> delta(static_cast<std::size_t>(k));
  std::vector<std::vector<int>> back(
      static_cast<std::size_t>(t_len),
      std::vector<int>(static_cast<std::size_t>(k), -1));
  for (int j = 0; j < k; ++j) {
    delta[static_cast<std::size_t>(j)] =
        allowed(start, j) ? m_a.v(start, j) + m_p.v(0, j) : kNegInf;
  }
  for (int t = 1; t < t_len; ++t) {
    std::vector<double> next(static_cast<std::size_t>(k), kNegInf);
    for (int j = 0; j < k; ++j) {
      double best = kNegInf;
      int best_i = -1;
      for (int i = 0; i < k; ++i) {
        if (delta[static_cast<std::size_t>(i)] == kNegInf || !allowed(i, j))
          continue;
        double s = delta[static_cast<std::size_t>(i)] + m_a.v(i, j);
        if (s > best) {  // strict: earlier (lower) index wins ties
          best = s;
          best_i = i;
        }
      }
      if (best_i >= 0) {
        next[static_cast<std::size_t>(j)] = best + m_p.v(t, j);
        back[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] =
            best_i;
      }
    }
    delta = std::move(next);
  }

  double best = kNegInf;
  int best_j = -1;
  for (int j = 0; j < k; ++j) {
    if (delta[static_cast<std::size_t>(j)] == kNegInf || !allowed(j, stop))
      continue;
    double s = delta[static_cast<std::size_t>(j)] + m_a.v(j, stop);
    if (s > best) {
      best = s;
      best_j = j;
    }
  }
  if (best_j < 0) throw ContractError("crf: no admissible path");

  ViterbiResult result;
  result.score = best;
  result.path.assign(static_cast<std::size_t>(t_len), 0);
  int j = best_j;
  for (int t = t_len - 1; t >= 0; --t) {
    result.path[static_cast<std::size_t>(t)] = j;
    if (t > 0) j = back[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
  }
  return result;
}

CrfHead::CrfHead(int dim_h, Rng& rng)
    : w_e_(Tensor::randn({dim_h, kNumTags}, rng, kInitStd, true)),
      b_e_(Tensor::zeros({kNumTags}, true)),
      m_a_(Tensor::randn({kNumTags + 2, kNumTags + 2}, rng, kInitStd, true)) {
  // Boundary rows/columns no scoring path reads; Adam never moves them
  // because their gradient is structurally zero.
  int start = crf_start_state(kNumTags), stop = crf_stop_state(kNumTags);
  for (int i = 0; i < kNumTags + 2; ++i) {
    m_a_.data()[static_cast<std::size_t>(i) * (kNumTags + 2) + start] =
        kBoundaryScore;
    m_a_.data()[static_cast<std::size_t>(stop) * (kNumTags + 2) + i] =
        kBoundaryScore;
  }
}

Tensor CrfHead::emissions(const Tensor& h_l) const {
  return add_row_bias(matmul(h_l, w_e_), b_e_);
}

Tensor CrfHead::nll(const Tensor& h_l, const std::vector<int>& gold) const {
  return crf_nll(emissions(h_l), m_a_, gold);
}

ViterbiResult CrfHead::decode(const Tensor& h_l, bool constrain_bioes) const {
  return crf_viterbi(emissions(h_l), m_a_, constrain_bioes);
}

void CrfHead::collect_params(ParamList& out) const {
  out.push_back({"head.crf.w_e", w_e_});
  out.push_back({"head.crf.b_e", b_e_});
  out.push_back({"head.crf.m_a", m_a_});
}

}  // namespace absa
