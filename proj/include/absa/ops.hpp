#pragma once

// Primitive tensor ops. Each op computes its forward value eagerly and,
// when a tape is active and an input requires grad, records one backward
// step that accumulates into the input grads.

#include <vector>

#include "absa/tensor.hpp"

namespace absa {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);
Tensor affine(const Tensor& a, double k, double c);  // k*a + c

// out[i,j] = m[i,j] + v[j] — the only broadcast in the library.
Tensor add_row_bias(const Tensor& m, const Tensor& v);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matvec(const Tensor& w, const Tensor& x);  // [m x n] * [n] -> [m]
Tensor transpose(const Tensor& m);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor log(const Tensor& x);

// Row-wise softmax with max subtraction; rows sum to 1.
Tensor softmax_rows(const Tensor& m);
// Row-wise log-sum-exp -> vector of row LSEs.
Tensor logsumexp_rows(const Tensor& m);
// Log-sum-exp over every entry -> scalar.
Tensor logsumexp_all(const Tensor& x);

// Normalize the last axis (whole vector, or each matrix row) to zero mean
// and unit population variance, then scale by gain and shift by bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

// out[t,:] = table[ids[t],:]
Tensor embed_rows(const Tensor& table, const std::vector<int>& ids);

Tensor take_row(const Tensor& m, int r);  // -> vector [cols]
Tensor slice_vec(const Tensor& v, int i0, int i1);
Tensor slice_block(const Tensor& m, int r0, int r1, int c0, int c1);
Tensor slice_rows(const Tensor& m, int r0, int r1);
Tensor slice_cols(const Tensor& m, int c0, int c1);

Tensor stack_rows(const std::vector<Tensor>& rows);   // T vectors [n] -> [T x n]
Tensor concat_cols(const std::vector<Tensor>& mats);  // same rows, cols sum

// out[t] = m[t, idx[t]]
Tensor pick_rows(const Tensor& m, const std::vector<int>& idx);
// out[k] = m[rows[k], cols[k]]
Tensor pick_entries(const Tensor& m, const std::vector<int>& rows,
                    const std::vector<int>& cols);

Tensor sum_all(const Tensor& x);  // -> scalar

/// Inverted dropout: zero with probability p, else scale by 1/(1-p).
// p == 0 returns x unchanged.
Tensor dropout(const Tensor& x, double p, Rng& rng);

// Per-row argmax (lowest index wins ties). Not differentiable.
std::vector<int> argmax_rows(const Tensor& m);

bool all_finite(const Tensor& x);

}  // namespace absa
