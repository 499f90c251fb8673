#pragma once

#include <memory>
#include <string>
#include <vector>

#include "absa/encoder.hpp"
#include "absa/params.hpp"
#include "absa/rng.hpp"
#include "absa/tags.hpp"
#include "absa/tensor.hpp"

namespace absa {

enum class HeadKind { LINEAR, GRU, SAN, TFM, CRF };

const std::string& head_name(HeadKind kind);
HeadKind head_from_name(const std::string& name);  // ConfigError on unknown

// The shared tag projection: softmax(W_o h + b_o) applied row-wise.
struct OutputProjection {
  Tensor w_o, b_o;  // [dim_h x 13] / [13]

  OutputProjection() = default;
  OutputProjection(int dim_h, Rng& rng);
  Tensor operator()(const Tensor& h) const;
  void collect(ParamList& out) const;
};

// Mean negative log-likelihood of the gold tags over unmasked positions.
// ContractError on an all-masked sentence or an out-of-range gold index.
Tensor token_nll(const Tensor& probs, const std::vector<int>& gold,
                 const std::vector<int>& mask);
Tensor token_nll(const Tensor& probs, const std::vector<int>& gold);

// A token-level head maps H^L [T x dim_h] to per-token tag distributions
// [T x 13]. (The CRF head lives in crf.hpp; it scores whole sequences.)
class TokenHead {
 public:
  virtual ~TokenHead() = default;
  virtual HeadKind kind() const = 0;
  virtual Tensor probs(const Tensor& h_l,
                       const std::vector<int>& mask) const = 0;
  virtual void collect_params(ParamList& out) const = 0;
};

// Direct projection of H^L.
class LinearHead : public TokenHead {
 public:
  LinearHead(int dim_h, Rng& rng);
  HeadKind kind() const override { return HeadKind::LINEAR; }
  Tensor probs(const Tensor& h_l, const std::vector<int>& mask) const override;
  void collect_params(ParamList& out) const override;

 private:
  OutputProjection proj_;
};

// Left-to-right GRU with layer-normalized gate preactivations; h_0 = 0.
// Gates come stacked: [r;z] = sigmoid(LN(W_x h) + LN(W_h h_prev)).
class GruHead : public TokenHead {
 public:
  GruHead(int dim_h, Rng& rng);
  HeadKind kind() const override { return HeadKind::GRU; }
  Tensor probs(const Tensor& h_l, const std::vector<int>& mask) const override;
  void collect_params(ParamList& out) const override;

  // Task-specific hidden states [T x dim_h] before the projection.
  Tensor hidden_states(const Tensor& h_l) const;

 private:
  int dim_h_;
  Tensor w_x_, w_h_;    // [2d x d]
  Tensor w_xn_, w_hn_;  // [d x d]
  Tensor ln_x_g_, ln_x_b_, ln_h_g_, ln_h_b_;    // [2d]
  Tensor ln_xn_g_, ln_xn_b_, ln_hn_g_, ln_hn_b_;  // [d]
  OutputProjection proj_;
};

// Plain self-attention (no biases, no output mix) + residual + layer-norm.
class SanHead : public TokenHead {
 public:
  SanHead(int dim_h, int attn_heads, Rng& rng);
  HeadKind kind() const override { return HeadKind::SAN; }
  Tensor probs(const Tensor& h_l, const std::vector<int>& mask) const override;
  void collect_params(ParamList& out) const override;

  Tensor hidden_states(const Tensor& h_l, const std::vector<int>& mask) const;

 private:
  int dim_h_, attn_heads_;
  Tensor wq_, wk_, wv_;
  Tensor ln_g_, ln_b_;
  OutputProjection proj_;
};

// One full transformer layer (same block as the encoder's).
class TfmHead : public TokenHead {
 public:
  TfmHead(int dim_h, int attn_heads, int ffn_dim, Rng& rng);
  HeadKind kind() const override { return HeadKind::TFM; }
  Tensor probs(const Tensor& h_l, const std::vector<int>& mask) const override;
  void collect_params(ParamList& out) const override;

 private:
  int attn_heads_;
  TransformerLayerParams layer_;
  OutputProjection proj_;
};

// attn_heads and ffn_dim only apply to the variants that use them.
std::unique_ptr<TokenHead> make_token_head(HeadKind kind, int dim_h,
                                           int attn_heads, int ffn_dim,
                                           Rng& rng);

}  // namespace absa
