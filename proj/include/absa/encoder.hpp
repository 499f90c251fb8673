#pragma once

#include <vector>

#include "absa/params.hpp"
#include "absa/rng.hpp"
#include "absa/tensor.hpp"

namespace absa {

struct EncoderConfig {
  int vocab_size = 0;
  int max_len = 64;
  int num_layers = 2;
  int dim_h = 32;
  int num_attn_heads = 4;
  int ffn_dim = 128;  // conventionally 4 * dim_h
  int num_segments = 1;
};

// One transformer layer: multi-head self-attention and a GELU feed-forward
// block, each followed by residual + layer-norm (post-LN).
struct TransformerLayerParams {
  Tensor wq, bq, wk, bk, wv, bv;  // [d x d] / [d]
  Tensor wo, bo;                  // attention output projection
  Tensor ln1_g, ln1_b;
  Tensor ffn_w1, ffn_b1;  // [d x ffn] / [ffn]
  Tensor ffn_w2, ffn_b2;  // [ffn x d] / [d]
  Tensor ln2_g, ln2_b;

  static TransformerLayerParams init(int dim_h, int ffn_dim, Rng& rng,
                                     bool requires_grad);
  void collect(const std::string& prefix, ParamList& out) const;
};

// [T x T] constant bias: 0 over allowed key columns, -1e9 over masked ones
// (the same row for every query). Added to attention logits before softmax;
// exp underflows the masked weights to exactly zero. ContractError if every
// position is masked.
Tensor attention_mask_bias(const std::vector<int>& mask);

// Scaled dot-product self-attention over h [T x d] with the mask bias above,
// then the FFN block; residual + layer-norm after each (post-LN).
Tensor transformer_layer(const TransformerLayerParams& p, int num_heads,
                         const Tensor& h, const std::vector<int>& mask);

// Toy BERT-style encoder: token + position + segment embeddings followed by
// num_layers transformer layers. A frozen encoder still runs forward but its
// parameters take no gradients and never reach the optimizer.
class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, Rng& rng, bool frozen);

  // H0 rows: token_emb[id_t] + pos_emb[t] + seg_emb[seg_t].
  Tensor embed(const std::vector<int>& token_ids,
               const std::vector<int>& segment_ids) const;

  // H^L; upto_layers >= 0 stops the stack early (-1 runs all layers).
  Tensor encode(const std::vector<int>& token_ids,
                const std::vector<int>& segment_ids,
                const std::vector<int>& mask, int upto_layers = -1) const;

  const EncoderConfig& config() const { return cfg_; }
  bool frozen() const { return frozen_; }
  void collect_params(ParamList& out) const;

 private:
  EncoderConfig cfg_;
  bool frozen_;
  Tensor token_emb_, pos_emb_, seg_emb_;
  std::vector<TransformerLayerParams> layers_;
};

}  // namespace absa
