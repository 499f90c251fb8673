#pragma once

#include <memory>
#include <vector>

#include "absa/corpus.hpp"
#include "absa/crf.hpp"
#include "absa/encoder.hpp"
#include "absa/heads.hpp"
#include "absa/params.hpp"

namespace absa {

struct ModelConfig {
  EncoderConfig encoder;
  HeadKind head = HeadKind::LINEAR;
  int head_attn_heads = 1;  // SAN/TFM; single-head by default
  int head_ffn_dim = 0;     // TFM feed-forward width; 0 means 4 * dim_h
  double dropout = 0.1;     // applied to H^L during training only
  bool freeze_encoder = false;

  int resolved_head_ffn_dim() const {
    return head_ffn_dim > 0 ? head_ffn_dim : 4 * encoder.dim_h;
  }
};

// Encoder plus one sequence-labeling head. Training runs on padded batch
// rows with the real attention mask; the CRF scores only the unpadded
// prefix, the token heads mask padding out of the NLL instead.
class Model {
 public:
  Model(const ModelConfig& cfg, Rng& rng);

  // Mean per-sentence loss over the batch.
  Tensor batch_loss(const Batch& batch, Rng& dropout_rng, bool train_mode);

  // Decoded and repaired (always-valid) tags at true sentence length.
  std::vector<int> predict_tags(const std::vector<int>& token_ids) const;
  std::vector<std::vector<int>> predict_tags(const Batch& batch) const;

  ParamList params() const;     // every parameter, stable order
  ParamList trainable() const;  // the requires_grad subset

  const ModelConfig& config() const { return cfg_; }
  const Encoder& encoder() const { return *encoder_; }

 private:
  ModelConfig cfg_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<TokenHead> token_head_;  // null for the CRF variant
  std::unique_ptr<CrfHead> crf_head_;      // null for token heads
};

}  // namespace absa
