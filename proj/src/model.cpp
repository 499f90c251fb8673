#include "absa/model.hpp"

#include "absa/error.hpp"
#include "absa/ops.hpp"

namespace absa {

Model::Model(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  encoder_ = std::make_unique<Encoder>(cfg.encoder, rng, cfg.freeze_encoder);
  if (cfg.head == HeadKind::CRF) {
    crf_head_ = std::make_unique<CrfHead>(cfg.encoder.dim_h, rng);
  } else {
    token_head_ =
        make_token_head(cfg.head, cfg.encoder.dim_h, cfg.head_attn_heads,
                        cfg.resolved_head_ffn_dim(), rng);
  }
}

Tensor Model::batch_loss(const Batch& batch, Rng& dropout_rng,
                         bool train_mode) {
  if (batch.size() == 0) throw ContractError("batch_loss: empty batch");
  Tensor total;
  for (int b = 0; b < batch.size(); ++b) {
    const std::vector<int>& ids = batch.token_ids[static_cast<std::size_t>(b)];
    const std::vector<int>& mask = batch.mask[static_cast<std::size_t>(b)];
    const std::vector<int>& gold = batch.tag_ids[static_cast<std::size_t>(b)];
    std::vector<int> segs(ids.size(), 0);
    Tensor h = encoder_->encode(ids, segs, mask);
    if (train_mode && cfg_.dropout > 0.0)
      h = dropout(h, cfg_.dropout, dropout_rng);

    Tensor loss_b;
    if (crf_head_) {
      int len = batch.lengths[static_cast<std::size_t>(b)];
      Tensor prefix = len == h.rows() ? h : slice_rows(h, 0, len);
      std::vector<int> gold_prefix(gold.begin(), gold.begin() + len);
      loss_b = crf_head_->nll(prefix, gold_prefix);
    } else {
      loss_b = token_nll(token_head_->probs(h, mask), gold, mask);
    }
    total = b == 0 ? loss_b : add(total, loss_b);
  }
  return scale(total, 1.0 / batch.size());
}

std::vector<int> Model::predict_tags(const std::vector<int>& token_ids) const {
  std::vector<int> segs(token_ids.size(), 0);
  std::vector<int> mask(token_ids.size(), 1);
  Tensor h = encoder_->encode(token_ids, segs, mask);
  std::vector<int> raw;
  if (crf_head_) {
    raw = crf_head_->decode(h).path;
  } else {
    raw = argmax_rows(token_head_->probs(h, mask));
  }
  return repair(raw);
}

std::vector<std::vector<int>> Model::predict_tags(const Batch& batch) const {
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(batch.size()));
  for (int b = 0; b < batch.size(); ++b) {
    int len = batch.lengths[static_cast<std::size_t>(b)];
    const std::vector<int>& padded =
        batch.token_ids[static_cast<std::size_t>(b)];
    std::vector<int> ids(padded.begin(), padded.begin() + len);
    out.push_back(predict_tags(ids));
  }
  return out;
}

ParamList Model::params() const {
  ParamList out;
  encoder_->collect_params(out);
  if (crf_head_)
    crf_head_->collect_params(out);
  else
    token_head_->collect_params(out);
  return out;
}

ParamList Model::trainable() const {
  ParamList out;
  for (NamedParam& p : params()) {
    if (p.tensor.requires_grad()) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace absa
