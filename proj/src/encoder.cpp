#include "absa/encoder.hpp"

#include <cmath>

#include "absa/error.hpp"
#include "absa/ops.hpp"

namespace absa {

namespace {

constexpr double kInitStd = 0.02;
constexpr double kMaskBias = -1e9;

Tensor init_matrix(int rows, int cols, Rng& rng, bool rg) {
  return Tensor::randn({rows, cols}, rng, kInitStd, rg);
}

void check_config(const EncoderConfig& cfg) {
  if (cfg.vocab_size < 1 || cfg.max_len < 1 || cfg.num_layers < 0 ||
      cfg.dim_h < 1 || cfg.num_attn_heads < 1 || cfg.ffn_dim < 1 ||
      cfg.num_segments < 1) {
    throw ContractError("encoder config has a non-positive dimension");
  }
  if (cfg.dim_h % cfg.num_attn_heads != 0) {
    throw ContractError("dim_h " + std::to_string(cfg.dim_h) +
                        " not divisible by num_attn_heads " +
                        std::to_string(cfg.num_attn_heads));
  }
}

}  // namespace

Tensor attention_mask_bias(const std::vector<int>& mask) {
  int t = static_cast<int>(mask.size());
  Tensor bias = Tensor::zeros({t, t});
  int live = 0;
  for (int k = 0; k < t; ++k) {
    if (mask[static_cast<std::size_t>(k)] != 0) {
      ++live;
      continue;
    }
    for (int q = 0; q < t; ++q)
      bias.data()[static_cast<std::size_t>(q) * t + k] = kMaskBias;
  }
  if (live == 0) throw ContractError("attention over fully masked input");
  return bias;
}

TransformerLayerParams TransformerLayerParams::init(int dim_h, int ffn_dim,
                                                    Rng& rng,
                                                    bool requires_grad) {
  TransformerLayerParams p;
  p.wq = init_matrix(dim_h, dim_h, rng, requires_grad);
  p.bq = Tensor::zeros({dim_h}, requires_grad);
  p.wk = init_matrix(dim_h, dim_h, rng, requires_grad);
  p.bk = Tensor::zeros({dim_h}, requires_grad);
  p.wv = init_matrix(dim_h, dim_h, rng, requires_grad);
  p.bv = Tensor::zeros({dim_h}, requires_grad);
  p.wo = init_matrix(dim_h, dim_h, rng, requires_grad);
  p.bo = Tensor::zeros({dim_h}, requires_grad);
  p.ln1_g = Tensor::full({dim_h}, 1.0, requires_grad);
  p.ln1_b = Tensor::zeros({dim_h}, requires_grad);
  p.ffn_w1 = init_matrix(dim_h, ffn_dim, rng, requires_grad);
  p.ffn_b1 = Tensor::zeros({ffn_dim}, requires_grad);
  p.ffn_w2 = init_matrix(ffn_dim, dim_h, rng, requires_grad);
  p.ffn_b2 = Tensor::zeros({dim_h}, requires_grad);
  p.ln2_g = Tensor::full({dim_h}, 1.0, requires_grad);
  p.ln2_b = Tensor::zeros({dim_h}, requires_grad);
  return p;
}

void TransformerLayerParams::collect(const std::string& prefix,
                                     ParamList& out) const {
  out.push_back({prefix + ".wq", wq});
  out.push_back({prefix + ".bq", bq});
  out.push_back({prefix + ".wk", wk});
  out.push_back({prefix + ".bk", bk});
  out.push_back({prefix + ".wv", wv});
  out.push_back({prefix + ".bv", bv});
  out.push_back({prefix + ".wo", wo});
  out.push_back({prefix + ".bo", bo});
  out.push_back({prefix + ".ln1_g", ln1_g});
  out.push_back({prefix + ".ln1_b", ln1_b});
  out.push_back({prefix + ".ffn_w1", ffn_w1});
  out.push_back({prefix + ".ffn_b1", ffn_b1});
  out.push_back({prefix + ".ffn_w2", ffn_w2});
  out.push_back({prefix + ".ffn_b2", ffn_b2});
  out.push_back({prefix + ".ln2_g", ln2_g});
  out.push_back({prefix + ".ln2_b", ln2_b});
}

Tensor transformer_layer(const TransformerLayerParams& p, int num_heads,
                         const Tensor& h, const std::vector<int>& mask) {
  int t = h.rows();
  int d = h.cols();
  if (static_cast<int>(mask.size()) != t) {
    throw ShapeError("transformer_layer: mask length " +
                     std::to_string(mask.size()) + " vs " +
                     std::to_string(t) + " rows");
  }
  if (d % num_heads != 0) {
    throw ContractError("transformer_layer: width " + std::to_string(d) +
                        " not divisible by " + std::to_string(num_heads) +
                        " heads");
  }
  Tensor bias = attention_mask_bias(mask);
  Tensor q = add_row_bias(matmul(h, p.wq), p.bq);
  Tensor k = add_row_bias(matmul(h, p.wk), p.bk);
  Tensor v = add_row_bias(matmul(h, p.wv), p.bv);

  int dh = d / num_heads;
  double scale_val = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> head_outs;
  head_outs.reserve(static_cast<std::size_t>(num_heads));
  for (int i = 0; i < num_heads; ++i) {
    Tensor qi = slice_cols(q, i * dh, (i + 1) * dh);
    Tensor ki = slice_cols(k, i * dh, (i + 1) * dh);
    Tensor vi = slice_cols(v, i * dh, (i + 1) * dh);
    Tensor logits = add(scale(matmul(qi, transpose(ki)), scale_val), bias);
    head_outs.push_back(matmul(softmax_rows(logits), vi));
  }
  Tensor attn = num_heads == 1 ? head_outs[0] : concat_cols(head_outs);
  Tensor proj = add_row_bias(matmul(attn, p.wo), p.bo);
  Tensor h1 = layer_norm(add(h, proj), p.ln1_g, p.ln1_b);

  Tensor f = gelu(add_row_bias(matmul(h1, p.ffn_w1), p.ffn_b1));
  Tensor f2 = add_row_bias(matmul(f, p.ffn_w2), p.ffn_b2);
  return layer_norm(add(h1, f2), p.ln2_g, p.ln2_b);
}

Encoder::Encoder(const EncoderConfig& cfg, Rng& rng, bool frozen)
    : cfg_(cfg), frozen_(frozen) {
  check_config(cfg);
  bool rg = !frozen;
  token_emb_ = init_matrix(cfg.vocab_size, cfg.dim_h, rng, rg);
  pos_emb_ = init_matrix(cfg.max_len, cfg.dim_h, rng, rg);
  seg_emb_ = init_matrix(cfg.num_segments, cfg.dim_h, rng, rg);
  layers_.reserve(static_cast<std::size_t>(cfg.num_layers));
  for (int l = 0; l < cfg.num_layers; ++l)
    layers_.push_back(
        TransformerLayerParams::init(cfg.dim_h, cfg.ffn_dim, rng, rg));
}

Tensor Encoder::embed(const std::vector<int>& token_ids,
                      const std::vector<int>& segment_ids) const {
  int t = static_cast<int>(token_ids.size());
  if (t == 0) throw ContractError("embed: empty input");
  if (t > cfg_.max_len) {
    throw ContractError("embed: " + std::to_string(t) +
                        " tokens exceed max_len " +
                        std::to_string(cfg_.max_len));
  }
  if (segment_ids.size() != token_ids.size()) {
    throw ShapeError("embed: " + std::to_string(segment_ids.size()) +
                     " segment ids for " + std::to_string(t) + " tokens");
  }
  std::vector<int> positions(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) positions[static_cast<std::size_t>(i)] = i;
  Tensor h = add(embed_rows(token_emb_, token_ids),
                 embed_rows(pos_emb_, positions));
  return add(h, embed_rows(seg_emb_, segment_ids));
}

Tensor Encoder::encode(const std::vector<int>& token_ids,
                       const std::vector<int>& segment_ids,
                       const std::vector<int>& mask, int upto_layers) const {
  if (mask.size() != token_ids.size()) {
    throw ShapeError("encode: mask length " + std::to_string(mask.size()) +
                     " vs " + std::to_string(token_ids.size()) + " tokens");
  }
  Tensor h = embed(token_ids, segment_ids);
  int layers = upto_layers < 0 ? cfg_.num_layers
                               : std::min(upto_layers, cfg_.num_layers);
  for (int l = 0; l < layers; ++l)
    h = transformer_layer(layers_[static_cast<std::size_t>(l)],
                          cfg_.num_attn_heads, h, mask);
  return h;
}

void Encoder::collect_params(ParamList& out) const {
  out.push_back({"encoder.token_emb", token_emb_});
  out.push_back({"encoder.pos_emb", pos_emb_});
  out.push_back({"encoder.seg_emb", seg_emb_});
  for (std::size_t l = 0; l < layers_.size(); ++l)
    layers_[l].collect("encoder.layer" + std::to_string(l), out);
}

}  // namespace absa
