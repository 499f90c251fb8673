#include "absa/heads.hpp"

#include <array>
#include <cmath>

#include "absa/error.hpp"
#include "absa/ops.hpp"

namespace absa {

namespace {

constexpr double kInitStd = 0.02;

const std::array<std::string, 5> kHeadNames = {"linear", "gru", "san", "tfm",
                                               "crf"};

}  // namespace

const std::string& head_name(HeadKind kind) {
  return kHeadNames[static_cast<std::size_t>(kind)];
}

HeadKind head_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kHeadNames.size(); ++i) {
    if (kHeadNames[i] == name) return static_cast<HeadKind>(i);
  }
  throw ConfigError("unknown head '" + name +
                    "' (expected linear|gru|san|tfm|crf)");
}

OutputProjection::OutputProjection(int dim_h, Rng& rng)
    : w_o(Tensor::randn({dim_h, kNumTags}, rng, kInitStd, true)),
      b_o(Tensor::zeros({kNumTags}, true)) {}

Tensor OutputProjection::operator()(const Tensor& h) const {
  return softmax_rows(add_row_bias(matmul(h, w_o), b_o));
}

void OutputProjection::collect(ParamList& out) const {
  out.push_back({"head.w_o", w_o});
  out.push_back({"head.b_o", b_o});
}

Tensor token_nll(const Tensor& probs, const std::vector<int>& gold,
                 const std::vector<int>& mask) {
  if (static_cast<int>(gold.size()) != probs.rows() ||
      mask.size() != gold.size()) {
    throw ShapeError("token_nll: " + std::to_string(probs.rows()) +
                     " rows vs " + std::to_string(gold.size()) + " gold / " +
                     std::to_string(mask.size()) + " mask entries");
  }
  int live = 0;
  Tensor weights = Tensor::zeros({probs.rows()});
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t] != 0) {
      weights.data()[t] = 1.0;
      ++live;
    }
  }
  if (live == 0) throw ContractError("token_nll: every position is masked");
  Tensor log_p = log(pick_rows(probs, gold));
  return scale(sum_all(mul(log_p, weights)), -1.0 / live);
}

Tensor token_nll(const Tensor& probs, const std::vector<int>& gold) {
  return token_nll(probs, gold,
                   std::vector<int>(gold.size(), 1));
}

LinearHead::LinearHead(int dim_h, Rng& rng) : proj_(dim_h, rng) {}

Tensor LinearHead::probs(const Tensor& h_l,
                         const std::vector<int>& /*mask*/) const {
  return proj_(h_l);
}

void LinearHead::collect_params(ParamList& out) const { proj_.collect(out); }

GruHead::GruHead(int dim_h, Rng& rng)
    : dim_h_(dim_h),
      w_x_(Tensor::randn({2 * dim_h, dim_h}, rng, kInitStd, true)),
      w_h_(Tensor::randn({2 * dim_h, dim_h}, rng, kInitStd, true)),
      w_xn_(Tensor::randn({dim_h, dim_h}, rng, kInitStd, true)),
      w_hn_(Tensor::randn({dim_h, dim_h}, rng, kInitStd, true)),
      ln_x_g_(Tensor::full({2 * dim_h}, 1.0, true)),
      ln_x_b_(Tensor::zeros({2 * dim_h}, true)),
      ln_h_g_(Tensor::full({2 * dim_h}, 1.0, true)),
      ln_h_b_(Tensor::zeros({2 * dim_h}, true)),
      ln_xn_g_(Tensor::full({dim_h}, 1.0, true)),
      ln_xn_b_(Tensor::zeros({dim_h}, true)),
      ln_hn_g_(Tensor::full({dim_h}, 1.0, true)),
      ln_hn_b_(Tensor::zeros({dim_h}, true)),
      proj_(dim_h, rng) {}

Tensor GruHead::hidden_states(const Tensor& h_l) const {
  int t_len = h_l.rows();
  Tensor h_prev = Tensor::zeros({dim_h_});
  std::vector<Tensor> states;
  states.reserve(static_cast<std::size_t>(t_len));
  for (int t = 0; t < t_len; ++t) {
    Tensor x = take_row(h_l, t);
    Tensor gates =
        sigmoid(add(layer_norm(matvec(w_x_, x), ln_x_g_, ln_x_b_),
                    layer_norm(matvec(w_h_, h_prev), ln_h_g_, ln_h_b_)));
    Tensor r = slice_vec(gates, 0, dim_h_);
    Tensor z = slice_vec(gates, dim_h_, 2 * dim_h_);
    Tensor n =
        tanh(add(layer_norm(matvec(w_xn_, x), ln_xn_g_, ln_xn_b_),
                 mul(r, layer_norm(matvec(w_hn_, h_prev), ln_hn_g_,
                                   ln_hn_b_))));
    // h_t = (1 - z) * n + z * h_prev
    h_prev = add(mul(affine(z, -1.0, 1.0), n), mul(z, h_prev));
    states.push_back(h_prev);
  }
  return stack_rows(states);
}

Tensor GruHead::probs(const Tensor& h_l,
                      const std::vector<int>& /*mask*/) const {
  return proj_(hidden_states(h_l));
}

void GruHead::collect_params(ParamList& out) const {
  out.push_back({"head.gru.w_x", w_x_});
  out.push_back({"head.gru.w_h", w_h_});
  out.push_back({"head.gru.w_xn", w_xn_});
  out.push_back({"head.gru.w_hn", w_hn_});
  out.push_back({"head.gru.ln_x_g", ln_x_g_});
  out.push_back({"head.gru.ln_x_b", ln_x_b_});
  out.push_back({"head.gru.ln_h_g", ln_h_g_});
  out.push_back({"head.gru.ln_h_b", ln_h_b_});
  out.push_back({"head.gru.ln_xn_g", ln_xn_g_});
  out.push_back({"head.gru.ln_xn_b", ln_xn_b_});
  out.push_back({"head.gru.ln_hn_g", ln_hn_g_});
  out.push_back({"head.gru.ln_hn_b", ln_hn_b_});
  proj_.collect(out);
}

SanHead::SanHead(int dim_h, int attn_heads, Rng& rng)
    : dim_h_(dim_h),
      attn_heads_(attn_heads),
      wq_(Tensor::randn({dim_h, dim_h}, rng, kInitStd, true)),
      wk_(Tensor::randn({dim_h, dim_h}, rng, kInitStd, true)),
      wv_(Tensor::randn({dim_h, dim_h}, rng, kInitStd, true)),
      ln_g_(Tensor::full({dim_h}, 1.0, true)),
      ln_b_(Tensor::zeros({dim_h}, true)),
      proj_(dim_h, rng) {
  if (attn_heads < 1 || dim_h % attn_heads != 0) {
    throw ContractError("san head: dim_h " + std::to_string(dim_h) +
                        " not divisible by " + std::to_string(attn_heads) +
                        " attention heads");
  }
}

Tensor SanHead::hidden_states(const Tensor& h_l,
                              const std::vector<int>& mask) const {
  Tensor bias = attention_mask_bias(mask);
  Tensor q = matmul(h_l, wq_);
  Tensor k = matmul(h_l, wk_);
  Tensor v = matmul(h_l, wv_);
  int dh = dim_h_ / attn_heads_;
  double scale_val = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> outs;
  outs.reserve(static_cast<std::size_t>(attn_heads_));
  for (int i = 0; i < attn_heads_; ++i) {
    Tensor qi = slice_cols(q, i * dh, (i + 1) * dh);
    Tensor ki = slice_cols(k, i * dh, (i + 1) * dh);
    Tensor vi = slice_cols(v, i * dh, (i + 1) * dh);
    Tensor logits = add(scale(matmul(qi, transpose(ki)), scale_val), bias);
    outs.push_back(matmul(softmax_rows(logits), vi));
  }
  Tensor attn = attn_heads_ == 1 ? outs[0] : concat_cols(outs);
  return layer_norm(add(h_l, attn), ln_g_, ln_b_);
}

Tensor SanHead::probs(const Tensor& h_l, const std::vector<int>& mask) const {
  return proj_(hidden_states(h_l, mask));
}

void SanHead::collect_params(ParamList& out) const {
  out.push_back({"head.san.wq", wq_});
  out.push_back({"head.san.wk", wk_});
  out.push_back({"head.san.wv", wv_});
  out.push_back({"head.san.ln_g", ln_g_});
  out.push_back({"head.san.ln_b", ln_b_});
  proj_.collect(out);
}

TfmHead::TfmHead(int dim_h, int attn_heads, int ffn_dim, Rng& rng)
    : attn_heads_(attn_heads),
      layer_(TransformerLayerParams::init(dim_h, ffn_dim, rng, true)),
      proj_(dim_h, rng) {
  if (attn_heads < 1 || dim_h % attn_heads != 0) {
    throw ContractError("tfm head: dim_h " + std::to_string(dim_h) +
                        " not divisible by " + std::to_string(attn_heads) +
                        " attention heads");
  }
}

Tensor TfmHead::probs(const Tensor& h_l, const std::vector<int>& mask) const {
  return proj_(transformer_layer(layer_, attn_heads_, h_l, mask));
}

void TfmHead::collect_params(ParamList& out) const {
  layer_.collect("head.tfm", out);
  proj_.collect(out);
}

std::unique_ptr<TokenHead> make_token_head(HeadKind kind, int dim_h,
                                           int attn_heads, int ffn_dim,
                                           Rng& rng) {
  switch (kind) {
    case HeadKind::LINEAR:
      return std::make_unique<LinearHead>(dim_h, rng);
    case HeadKind::GRU:
      return std::make_unique<GruHead>(dim_h, rng);
    case HeadKind::SAN:
      return std::make_unique<SanHead>(dim_h, attn_heads, rng);
    case HeadKind::TFM:
      return std::make_unique<TfmHead>(dim_h, attn_heads, ffn_dim, rng);
    case HeadKind::CRF:
      break;
  }
  throw ContractError("make_token_head: '" + head_name(kind) +
                      "' is not a token-level head");
}

}  // namespace absa
