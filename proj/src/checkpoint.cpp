#include "absa/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "absa/error.hpp"
#include "json.hpp"

namespace absa {

namespace {

using nlohmann::json;

json encoder_to_json(const EncoderConfig& cfg) {
  return json{{"vocab_size", cfg.vocab_size},
              {"max_len", cfg.max_len},
              {"num_layers", cfg.num_layers},
              {"dim_h", cfg.dim_h},
              {"num_attn_heads", cfg.num_attn_heads},
              {"ffn_dim", cfg.ffn_dim},
              {"num_segments", cfg.num_segments}};
}

EncoderConfig encoder_from_json(const json& j) {
  EncoderConfig cfg;
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.max_len = j.at("max_len").get<int>();
  cfg.num_layers = j.at("num_layers").get<int>();
  cfg.dim_h = j.at("dim_h").get<int>();
  cfg.num_attn_heads = j.at("num_attn_heads").get<int>();
  cfg.ffn_dim = j.at("ffn_dim").get<int>();
  cfg.num_segments = j.at("num_segments").get<int>();
  return cfg;
}

}  // namespace

Checkpoint snapshot(const Model& model, const Vocab& vocab,
                    double best_dev_f1, int best_step, std::uint64_t seed) {
  Checkpoint ckpt;
  ckpt.model = model.config();
  ckpt.vocab_tokens = vocab.id_to_token();
  for (const NamedParam& p : model.params())
    ckpt.params.emplace_back(p.name, p.tensor.data());
  ckpt.best_dev_f1 = best_dev_f1;
  ckpt.best_step = best_step;
  ckpt.seed = seed;
  return ckpt;
}

void restore_params(Model& model, const Checkpoint& ckpt) {
  ParamList live = model.params();
  if (live.size() != ckpt.params.size()) {
    throw ContractError("restore_params: model has " +
                        std::to_string(live.size()) +
                        " parameters, checkpoint has " +
                        std::to_string(ckpt.params.size()));
  }
  for (std::size_t i = 0; i < live.size(); ++i) {
    const auto& saved = ckpt.params[i];
    if (live[i].name != saved.first) {
      throw ContractError("restore_params: parameter " + std::to_string(i) +
                          " is '" + live[i].name + "' but checkpoint has '" +
                          saved.first + "'");
    }
    std::vector<double>& dst = live[i].tensor.data();
    if (dst.size() != saved.second.size()) {
      throw ContractError("restore_params: '" + saved.first + "' holds " +
                          std::to_string(dst.size()) +
                          " values, checkpoint has " +
                          std::to_string(saved.second.size()));
    }
    dst = saved.second;
  }
}

Model load_model(const Checkpoint& ckpt) {
  if (static_cast<int>(ckpt.vocab_tokens.size()) !=
      ckpt.model.encoder.vocab_size) {
    throw ContractError("checkpoint: vocab has " +
                        std::to_string(ckpt.vocab_tokens.size()) +
                        " tokens but the encoder expects " +
                        std::to_string(ckpt.model.encoder.vocab_size));
  }
  Rng rng(ckpt.seed);
  Model model(ckpt.model, rng);
  restore_params(model, ckpt);
  return model;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json j;
  j["format_version"] = ckpt.format_version;
  j["model"] = json{{"encoder", encoder_to_json(ckpt.model.encoder)},
                    {"head", head_name(ckpt.model.head)},
                    {"head_attn_heads", ckpt.model.head_attn_heads},
                    {"head_ffn_dim", ckpt.model.head_ffn_dim},
                    {"dropout", ckpt.model.dropout},
                    {"freeze_encoder", ckpt.model.freeze_encoder}};
  j["vocab"] = ckpt.vocab_tokens;
  j["best_dev_f1"] = ckpt.best_dev_f1;
  j["best_step"] = ckpt.best_step;
  j["seed"] = ckpt.seed;
  json params = json::array();
  for (const auto& p : ckpt.params)
    params.push_back(json{{"name", p.first}, {"values", p.second}});
  j["params"] = std::move(params);
  return j.dump();
}

Checkpoint checkpoint_from_json(const std::string& text,
                                const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(origin + ": not valid checkpoint JSON: " + e.what());
  }
  try {
    Checkpoint ckpt;
    ckpt.format_version = j.at("format_version").get<int>();
    if (ckpt.format_version != 1) {
      throw ParseError(origin + ": unsupported format_version " +
                       std::to_string(ckpt.format_version));
    }
    const json& m = j.at("model");
    ckpt.model.encoder = encoder_from_json(m.at("encoder"));
    ckpt.model.head = head_from_name(m.at("head").get<std::string>());
    ckpt.model.head_attn_heads = m.at("head_attn_heads").get<int>();
    ckpt.model.head_ffn_dim = m.at("head_ffn_dim").get<int>();
    ckpt.model.dropout = m.at("dropout").get<double>();
    ckpt.model.freeze_encoder = m.at("freeze_encoder").get<bool>();
    ckpt.vocab_tokens = j.at("vocab").get<std::vector<std::string>>();
    ckpt.best_dev_f1 = j.at("best_dev_f1").get<double>();
    ckpt.best_step = j.at("best_step").get<int>();
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    for (const json& p : j.at("params")) {
      ckpt.params.emplace_back(p.at("name").get<std::string>(),
                               p.at("values").get<std::vector<double>>());
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw ParseError(origin + ": malformed checkpoint: " + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << checkpoint_to_json(ckpt) << '\n';
  if (!out) throw ParseError(path + ": write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str(), path);
}

}  // namespace absa
