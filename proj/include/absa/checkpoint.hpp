#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "absa/corpus.hpp"
#include "absa/model.hpp"

namespace absa {

// Self-describing snapshot of a trained model. Parameter values are stored
// as JSON numbers, which round-trip doubles bit-for-bit, so reloading
// reproduces evaluations exactly.
struct Checkpoint {
  int format_version = 1;
  ModelConfig model;
  std::vector<std::string> vocab_tokens;  // id order
  std::vector<std::pair<std::string, std::vector<double>>> params;
  double best_dev_f1 = 0.0;
  int best_step = 0;
  std::uint64_t seed = 0;
};

// Deep-copies the model's current parameters (name -> flat values).
Checkpoint snapshot(const Model& model, const Vocab& vocab,
                    double best_dev_f1, int best_step, std::uint64_t seed);

// Copies checkpoint values into an existing model by parameter name.
// ContractError when names or sizes do not line up.
void restore_params(Model& model, const Checkpoint& ckpt);

// Rebuilds the model a checkpoint describes (architecture + exact weights).
Model load_model(const Checkpoint& ckpt);

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text,
                                const std::string& origin);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace absa
