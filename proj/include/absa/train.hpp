#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "absa/checkpoint.hpp"
#include "absa/corpus.hpp"
#include "absa/eval.hpp"
#include "absa/model.hpp"

namespace absa {

struct TrainConfig {
  double learning_rate = 1e-3;  // toy default; 2e-5 suits pretrained weights
  int batch_size = 8;
  int max_steps = 1500;
  int selection_start = 1000;  // first dev evaluation
  int selection_every = 100;   // dev evaluation period after that
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;  // global norm; <= 0 disables clipping
  double stop_f1 = -1.0;   // early stop once dev F1 reaches this (< 0: off)
};

// Adaptive-moment optimizer with bias correction and optional global-norm
// gradient clipping. Holds first/second moment state per parameter; step()
// reads .grad() and updates values in place.
class Adam {
 public:
  Adam(ParamList params, double lr, double beta1, double beta2, double eps,
       double grad_clip);
  void zero_grad();
  void step();
  int steps_taken() const { return t_; }

 private:
  ParamList params_;
  double lr_, beta1_, beta2_, eps_, grad_clip_;
  int t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct TrajectoryRow {
  int step = 0;
  double loss = 0.0;
  double dev_f1 = -1.0;  // < 0 means no dev evaluation at this step
};

// "step,loss,dev_f1" header + one row per step; dev_f1 column is empty on
// steps without a selection point.
std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);

struct TrainResult {
  Checkpoint best;
  std::vector<TrajectoryRow> trajectory;
};

// Span-level micro-F1 of the model's repaired predictions against gold
// spans. Examples must already carry token ids (apply_vocab).
EvalReport evaluate(const Model& model, const std::vector<Example>& examples);

// The training protocol: max_steps optimizer steps over shuffled batches,
// dev evaluation at each selection point, best-dev-F1 checkpoint returned.
// When no selection point falls inside the run (e.g. max_steps = 0), the
// final parameters are evaluated once and returned. TrainError on a
// non-finite loss, reporting the step.
TrainResult train(const TrainConfig& tc, const ModelConfig& mc,
                  const std::vector<Example>& train_set,
                  const std::vector<Example>& dev_set, const Vocab& vocab,
                  std::uint64_t seed);

struct SeedRun {
  std::uint64_t seed = 0;
  TrainResult result;
  EvalReport test;  // evaluated after reloading the best checkpoint
};

struct MultiSeedResult {
  std::vector<SeedRun> runs;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f1 = 0.0;
  double mean_dev_f1 = 0.0;
  std::string report() const;  // per-seed lines plus the averages
};

// One run per seed (optionally in parallel, each seed fully isolated),
// test-set evaluation through the reloaded checkpoint, arithmetic means.
MultiSeedResult multi_seed_run(const TrainConfig& tc, const ModelConfig& mc,
                               const std::vector<Example>& train_set,
                               const std::vector<Example>& dev_set,
                               const std::vector<Example>& test_set,
                               const Vocab& vocab, int parallel_seeds = 1);

struct FrozenComparison {
  MultiSeedResult fine_tuned;
  MultiSeedResult frozen;
  std::string report() const;
};

// Same seeds and data order twice, differing only in freeze_encoder.
FrozenComparison compare_frozen(const TrainConfig& tc, const ModelConfig& mc,
                                const std::vector<Example>& train_set,
                                const std::vector<Example>& dev_set,
                                const std::vector<Example>& test_set,
                                const Vocab& vocab, int parallel_seeds = 1);

}  // namespace absa
