#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "absa/checkpoint.hpp"
#include "absa/error.hpp"
#include "absa/train.hpp"
#include "doctest.h"
#include "json.hpp"
#include "synth.hpp"

using namespace absa;

namespace {

ModelConfig tiny_model(int vocab_size, HeadKind kind = HeadKind::LINEAR) {
  ModelConfig mc;
  mc.encoder.vocab_size = vocab_size;
  mc.encoder.max_len = 20;
  mc.encoder.num_layers = 1;
  mc.encoder.dim_h = 8;
  mc.encoder.num_attn_heads = 2;
  mc.encoder.ffn_dim = 16;
  mc.head = kind;
  mc.head_attn_heads = 2;
  mc.head_ffn_dim = 16;
  mc.dropout = 0.1;
  return mc;
}

TrainConfig tiny_train() {
  TrainConfig tc;
  tc.batch_size = 4;
  tc.max_steps = 40;
  tc.selection_start = 10;
  tc.selection_every = 10;
  tc.seeds = {7};
  return tc;
}

// A single named scalar parameter with a preset gradient.
NamedParam scalar_param(const std::string& name, double value, double grad) {
  NamedParam p{name, Tensor::full({1}, value, true)};
  p.tensor.grad()[0] = grad;
  return p;
}

}  // namespace

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  NamedParam p = scalar_param("w", 1.25, 0.0);
  Adam adam({p}, 0.1, 0.9, 0.999, 1e-8, 1.0);
  adam.step();
  CHECK_EQ(p.tensor.v(0), 1.25);
}

TEST_CASE("adam: first step on g=1 with lr=0.1 moves by about 0.1") {
  // Bias correction makes m_hat = g and v_hat = g^2 on the first step, so
  // the update is lr * g / (|g| + eps), a hair under lr.
  NamedParam p = scalar_param("w", 1.0, 1.0);
  Adam adam({p}, 0.1, 0.9, 0.999, 1e-8, 0.0);
  adam.step();
  CHECK_EQ(adam.steps_taken(), 1);
  CHECK(std::fabs((1.0 - p.tensor.v(0)) - 0.1) < 1e-8);
}

TEST_CASE("adam: clipping at norm 1 scales a norm-10 gradient down 10x") {
  // The clipped run must match an unclipped run fed the pre-scaled gradient.
  NamedParam clipped = scalar_param("w", 2.0, 10.0);
  Adam adam_clipped({clipped}, 0.1, 0.9, 0.999, 1e-8, 1.0);
  adam_clipped.step();

  NamedParam manual = scalar_param("w", 2.0, 1.0);
  Adam adam_manual({manual}, 0.1, 0.9, 0.999, 1e-8, 0.0);
  adam_manual.step();

  CHECK_EQ(clipped.tensor.v(0), manual.tensor.v(0));
}

TEST_CASE("adam: the clipping norm is global across parameters") {
  // Gradients (3, 4) have global norm 5; with clip 1 both scale by 1/5.
  NamedParam a = scalar_param("a", 0.0, 3.0);
  NamedParam b = scalar_param("b", 0.0, 4.0);
  Adam clipped({a, b}, 0.1, 0.9, 0.999, 1e-8, 1.0);
  clipped.step();

  NamedParam a_ref = scalar_param("a", 0.0, 3.0 / 5.0);
  NamedParam b_ref = scalar_param("b", 0.0, 4.0 / 5.0);
  Adam manual({a_ref, b_ref}, 0.1, 0.9, 0.999, 1e-8, 0.0);
  manual.step();

  CHECK_EQ(a.tensor.v(0), a_ref.tensor.v(0));
  CHECK_EQ(b.tensor.v(0), b_ref.tensor.v(0));
}

TEST_CASE("adam: frozen parameters are rejected") {
  NamedParam p{"frozen", Tensor::full({1}, 1.0, false)};
  CHECK_THROWS_AS(Adam({p}, 0.1, 0.9, 0.999, 1e-8, 1.0), ContractError);
}

TEST_CASE("trajectory_csv: header plus one row per step, blank off-points") {
  std::vector<TrajectoryRow> rows = {{1, 0.5, -1.0}, {2, 0.25, 0.75}};
  CHECK_EQ(trajectory_csv(rows), "step,loss,dev_f1\n1,0.5,\n2,0.25,0.75\n");
}

TEST_CASE("train: config and data contracts are enforced") {
  testutil::SynthData data = testutil::make_synth_corpus(6, 3, 11);
  ModelConfig mc = tiny_model(data.vocab.size());
  TrainConfig tc = tiny_train();

  SUBCASE("selection_start beyond max_steps") {
    tc.selection_start = 100;
    tc.max_steps = 50;
    CHECK_THROWS_AS(train(tc, mc, data.train, data.dev, data.vocab, 1),
                    ConfigError);
  }
  SUBCASE("no seeds") {
    tc.seeds.clear();
    CHECK_THROWS_AS(train(tc, mc, data.train, data.dev, data.vocab, 1),
                    ConfigError);
  }
  SUBCASE("empty train set") {
    CHECK_THROWS_AS(train(tc, mc, {}, data.dev, data.vocab, 1),
                    ContractError);
  }
  SUBCASE("vocabulary not applied") {
    std::vector<Example> raw = data.train;
    for (Example& ex : raw) ex.token_ids.clear();
    CHECK_THROWS_AS(train(tc, mc, raw, data.dev, data.vocab, 1),
                    ContractError);
  }
  SUBCASE("encoder vocab size mismatch") {
    mc.encoder.vocab_size = data.vocab.size() + 5;
    CHECK_THROWS_AS(train(tc, mc, data.train, data.dev, data.vocab, 1),
                    ContractError);
  }
}

TEST_CASE("train: trajectory, selection points, and the argmax contract") {
  testutil::SynthData data = testutil::make_synth_corpus(8, 4, 29);
  ModelConfig mc = tiny_model(data.vocab.size());
  TrainConfig tc = tiny_train();
  TrainResult result = train(tc, mc, data.train, data.dev, data.vocab, 7);

  REQUIRE_EQ(result.trajectory.size(), 40);
  double best = -1.0;
  int best_step = -1;
  for (const TrajectoryRow& row : result.trajectory) {
    CHECK(std::isfinite(row.loss));
    bool at_selection = row.step >= 10 && (row.step - 10) % 10 == 0;
    CHECK_EQ(row.dev_f1 >= 0.0, at_selection);
    if (row.dev_f1 > best) {
      best = row.dev_f1;
      best_step = row.step;  // strict >: the earliest maximum wins
    }
  }
  CHECK_EQ(result.best.best_dev_f1, best);
  CHECK_EQ(result.best.best_step, best_step);
  CHECK_EQ(result.best.seed, 7);
  CHECK_EQ(result.best.vocab_tokens, data.vocab.id_to_token());
}

TEST_CASE("train: same seed twice is bitwise identical") {
  testutil::SynthData data = testutil::make_synth_corpus(8, 4, 29);
  ModelConfig mc = tiny_model(data.vocab.size(), HeadKind::GRU);
  TrainConfig tc = tiny_train();
  TrainResult a = train(tc, mc, data.train, data.dev, data.vocab, 7);
  TrainResult b = train(tc, mc, data.train, data.dev, data.vocab, 7);

  REQUIRE_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    CHECK_EQ(a.trajectory[i].loss, b.trajectory[i].loss);
    CHECK_EQ(a.trajectory[i].dev_f1, b.trajectory[i].dev_f1);
  }
  CHECK_EQ(checkpoint_to_json(a.best), checkpoint_to_json(b.best));

  TrainResult c = train(tc, mc, data.train, data.dev, data.vocab, 8);
  bool same_losses = a.trajectory.size() == c.trajectory.size();
  if (same_losses) {
    for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
      same_losses = same_losses && a.trajectory[i].loss == c.trajectory[i].loss;
    }
  }
  CHECK_FALSE(same_losses);  // a different seed actually changes the run
}

TEST_CASE("train: max_steps=0 returns the untrained model's dev F1") {
  testutil::SynthData data = testutil::make_synth_corpus(6, 3, 31);
  ModelConfig mc = tiny_model(data.vocab.size());
  TrainConfig tc = tiny_train();
  tc.max_steps = 0;
  tc.selection_start = 0;
  TrainResult result = train(tc, mc, data.train, data.dev, data.vocab, 3);

  CHECK(result.trajectory.empty());
  CHECK_EQ(result.best.best_step, 0);
  Rng rng(3);
  Model untouched(mc, rng);
  CHECK_EQ(result.best.best_dev_f1, evaluate(untouched, data.dev).f1);
}

TEST_CASE("train: stop_f1 ends the run at the first qualifying selection") {
  testutil::SynthData data = testutil::make_synth_corpus(8, 4, 29);
  ModelConfig mc = tiny_model(data.vocab.size());
  TrainConfig tc = tiny_train();
  tc.stop_f1 = 0.0;  // any dev F1 qualifies
  TrainResult result = train(tc, mc, data.train, data.dev, data.vocab, 7);
  CHECK_EQ(result.trajectory.size(), 10);  // stopped at the first selection
  CHECK_EQ(result.best.best_step, 10);
}

TEST_CASE("train: divergence raises a training error naming the step") {
  testutil::SynthData data = testutil::make_synth_corpus(6, 3, 11);
  ModelConfig mc = tiny_model(data.vocab.size());
  TrainConfig tc = tiny_train();
  tc.learning_rate = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(train(tc, mc, data.train, data.dev, data.vocab, 7),
                       doctest::Contains("not finite at step"), TrainError);
}

TEST_CASE("train: loss goes down on the synthetic corpus") {
  testutil::SynthData data = testutil::make_synth_corpus(8, 4, 29);
  ModelConfig mc = tiny_model(data.vocab.size());
  mc.dropout = 0.0;
  TrainConfig tc = tiny_train();
  tc.max_steps = 200;
  tc.selection_start = 200;
  tc.selection_every = 200;
  TrainResult result = train(tc, mc, data.train, data.dev, data.vocab, 7);

  auto mean_loss = [&](std::size_t from, std::size_t to) {
    double acc = 0.0;
    for (std::size_t i = from; i < to; ++i)
      acc += result.trajectory[i].loss;
    return acc / static_cast<double>(to - from);
  };
  CHECK_LT(mean_loss(180, 200), mean_loss(0, 20));
}

TEST_CASE("checkpoint: reload reproduces the dev F1 bitwise") {
  testutil::SynthData data = testutil::make_synth_corpus(8, 4, 29);
  for (HeadKind kind : {HeadKind::LINEAR, HeadKind::CRF}) {
    CAPTURE(head_name(kind));
    ModelConfig mc = tiny_model(data.vocab.size(), kind);
    TrainConfig tc = tiny_train();
    TrainResult result = train(tc, mc, data.train, data.dev, data.vocab, 7);

    Model reloaded = load_model(result.best);
    CHECK_EQ(evaluate(reloaded, data.dev).f1, result.best.best_dev_f1);
    CHECK_EQ(head_name(reloaded.config().head), head_name(kind));
  }
}

TEST_CASE("checkpoint: file round trip is exact") {
  testutil::SynthData data = testutil::make_synth_corpus(6, 3, 11);
  ModelConfig mc = tiny_model(data.vocab.size(), HeadKind::SAN);
  TrainConfig tc = tiny_train();
  tc.max_steps = 10;
  TrainResult result = train(tc, mc, data.train, data.dev, data.vocab, 5);

  const std::string path = "ckpt_roundtrip_test.json";
  save_checkpoint(path, result.best);
  Checkpoint loaded = load_checkpoint(path);
  CHECK_EQ(checkpoint_to_json(loaded), checkpoint_to_json(result.best));
  CHECK_EQ(loaded.params, result.best.params);  // bitwise double round trip
  std::remove(path.c_str());
}

TEST_CASE("checkpoint: malformed input and version drift are rejected") {
  CHECK_THROWS_AS(checkpoint_from_json("{ not json", "test"), ParseError);
  CHECK_THROWS_AS(load_checkpoint("no_such_checkpoint_file.json"),
                  ParseError);

  testutil::SynthData data = testutil::make_synth_corpus(4, 2, 11);
  ModelConfig mc = tiny_model(data.vocab.size());
  Rng rng(1);
  Model model(mc, rng);
  Checkpoint ckpt = snapshot(model, data.vocab, 0.0, 0, 1);
  nlohmann::json j = nlohmann::json::parse(checkpoint_to_json(ckpt));
  j["format_version"] = 2;
  CHECK_THROWS_AS(checkpoint_from_json(j.dump(), "test"), ParseError);
}

TEST_CASE("checkpoint: restoring into a mismatched architecture fails") {
  testutil::SynthData data = testutil::make_synth_corpus(4, 2, 11);
  Rng rng_a(1);
  Model linear(tiny_model(data.vocab.size(), HeadKind::LINEAR), rng_a);
  Checkpoint ckpt = snapshot(linear, data.vocab, 0.0, 0, 1);

  Rng rng_b(1);
  Model gru(tiny_model(data.vocab.size(), HeadKind::GRU), rng_b);
  CHECK_THROWS_AS(restore_params(gru, ckpt), ContractError);
}

TEST_CASE("multi_seed_run: single seed means equal that run's report") {
  testutil::SynthData data = testutil::make_synth_corpus(8, 4, 29);
  ModelConfig mc = tiny_model(data.vocab.size());
  TrainConfig tc = tiny_train();
  tc.max_steps = 20;
  tc.selection_start = 10;
  MultiSeedResult out = multi_seed_run(tc, mc, data.train, data.dev,
                                       data.dev, data.vocab);
  REQUIRE_EQ(out.runs.size(), 1);
  CHECK_EQ(out.mean_precision, out.runs[0].test.precision);
  CHECK_EQ(out.mean_recall, out.runs[0].test.recall);
  CHECK_EQ(out.mean_f1, out.runs[0].test.f1);
  CHECK_EQ(out.mean_dev_f1, out.runs[0].result.best.best_dev_f1);
}

TEST_CASE("multi_seed_run: duplicate seeds give identical runs") {
  testutil::SynthData data = testutil::make_synth_corpus(8, 4, 29);
  ModelConfig mc = tiny_model(data.vocab.size());
  TrainConfig tc = tiny_train();
  tc.max_steps = 20;
  tc.selection_start = 10;
  tc.seeds = {7, 7};
  MultiSeedResult out = multi_seed_run(tc, mc, data.train, data.dev,
                                       data.dev, data.vocab);
  REQUIRE_EQ(out.runs.size(), 2);
  CHECK_EQ(out.runs[0].test.line(), out.runs[1].test.line());
  CHECK_EQ(checkpoint_to_json(out.runs[0].result.best),
           checkpoint_to_json(out.runs[1].result.best));
}

TEST_CASE("multi_seed_run: parallel execution matches serial") {
  testutil::SynthData data = testutil::make_synth_corpus(8, 4, 29);
  ModelConfig mc = tiny_model(data.vocab.size());
  TrainConfig tc = tiny_train();
  tc.max_steps = 20;
  tc.selection_start = 10;
  tc.seeds = {3, 4, 5};
  MultiSeedResult serial = multi_seed_run(tc, mc, data.train, data.dev,
                                          data.dev, data.vocab, 1);
  MultiSeedResult parallel = multi_seed_run(tc, mc, data.train, data.dev,
                                            data.dev, data.vocab, 3);
  CHECK_EQ(serial.report(), parallel.report());

  double lo = serial.runs[0].test.f1, hi = lo;
  for (const SeedRun& r : serial.runs) {
    lo = std::min(lo, r.test.f1);
    hi = std::max(hi, r.test.f1);
  }
  CHECK_GE(serial.mean_f1, lo);
  CHECK_LE(serial.mean_f1, hi);
}

TEST_CASE("compare_frozen: frozen runs keep the encoder at initialization") {
  testutil::SynthData data = testutil::make_synth_corpus(8, 4, 29);
  ModelConfig mc = tiny_model(data.vocab.size());
  TrainConfig tc = tiny_train();
  tc.max_steps = 15;
  tc.selection_start = 5;
  tc.selection_every = 5;
  tc.seeds = {9};
  FrozenComparison cmp = compare_frozen(tc, mc, data.train, data.dev,
                                        data.dev, data.vocab);

  CHECK_EQ(cmp.fine_tuned.runs[0].seed, cmp.frozen.runs[0].seed);

  // The frozen checkpoint's encoder block must equal a fresh seed-9 init.
  ModelConfig frozen_mc = mc;
  frozen_mc.freeze_encoder = true;
  Rng rng(9);
  Model fresh(frozen_mc, rng);
  ParamList fresh_params = fresh.params();
  const Checkpoint& ckpt = cmp.frozen.runs[0].result.best;
  REQUIRE_EQ(ckpt.params.size(), fresh_params.size());
  bool head_changed = false;
  for (std::size_t i = 0; i < fresh_params.size(); ++i) {
    REQUIRE_EQ(ckpt.params[i].first, fresh_params[i].name);
    if (fresh_params[i].name.rfind("encoder.", 0) == 0) {
      CHECK_EQ(ckpt.params[i].second, fresh_params[i].tensor.data());
    } else if (ckpt.params[i].second != fresh_params[i].tensor.data()) {
      head_changed = true;
    }
  }
  CHECK(head_changed);  // training really moved the head
}
