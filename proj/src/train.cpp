#include "absa/train.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "absa/error.hpp"
#include "absa/ops.hpp"
#include "absa/tags.hpp"

namespace absa {

namespace {

// Distinct deterministic streams per seed for init, data order and dropout.
constexpr std::uint64_t kDataStream = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kDropoutStream = 0xbf58476d1ce4e5b9ull;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_train_config(const TrainConfig& tc) {
  if (tc.learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (tc.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (tc.max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (tc.selection_every < 1) throw ConfigError("selection_every must be >= 1");
  if (tc.selection_start < 0) throw ConfigError("selection_start must be >= 0");
  if (tc.selection_start > tc.max_steps) {
    throw ConfigError("selection_start " + std::to_string(tc.selection_start) +
                      " exceeds max_steps " + std::to_string(tc.max_steps));
  }
  if (tc.seeds.empty()) throw ConfigError("at least one seed is required");
}

void check_examples_ready(const std::vector<Example>& examples,
                          const std::string& which, const Vocab& vocab,
                          int max_len) {
  if (examples.empty())
    throw ContractError(which + " set is empty");
  for (const Example& ex : examples) {
    if (ex.token_ids.size() != ex.tokens.size()) {
      throw ContractError(which + " set: vocabulary not applied "
                          "(token_ids missing)");
    }
    for (int id : ex.token_ids) {
      if (id < 0 || id >= vocab.size()) {
        throw ContractError(which + " set: token id " + std::to_string(id) +
                            " outside the vocabulary");
      }
    }
  }
  reject_longer_than(examples, max_len, which);
}

double mean_of(const std::vector<SeedRun>& runs,
               double (*pick)(const SeedRun&)) {
  double acc = 0.0;
  for (const SeedRun& r : runs) acc += pick(r);
  return acc / static_cast<double>(runs.size());
}

}  // namespace

Adam::Adam(ParamList params, double lr, double beta1, double beta2,
           double eps, double grad_clip)
    : params_(std::move(params)),
      lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      grad_clip_(grad_clip) {
  for (const NamedParam& p : params_) {
    if (!p.tensor.requires_grad()) {
      throw ContractError("optimizer given frozen parameter '" + p.name +
                          "'");
    }
    m_.emplace_back(p.tensor.data().size(), 0.0);
    v_.emplace_back(p.tensor.data().size(), 0.0);
  }
}

void Adam::zero_grad() {
  for (NamedParam& p : params_) p.tensor.zero_grad();
}

void Adam::step() {
  ++t_;
  double sq_norm = 0.0;
  for (const NamedParam& p : params_) {
    for (double g : p.tensor.grad()) sq_norm += g * g;
  }
  double norm = std::sqrt(sq_norm);
  double clip_factor =
      grad_clip_ > 0.0 && norm > grad_clip_ ? grad_clip_ / norm : 1.0;

  double bias1 = 1.0 - std::pow(beta1_, t_);
  double bias2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    std::vector<double>& w = params_[i].tensor.data();
    const std::vector<double>& grad = params_[i].tensor.grad();
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      double g = grad[k] * clip_factor;
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g;
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g * g;
      double m_hat = m[k] / bias1;
      double v_hat = v[k] / bias2;
      w[k] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
  std::ostringstream out;
  out << "step,loss,dev_f1\n";
  for (const TrajectoryRow& r : rows) {
    out << r.step << ',' << fmt17(r.loss) << ',';
    if (r.dev_f1 >= 0.0) out << fmt17(r.dev_f1);
    out << '\n';
  }
  return out.str();
}

EvalReport evaluate(const Model& model, const std::vector<Example>& examples) {
  std::vector<std::vector<AspectSpan>> gold, pred;
  gold.reserve(examples.size());
  pred.reserve(examples.size());
  for (const Example& ex : examples) {
    if (ex.token_ids.size() != ex.tokens.size()) {
      throw ContractError("evaluate: vocabulary not applied "
                          "(token_ids missing)");
    }
    gold.push_back(ex.spans);
    pred.push_back(tags_to_spans(model.predict_tags(ex.token_ids)));
  }
  return micro_prf(gold, pred);
}

TrainResult train(const TrainConfig& tc, const ModelConfig& mc,
                  const std::vector<Example>& train_set,
                  const std::vector<Example>& dev_set, const Vocab& vocab,
                  std::uint64_t seed) {
  check_train_config(tc);
  if (mc.encoder.vocab_size != vocab.size()) {
    throw ContractError("train: encoder vocab_size " +
                        std::to_string(mc.encoder.vocab_size) +
                        " does not match the vocabulary (" +
                        std::to_string(vocab.size()) + ")");
  }
  check_examples_ready(train_set, "train", vocab, mc.encoder.max_len);
  check_examples_ready(dev_set, "dev", vocab, mc.encoder.max_len);

  Rng init_rng(seed);
  Rng data_rng(seed + kDataStream);
  Rng dropout_rng(seed + kDropoutStream);
  Model model(mc, init_rng);
  Adam adam(model.trainable(), tc.learning_rate, tc.beta1, tc.beta2,
            tc.adam_eps, tc.grad_clip);

  std::vector<Batch> batches;
  std::size_t cursor = 0;
  auto next_batch = [&]() -> const Batch& {
    if (cursor == batches.size()) {
      batches = make_batches(train_set, tc.batch_size, data_rng.next_u64());
      cursor = 0;
    }
    return batches[cursor++];
  };

  TrainResult result;
  double best_f1 = -1.0;
  bool selected = false;
  for (int step = 1; step <= tc.max_steps; ++step) {
    const Batch& batch = next_batch();
    adam.zero_grad();
    double loss_value = 0.0;
    {
      Tape tape;
      Tensor loss = model.batch_loss(batch, dropout_rng, true);
      loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        throw TrainError("training diverged: loss is not finite at step " +
                         std::to_string(step));
      }
      backward(loss);
    }
    adam.step();

    TrajectoryRow row;
    row.step = step;
    row.loss = loss_value;
    bool selection_point = step >= tc.selection_start &&
                           (step - tc.selection_start) % tc.selection_every ==
                               0;
    if (selection_point) {
      double f1 = evaluate(model, dev_set).f1;
      row.dev_f1 = f1;
      selected = true;
      if (f1 > best_f1) {
        best_f1 = f1;
        result.best = snapshot(model, vocab, f1, step, seed);
      }
    }
    result.trajectory.push_back(row);
    if (selection_point && tc.stop_f1 >= 0.0 && best_f1 >= tc.stop_f1) break;
  }

  if (!selected) {
    // No selection point fell inside the run (max_steps = 0, or an early
    // stop window): the final parameters are the checkpoint.
    double f1 = evaluate(model, dev_set).f1;
    result.best = snapshot(model, vocab, f1, tc.max_steps, seed);
  }
  return result;
}

std::string MultiSeedResult::report() const {
  std::ostringstream out;
  for (const SeedRun& r : runs) {
    out << "seed=" << r.seed << " best_step=" << r.result.best.best_step
        << " dev_f1=" << fmt17(r.result.best.best_dev_f1)
        << " test: " << r.test.line() << '\n';
  }
  out << "mean: P=" << fmt17(mean_precision) << " R=" << fmt17(mean_recall)
      << " F1=" << fmt17(mean_f1) << '\n';
  out << "mean_dev_f1=" << fmt17(mean_dev_f1) << '\n';
  return out.str();
}

MultiSeedResult multi_seed_run(const TrainConfig& tc, const ModelConfig& mc,
                               const std::vector<Example>& train_set,
                               const std::vector<Example>& dev_set,
                               const std::vector<Example>& test_set,
                               const Vocab& vocab, int parallel_seeds) {
  check_train_config(tc);
  if (test_set.empty()) throw ContractError("test set is empty");

  MultiSeedResult out;
  out.runs.resize(tc.seeds.size());
  auto run_one = [&](std::size_t i) {
    SeedRun run;
    run.seed = tc.seeds[i];
    run.result = train(tc, mc, train_set, dev_set, vocab, tc.seeds[i]);
    Model reloaded = load_model(run.result.best);
    run.test = evaluate(reloaded, test_set);
    out.runs[i] = std::move(run);
  };

  int workers = std::max(1, std::min<int>(parallel_seeds,
                                          static_cast<int>(tc.seeds.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < tc.seeds.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(
        static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        try {
          for (std::size_t i = next++; i < tc.seeds.size(); i = next++)
            run_one(i);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
      if (e) std::rethrow_exception(e);
  }

  out.mean_precision =
      mean_of(out.runs, [](const SeedRun& r) { return r.test.precision; });
  out.mean_recall =
      mean_of(out.runs, [](const SeedRun& r) { return r.test.recall; });
  out.mean_f1 = mean_of(out.runs, [](const SeedRun& r) { return r.test.f1; });
  out.mean_dev_f1 = mean_of(
      out.runs, [](const SeedRun& r) { return r.result.best.best_dev_f1; });
  return out;
}

std::string FrozenComparison::report() const {
  std::ostringstream out;
  out << "fine_tuned: mean_dev_f1=" << fmt17(fine_tuned.mean_dev_f1)
      << " mean_test_f1=" << fmt17(fine_tuned.mean_f1) << '\n';
  out << "frozen: mean_dev_f1=" << fmt17(frozen.mean_dev_f1)
      << " mean_test_f1=" << fmt17(frozen.mean_f1) << '\n';
  return out.str();
}

FrozenComparison compare_frozen(const TrainConfig& tc, const ModelConfig& mc,
                                const std::vector<Example>& train_set,
                                const std::vector<Example>& dev_set,
                                const std::vector<Example>& test_set,
                                const Vocab& vocab, int parallel_seeds) {
  FrozenComparison cmp;
  ModelConfig fine = mc;
  fine.freeze_encoder = false;
  cmp.fine_tuned = multi_seed_run(tc, fine, train_set, dev_set, test_set,
                                  vocab, parallel_seeds);
  ModelConfig frozen = mc;
  frozen.freeze_encoder = true;
  cmp.frozen = multi_seed_run(tc, frozen, train_set, dev_set, test_set,
                              vocab, parallel_seeds);
  return cmp;
}

}  // namespace absa
