#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "absa/checkpoint.hpp"
#include "absa/cli.hpp"
#include "absa/error.hpp"
#include "doctest.h"
#include "synth.hpp"

using namespace absa;
namespace fs = std::filesystem;

namespace {

// Runs the command line in-process with captured stdout/stderr.
int run_cli(std::vector<std::string> args, std::string* out = nullptr,
            std::string* err = nullptr) {
  args.insert(args.begin(), "absa");
  std::vector<std::vector<char>> storage;
  std::vector<char*> argv;
  for (const std::string& a : args) {
    storage.emplace_back(a.begin(), a.end());
    storage.back().push_back('\0');
  }
  for (std::vector<char>& s : storage) argv.push_back(s.data());

  std::ostringstream cout_buf, cerr_buf;
  std::streambuf* old_out = std::cout.rdbuf(cout_buf.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(cerr_buf.rdbuf());
  int code = cli_main(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  if (out) *out = cout_buf.str();
  if (err) *err = cerr_buf.str();
  return code;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
}

// Shared scratch directory with a small rendered corpus and a finished
// training run; built once because training, though tiny, dominates runtime.
struct CliFixture {
  fs::path dir = "cli_test_tmp";
  fs::path train_file = dir / "train.conll";
  fs::path dev_file = dir / "dev.conll";
  fs::path run_dir = dir / "run";
  fs::path ckpt = run_dir / "seed_1" / "checkpoint.json";

  CliFixture() {
    fs::remove_all(dir);
    fs::create_directories(dir);
    testutil::SynthData data = testutil::make_synth_corpus(8, 4, 92);
    spit(train_file, render_conll(data.train));
    spit(dev_file, render_conll(data.dev));
    std::string out;
    int code = run_cli({"train", "--train_file", train_file.string(),
                        "--dev_file", dev_file.string(), "--out_dir",
                        run_dir.string(), "--max_steps", "12",
                        "--selection_start", "4", "--selection_every", "4",
                        "--seeds", "1", "--num_layers", "1", "--dim_h", "8",
                        "--num_attn_heads", "2", "--ffn_dim", "16",
                        "--max_len", "20", "--batch_size", "4"},
                       &out);
    REQUIRE_EQ(code, 0);
    train_stdout = out;
  }
  std::string train_stdout;
};

CliFixture& fixture() {
  static CliFixture fx;
  return fx;
}

}  // namespace

TEST_CASE("config: every key parses and bad values are loud") {
  RunConfig cfg;
  set_config_key(cfg, "head", "crf");
  CHECK_EQ(head_name(cfg.model.head), "crf");
  set_config_key(cfg, "dim_h", "16");
  CHECK_EQ(cfg.model.encoder.dim_h, 16);
  set_config_key(cfg, "dropout", "0.25");
  CHECK_EQ(cfg.model.dropout, 0.25);
  set_config_key(cfg, "freeze_encoder", "true");
  CHECK(cfg.model.freeze_encoder);
  set_config_key(cfg, "seeds", "4, 8,15");
  CHECK_EQ(cfg.train.seeds, (std::vector<std::uint64_t>{4, 8, 15}));
  set_config_key(cfg, "train_file", "a/b.conll");
  CHECK_EQ(cfg.train_file, "a/b.conll");

  CHECK_THROWS_WITH_AS(set_config_key(cfg, "heaad", "crf"),
                       doctest::Contains("heaad"), ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "dim_h", "eight"), ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "dropout", "0.1x"), ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "freeze_encoder", "maybe"),
                  ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "seeds", "1,two"), ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "head", "lstm"), ConfigError);
}

TEST_CASE("config: file grammar with comments, blanks, and last-wins") {
  RunConfig cfg;
  apply_config_text(cfg,
                    "# a comment\n"
                    "\n"
                    "max_steps = 50   # trailing comment\n"
                    "head=san\n"
                    "  batch_size   =   3\n"
                    "max_steps = 60\n",
                    "test.cfg");
  CHECK_EQ(cfg.train.max_steps, 60);
  CHECK_EQ(head_name(cfg.model.head), "san");
  CHECK_EQ(cfg.train.batch_size, 3);

  CHECK_THROWS_WITH_AS(apply_config_text(cfg, "just words\n", "test.cfg"),
                       doctest::Contains("test.cfg:1"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "= 5\n", "test.cfg"), ConfigError);
}

TEST_CASE("config: render and reparse is a fixed point") {
  RunConfig cfg;
  set_config_key(cfg, "head", "tfm");
  set_config_key(cfg, "seeds", "11,12");
  set_config_key(cfg, "learning_rate", "0.0025");
  set_config_key(cfg, "freeze_encoder", "true");
  set_config_key(cfg, "train_file", "x.conll");
  std::string rendered = render_config(cfg);

  RunConfig reparsed;
  apply_config_text(reparsed, rendered, "rendered");
  CHECK_EQ(render_config(reparsed), rendered);
}

TEST_CASE("cli: usage and unknown commands exit 1") {
  std::string err;
  CHECK_EQ(run_cli({}, nullptr, &err), 1);
  CHECK(err.find("usage:") != std::string::npos);
  CHECK_EQ(run_cli({"frobnicate"}, nullptr, &err), 1);
  CHECK(err.find("unknown command") != std::string::npos);
  CHECK_EQ(run_cli({"train", "--heaad", "crf"}, nullptr, &err), 1);
  CHECK(err.find("heaad") != std::string::npos);
  CHECK_EQ(run_cli({"train", "--max_steps"}, nullptr, &err), 1);
  CHECK_EQ(run_cli({"train"}, nullptr, &err), 1);  // train_file missing
}

TEST_CASE("cli: train writes its artifacts under out_dir") {
  CliFixture& fx = fixture();
  CHECK(fs::exists(fx.run_dir / "resolved.cfg"));
  CHECK(fs::exists(fx.run_dir / "report.txt"));
  CHECK(fs::exists(fx.run_dir / "seed_1" / "checkpoint.json"));
  CHECK(fs::exists(fx.run_dir / "seed_1" / "trajectory.csv"));

  CHECK_EQ(slurp(fx.run_dir / "report.txt"), fx.train_stdout);
  std::string trajectory = slurp(fx.run_dir / "seed_1" / "trajectory.csv");
  CHECK_EQ(trajectory.rfind("step,loss,dev_f1\n", 0), 0);

  // The resolved config reflects overrides and reproduces the run setup.
  std::string resolved = slurp(fx.run_dir / "resolved.cfg");
  CHECK(resolved.find("max_steps = 12") != std::string::npos);
  CHECK(resolved.find("head = linear") != std::string::npos);
  RunConfig reparsed;
  apply_config_text(reparsed, resolved, "resolved.cfg");
  CHECK_EQ(render_config(reparsed), resolved);
}

TEST_CASE("cli: eval prints the report and is deterministic") {
  CliFixture& fx = fixture();
  std::string out1, out2;
  REQUIRE_EQ(run_cli({"eval", "--checkpoint", fx.ckpt.string(), "--data",
                      fx.dev_file.string()},
                     &out1),
             0);
  REQUIRE_EQ(run_cli({"eval", "--checkpoint", fx.ckpt.string(), "--data",
                      fx.dev_file.string()},
                     &out2),
             0);
  CHECK_EQ(out1, out2);
  CHECK_EQ(out1.rfind("P=", 0), 0);
  CHECK(out1.find("\ntp=") != std::string::npos);
  CHECK(out1.find("f1=") != std::string::npos);

  // The printed F1 agrees with the checkpoint's own dev score at the
  // printed precision.
  Checkpoint ckpt = load_checkpoint(fx.ckpt.string());
  char expect[32];
  std::snprintf(expect, sizeof(expect), "f1=%.4f", ckpt.best_dev_f1);
  CHECK(out1.find(expect) != std::string::npos);
}

TEST_CASE("cli: eval with empty gold and no hits reports zeros") {
  CliFixture& fx = fixture();
  fs::path empty_gold = fx.dir / "empty_gold.conll";
  spit(empty_gold, "the\tO\nprice\tO\n\nit\tO\nwas\tO\n");
  std::string out;
  REQUIRE_EQ(run_cli({"eval", "--checkpoint", fx.ckpt.string(), "--data",
                      empty_gold.string()},
                     &out),
             0);
  CHECK(out.find("tp=0") != std::string::npos);
  CHECK(out.find("precision=0.0000") != std::string::npos);
  CHECK(out.find("recall=0.0000") != std::string::npos);
  CHECK(out.find("f1=0.0000") != std::string::npos);
}

TEST_CASE("cli: predict tags raw text and warns once per unknown token") {
  CliFixture& fx = fixture();
  fs::path input = fx.dir / "raw.txt";
  spit(input, "the price was zarblatt zarblatt\n\nfood is great\n");
  std::string out, err;
  REQUIRE_EQ(run_cli({"predict", "--checkpoint", fx.ckpt.string(),
                      "--input", input.string()},
                     &out, &err),
             0);

  // token<TAB>tag lines, one block per sentence, each with a span summary.
  CHECK(out.find("the\t") != std::string::npos);
  CHECK(out.find("zarblatt\t") != std::string::npos);
  CHECK(out.find("food\t") != std::string::npos);
  CHECK_EQ(std::count(out.begin(), out.end(), '\t'), 8);
  CHECK_EQ(std::count(out.begin(), out.end(), '#'), 2);  // one per sentence

  // The unknown token warns once even though it appears twice.
  std::size_t first = err.find("zarblatt");
  REQUIRE(first != std::string::npos);
  CHECK_EQ(err.find("zarblatt", first + 1), std::string::npos);
  CHECK(err.find("<unk>") != std::string::npos);
}

TEST_CASE("cli: predict accepts annotated input and empty input") {
  CliFixture& fx = fixture();
  std::string out;
  REQUIRE_EQ(run_cli({"predict", "--checkpoint", fx.ckpt.string(),
                      "--input", fx.dev_file.string()},
                     &out),
             0);
  CHECK(out.find('\t') != std::string::npos);
  CHECK(out.find("# spans:") != std::string::npos);

  fs::path empty = fx.dir / "empty.txt";
  spit(empty, "");
  REQUIRE_EQ(run_cli({"predict", "--checkpoint", fx.ckpt.string(),
                      "--input", empty.string()},
                     &out),
             0);
  CHECK_EQ(out, "");
}

TEST_CASE("cli: predictions are valid tag sequences") {
  CliFixture& fx = fixture();
  fs::path input = fx.dir / "raw2.txt";
  spit(input, "battery life was great but the price is dreadful .\n");
  std::string out;
  REQUIRE_EQ(run_cli({"predict", "--checkpoint", fx.ckpt.string(),
                      "--input", input.string()},
                     &out),
             0);
  std::vector<int> tags;
  std::istringstream lines(out);
  std::string line;
  while (std::getline(lines, line)) {
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) continue;
    tags.push_back(tag_from_name(line.substr(tab + 1)));
  }
  REQUIRE_EQ(tags.size(), 10);
  CHECK(is_valid_tags(tags));
}

TEST_CASE("cli: stats prints dataset counts for both formats") {
  CliFixture& fx = fixture();
  std::string out;
  REQUIRE_EQ(run_cli({"stats", "--data", fx.train_file.string()}, &out), 0);
  testutil::SynthData data = testutil::make_synth_corpus(8, 4, 92);
  auto [sentences, spans] = corpus_stats(data.train);
  std::ostringstream expect;
  expect << "sentences=" << sentences << "\naspects=" << spans << '\n';
  CHECK_EQ(out, expect.str());

  fs::path jsonl = fx.dir / "mini.jsonl";
  spit(jsonl,
       "{\"tokens\": [\"good\", \"food\"], "
       "\"spans\": [[1, 1, \"POS\"]]}\n");
  REQUIRE_EQ(run_cli({"stats", "--data", jsonl.string()}, &out), 0);
  CHECK_EQ(out, "sentences=1\naspects=1\n");
}

TEST_CASE("cli: config file plus overrides, overrides win") {
  CliFixture& fx = fixture();
  fs::path cfg_file = fx.dir / "base.cfg";
  spit(cfg_file,
       "train_file = " + fx.train_file.string() + "\n" +
       "dev_file = " + fx.dev_file.string() + "\n" +
       "max_steps = 4\nselection_start = 2\nselection_every = 2\n" +
       "seeds = 1\nnum_layers = 1\ndim_h = 8\nnum_attn_heads = 2\n" +
       "ffn_dim = 16\nmax_len = 20\nhead = gru\n");
  fs::path out_dir = fx.dir / "run_override";
  std::string out;
  REQUIRE_EQ(run_cli({"train", "--config", cfg_file.string(), "--out_dir",
                      out_dir.string(), "--head", "san"},
                     &out),
             0);
  std::string resolved = slurp(out_dir / "resolved.cfg");
  CHECK(resolved.find("head = san") != std::string::npos);
  CHECK(resolved.find("max_steps = 4") != std::string::npos);
  CHECK(fs::exists(out_dir / "seed_1" / "checkpoint.json"));
}

TEST_CASE("cli: runtime failures exit 2") {
  CliFixture& fx = fixture();
  std::string err;
  CHECK_EQ(run_cli({"eval", "--checkpoint", "missing.json", "--data",
                    fx.dev_file.string()},
                   nullptr, &err),
           2);
  CHECK(err.rfind("error:", 0) == 0);

  fs::path bad = fx.dir / "bad.conll";
  spit(bad, "token-without-tag\n");
  CHECK_EQ(run_cli({"stats", "--data", bad.string()}, nullptr, &err), 2);
}
