#include "absa/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "absa/checkpoint.hpp"
#include "absa/error.hpp"
#include "absa/gradcheck.hpp"

namespace absa {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + value +
                      "' as an integer");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + value +
                      "' as a number");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" +
                    value + "'");
}

std::vector<std::uint64_t> to_seeds(const std::string& key,
                                    const std::string& value) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    try {
      std::size_t pos = 0;
      seeds.push_back(std::stoull(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': cannot parse seed '" + item +
                        "'");
    }
  }
  if (seeds.empty())
    throw ConfigError("key '" + key + "': at least one seed is required");
  return seeds;
}

std::string seeds_str(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

std::string read_file(const std::string& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(what + " '" + path + "': cannot read");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace

void set_config_key(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "train_file") cfg.train_file = value;
  else if (key == "dev_file") cfg.dev_file = value;
  else if (key == "test_file") cfg.test_file = value;
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "vocab_min_freq") cfg.vocab_min_freq = to_int(key, value);
  else if (key == "parallel_seeds") cfg.parallel_seeds = to_int(key, value);
  else if (key == "head") cfg.model.head = head_from_name(value);
  else if (key == "max_len") cfg.model.encoder.max_len = to_int(key, value);
  else if (key == "num_layers")
    cfg.model.encoder.num_layers = to_int(key, value);
  else if (key == "dim_h") cfg.model.encoder.dim_h = to_int(key, value);
  else if (key == "num_attn_heads")
    cfg.model.encoder.num_attn_heads = to_int(key, value);
  else if (key == "ffn_dim") cfg.model.encoder.ffn_dim = to_int(key, value);
  else if (key == "head_attn_heads")
    cfg.model.head_attn_heads = to_int(key, value);
  else if (key == "head_ffn_dim") cfg.model.head_ffn_dim = to_int(key, value);
  else if (key == "dropout") cfg.model.dropout = to_double(key, value);
  else if (key == "freeze_encoder")
    cfg.model.freeze_encoder = to_bool(key, value);
  else if (key == "learning_rate")
    cfg.train.learning_rate = to_double(key, value);
  else if (key == "batch_size") cfg.train.batch_size = to_int(key, value);
  else if (key == "max_steps") cfg.train.max_steps = to_int(key, value);
  else if (key == "selection_start")
    cfg.train.selection_start = to_int(key, value);
  else if (key == "selection_every")
    cfg.train.selection_every = to_int(key, value);
  else if (key == "seeds") cfg.train.seeds = to_seeds(key, value);
  else if (key == "beta1") cfg.train.beta1 = to_double(key, value);
  else if (key == "beta2") cfg.train.beta2 = to_double(key, value);
  else if (key == "adam_eps") cfg.train.adam_eps = to_double(key, value);
  else if (key == "grad_clip") cfg.train.grad_clip = to_double(key, value);
  else if (key == "stop_f1") cfg.train.stop_f1 = to_double(key, value);
  else throw ConfigError("unknown key '" + key + "'");
}

void apply_config_text(RunConfig& cfg, const std::string& text,
                       const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": empty key");
    }
    set_config_key(cfg, key, value);
  }
}

std::string render_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "# data\n";
  out << "train_file = " << cfg.train_file << '\n';
  out << "dev_file = " << cfg.dev_file << '\n';
  out << "test_file = " << cfg.test_file << '\n';
  out << "out_dir = " << cfg.out_dir << '\n';
  out << "vocab_min_freq = " << cfg.vocab_min_freq << '\n';
  out << "\n# model\n";
  out << "head = " << head_name(cfg.model.head) << '\n';
  out << "max_len = " << cfg.model.encoder.max_len << '\n';
  out << "num_layers = " << cfg.model.encoder.num_layers << '\n';
  out << "dim_h = " << cfg.model.encoder.dim_h << '\n';
  out << "num_attn_heads = " << cfg.model.encoder.num_attn_heads << '\n';
  out << "ffn_dim = " << cfg.model.encoder.ffn_dim << '\n';
  out << "head_attn_heads = " << cfg.model.head_attn_heads << '\n';
  out << "head_ffn_dim = " << cfg.model.head_ffn_dim << '\n';
  out << "dropout = " << fmt17(cfg.model.dropout) << '\n';
  out << "freeze_encoder = " << (cfg.model.freeze_encoder ? "true" : "false")
      << '\n';
  out << "\n# training\n";
  out << "learning_rate = " << fmt17(cfg.train.learning_rate) << '\n';
  out << "batch_size = " << cfg.train.batch_size << '\n';
  out << "max_steps = " << cfg.train.max_steps << '\n';
  out << "selection_start = " << cfg.train.selection_start << '\n';
  out << "selection_every = " << cfg.train.selection_every << '\n';
  out << "seeds = " << seeds_str(cfg.train.seeds) << '\n';
  out << "beta1 = " << fmt17(cfg.train.beta1) << '\n';
  out << "beta2 = " << fmt17(cfg.train.beta2) << '\n';
  out << "adam_eps = " << fmt17(cfg.train.adam_eps) << '\n';
  out << "grad_clip = " << fmt17(cfg.train.grad_clip) << '\n';
  out << "stop_f1 = " << fmt17(cfg.train.stop_f1) << '\n';
  out << "parallel_seeds = " << cfg.parallel_seeds << '\n';
  return out.str();
}

namespace {

void usage(std::ostream& out) {
  out << "usage: absa <command> [--key value ...]\n"
         "commands:\n"
         "  train      --config FILE and/or config overrides\n"
         "  eval       --checkpoint FILE --data FILE\n"
         "  predict    --checkpoint FILE --input FILE\n"
         "  gradcheck  [--tol X] [--corrupt true]\n"
         "  stats      --data FILE\n";
}

// Fixed-vocabulary `--key value` pairs for the non-train commands.
std::map<std::string, std::string> parse_flag_map(
    const std::vector<std::string>& args,
    const std::set<std::string>& allowed) {
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < args.size(); i += 2) {
    if (args[i].rfind("--", 0) != 0) {
      throw ConfigError("expected --key, got '" + args[i] + "'");
    }
    std::string key = args[i].substr(2);
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "'");
    if (i + 1 >= args.size()) {
      throw ConfigError("flag --" + key + " needs a value");
    }
    out[key] = args[i + 1];
  }
  return out;
}

const std::string& require_flag(
    const std::map<std::string, std::string>& flags, const std::string& key) {
  auto it = flags.find(key);
  if (it == flags.end()) throw ConfigError("flag --" + key + " is required");
  return it->second;
}

RunConfig resolve_run_config(const std::vector<std::string>& args) {
  RunConfig cfg;
  // The config file applies first regardless of flag position; the
  // remaining overrides apply in the order written.
  for (std::size_t i = 0; i < args.size(); i += 2) {
    if (args[i].rfind("--", 0) != 0) {
      throw ConfigError("expected --key, got '" + args[i] + "'");
    }
    if (i + 1 >= args.size()) {
      throw ConfigError("flag " + args[i] + " needs a value");
    }
    if (args[i] == "--config") {
      apply_config_text(cfg, read_file(args[i + 1], "config file"),
                        args[i + 1]);
    }
  }
  for (std::size_t i = 0; i < args.size(); i += 2) {
    if (args[i] == "--config") continue;
    set_config_key(cfg, args[i].substr(2), args[i + 1]);
  }
  return cfg;
}

int cmd_train(const std::vector<std::string>& args) {
  namespace fs = std::filesystem;
  RunConfig cfg = resolve_run_config(args);
  if (cfg.train_file.empty()) throw ConfigError("train_file is required");
  if (cfg.dev_file.empty()) throw ConfigError("dev_file is required");

  std::vector<Example> train_set = read_dataset(cfg.train_file);
  std::vector<Example> dev_set = read_dataset(cfg.dev_file);
  std::vector<Example> test_set =
      cfg.test_file.empty() ? dev_set : read_dataset(cfg.test_file);

  Vocab vocab = Vocab::build(train_set, cfg.vocab_min_freq);
  apply_vocab(train_set, vocab);
  apply_vocab(dev_set, vocab);
  apply_vocab(test_set, vocab);

  ModelConfig mc = cfg.model;
  mc.encoder.vocab_size = vocab.size();

  fs::create_directories(cfg.out_dir);
  write_file((fs::path(cfg.out_dir) / "resolved.cfg").string(),
             render_config(cfg));

  MultiSeedResult result =
      multi_seed_run(cfg.train, mc, train_set, dev_set, test_set, vocab,
                     cfg.parallel_seeds);

  for (const SeedRun& run : result.runs) {
    fs::path seed_dir =
        fs::path(cfg.out_dir) / ("seed_" + std::to_string(run.seed));
    fs::create_directories(seed_dir);
    save_checkpoint((seed_dir / "checkpoint.json").string(),
                    run.result.best);
    write_file((seed_dir / "trajectory.csv").string(),
               trajectory_csv(run.result.trajectory));
  }
  write_file((fs::path(cfg.out_dir) / "report.txt").string(),
             result.report());
  std::cout << result.report();
  return 0;
}

int cmd_eval(const std::vector<std::string>& args) {
  auto flags = parse_flag_map(args, {"checkpoint", "data"});
  Checkpoint ckpt = load_checkpoint(require_flag(flags, "checkpoint"));
  Model model = load_model(ckpt);
  Vocab vocab = Vocab::from_tokens(ckpt.vocab_tokens);
  std::vector<Example> data = read_dataset(require_flag(flags, "data"));
  apply_vocab(data, vocab);
  EvalReport report = evaluate(model, data);
  std::cout << report.line() << '\n' << report.keyvals();
  return 0;
}

// Tab or '{' means an annotated dataset; anything else is raw text with
// one whitespace-tokenized sentence per line.
std::vector<std::vector<std::string>> predict_sentences(
    const std::string& text, const std::string& origin) {
  std::vector<std::vector<std::string>> sentences;
  std::size_t first = text.find_first_not_of(" \t\r\n");
  bool dataset = text.find('\t') != std::string::npos ||
                 (first != std::string::npos && text[first] == '{');
  if (dataset) {
    std::vector<Example> examples =
        first != std::string::npos && text[first] == '{'
            ? parse_jsonl(text, origin)
            : parse_conll(text, origin);
    for (const Example& ex : examples) sentences.push_back(ex.tokens);
    return sentences;
  }
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::vector<std::string> tokens;
    std::string word;
    while (words >> word) tokens.push_back(word);
    if (!tokens.empty()) sentences.push_back(std::move(tokens));
  }
  return sentences;
}

int cmd_predict(const std::vector<std::string>& args) {
  auto flags = parse_flag_map(args, {"checkpoint", "input"});
  Checkpoint ckpt = load_checkpoint(require_flag(flags, "checkpoint"));
  Model model = load_model(ckpt);
  Vocab vocab = Vocab::from_tokens(ckpt.vocab_tokens);

  const std::string input_path = require_flag(flags, "input");
  std::string text = read_file(input_path, "input file");
  std::set<std::string> warned;
  bool first_block = true;
  for (const std::vector<std::string>& tokens :
       predict_sentences(text, input_path)) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const std::string& token : tokens) {
      int id = vocab.id(token);
      if (id == Vocab::kUnk && warned.insert(lowercase(token)).second) {
        std::cerr << "warning: token '" << token
                  << "' is out of vocabulary; using <unk>\n";
      }
      ids.push_back(id);
    }
    std::vector<int> tags = model.predict_tags(ids);

    if (!first_block) std::cout << '\n';
    first_block = false;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      std::cout << tokens[t] << '\t' << tag_name(tags[t]) << '\n';
    }
    std::cout << "# spans:";
    std::vector<AspectSpan> spans = tags_to_spans(tags);
    if (spans.empty()) std::cout << " (none)";
    for (const AspectSpan& span : spans) {
      std::cout << ' ';
      for (int t = span.start; t <= span.end; ++t) {
        if (t > span.start) std::cout << ' ';
        std::cout << tokens[static_cast<std::size_t>(t)];
      }
      std::cout << '/' << sentiment_name(span.sentiment);
      if (&span != &spans.back()) std::cout << ';';
    }
    std::cout << '\n';
  }
  return 0;
}

int cmd_gradcheck(const std::vector<std::string>& args) {
  auto flags = parse_flag_map(args, {"tol", "corrupt"});
  double tol = 1e-4;
  bool corrupt = false;
  if (flags.count("tol")) tol = to_double("tol", flags.at("tol"));
  if (flags.count("corrupt")) corrupt = to_bool("corrupt", flags.at("corrupt"));
  std::vector<GradCheckResult> results = run_gradient_suite(tol, corrupt);
  std::cout << gradcheck_table(results);
  return all_passed(results) ? 0 : 2;
}

int cmd_stats(const std::vector<std::string>& args) {
  auto flags = parse_flag_map(args, {"data"});
  std::vector<Example> data = read_dataset(require_flag(flags, "data"));
  auto [sentences, spans] = corpus_stats(data);
  std::cout << "sentences=" << sentences << '\n'
            << "aspects=" << spans << '\n';
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (args.empty()) {
      usage(std::cerr);
      return 1;
    }
    std::vector<std::string> rest(args.begin() + 1, args.end());
    if (args[0] == "train") return cmd_train(rest);
    if (args[0] == "eval") return cmd_eval(rest);
    if (args[0] == "predict") return cmd_predict(rest);
    if (args[0] == "gradcheck") return cmd_gradcheck(rest);
    if (args[0] == "stats") return cmd_stats(rest);
    usage(std::cerr);
    throw ConfigError("unknown command '" + args[0] + "'");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace absa
