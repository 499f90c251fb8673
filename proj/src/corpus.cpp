#include "absa/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "absa/error.hpp"
#include "absa/rng.hpp"
#include "json.hpp"

namespace absa {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

[[noreturn]] void fail_at(const std::string& origin, std::size_t line_no,
                          const std::string& what) {
  throw ParseError(origin + ":" + std::to_string(line_no) + ": " + what);
}

void finish_sentence(std::vector<std::string>& tokens, std::vector<int>& tags,
                     const std::string& origin, std::size_t line_no,
                     std::vector<Example>& out) {
  if (tokens.empty()) return;
  Example ex;
  ex.tokens = std::move(tokens);
  ex.tag_ids = std::move(tags);
  try {
    ex.spans = tags_to_spans(ex.tag_ids);
  } catch (const ValidityError& e) {
    fail_at(origin, line_no, std::string("sentence ends with an invalid tag "
                                         "sequence: ") + e.what());
  }
  out.push_back(std::move(ex));
  tokens.clear();
  tags.clear();
}

}  // namespace

Vocab::Vocab() {
  id_to_token_ = {"<pad>", "<unk>"};
  token_to_id_ = {{"<pad>", kPad}, {"<unk>", kUnk}};
}

Vocab Vocab::build(const std::vector<Example>& examples, int min_freq) {
  if (min_freq < 1) {
    throw ContractError("build_vocab: min_freq " + std::to_string(min_freq) +
                        " must be at least 1");
  }
  std::unordered_map<std::string, int> freq;
  std::vector<std::string> order;  // first occurrence, for determinism
  for (const Example& ex : examples) {
    for (const std::string& tok : ex.tokens) {
      std::string low = lowercase(tok);
      if (++freq[low] == 1) order.push_back(low);
    }
  }
  Vocab v;
  for (const std::string& tok : order) {
    if (freq[tok] >= min_freq) {
      v.token_to_id_[tok] = static_cast<int>(v.id_to_token_.size());
      v.id_to_token_.push_back(tok);
    }
  }
  return v;
}

Vocab Vocab::from_tokens(const std::vector<std::string>& id_to_token) {
  if (id_to_token.size() < 2 || id_to_token[0] != "<pad>" ||
      id_to_token[1] != "<unk>") {
    throw VocabError("vocabulary list must start with <pad>, <unk>");
  }
  Vocab v;
  v.id_to_token_ = id_to_token;
  v.token_to_id_.clear();
  for (std::size_t i = 0; i < id_to_token.size(); ++i) {
    if (!v.token_to_id_.emplace(id_to_token[i], static_cast<int>(i)).second) {
      throw VocabError("duplicate vocabulary entry '" + id_to_token[i] + "'");
    }
  }
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = token_to_id_.find(lowercase(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) {
    throw VocabError("token id " + std::to_string(id) + " out of range [0," +
                     std::to_string(size()) + ")");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<Example> parse_conll(const std::string& content,
                                 const std::string& origin) {
  std::vector<Example> out;
  std::vector<std::string> tokens;
  std::vector<int> tags;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      finish_sentence(tokens, tags, origin, line_no, out);
      continue;
    }
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      fail_at(origin, line_no, "expected `token<TAB>tag`, got '" + line + "'");
    }
    std::string tok = line.substr(0, tab);
    std::string tag = line.substr(tab + 1);
    tokens.push_back(tok);
    try {
      tags.push_back(tag_from_name(tag));
    } catch (const ParseError&) {
      fail_at(origin, line_no, "unknown tag '" + tag + "'");
    }
  }
  finish_sentence(tokens, tags, origin, line_no + 1, out);
  return out;
}

std::vector<Example> parse_jsonl(const std::string& content,
                                 const std::string& origin) {
  std::vector<Example> out;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail_at(origin, line_no, std::string("bad JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array()) {
      fail_at(origin, line_no, "expected an object with a \"tokens\" array");
    }
    Example ex;
    for (const auto& t : j["tokens"]) {
      if (!t.is_string())
        fail_at(origin, line_no, "tokens must all be strings");
      ex.tokens.push_back(t.get<std::string>());
    }
    if (j.contains("spans")) {
      if (!j["spans"].is_array())
        fail_at(origin, line_no, "\"spans\" must be an array");
      for (const auto& sp : j["spans"]) {
        if (!sp.is_array() || sp.size() != 3 || !sp[0].is_number_integer() ||
            !sp[1].is_number_integer() || !sp[2].is_string()) {
          fail_at(origin, line_no,
                  "each span must be [start, end, \"POS|NEG|NEU\"]");
        }
        try {
          ex.spans.push_back({sp[0].get<int>(), sp[1].get<int>(),
                              sentiment_from_name(sp[2].get<std::string>())});
        } catch (const ParseError& e) {
          fail_at(origin, line_no, e.what());
        }
      }
    }
    try {
      ex.tag_ids = spans_to_tags(ex.length(), ex.spans);
    } catch (const AnnotationError& e) {
      fail_at(origin, line_no, e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Example> read_conll(const std::string& path) {
  return parse_conll(read_file(path), path);
}

std::vector<Example> read_jsonl(const std::string& path) {
  return parse_jsonl(read_file(path), path);
}

std::vector<Example> read_dataset(const std::string& path) {
  std::string content = read_file(path);
  std::size_t first = content.find_first_not_of(" \t\r\n");
  bool looks_json = first != std::string::npos && content[first] == '{';
  return looks_json ? parse_jsonl(content, path) : parse_conll(content, path);
}

std::string render_conll(const std::vector<Example>& examples) {
  std::string out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (i > 0) out += "\n";
    const Example& ex = examples[i];
    for (int t = 0; t < ex.length(); ++t) {
      out += ex.tokens[static_cast<std::size_t>(t)];
      out += '\t';
      out += tag_name(ex.tag_ids[static_cast<std::size_t>(t)]);
      out += '\n';
    }
  }
  return out;
}

void apply_vocab(std::vector<Example>& examples, const Vocab& vocab) {
  for (Example& ex : examples) {
    ex.token_ids.clear();
    ex.token_ids.reserve(ex.tokens.size());
    for (const std::string& tok : ex.tokens)
      ex.token_ids.push_back(vocab.id(tok));
  }
}

void reject_longer_than(const std::vector<Example>& examples, int max_len,
                        const std::string& origin) {
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].length() > max_len) {
      throw ContractError(origin + ": sentence #" + std::to_string(i) +
                          " has " + std::to_string(examples[i].length()) +
                          " tokens, over the max_len of " +
                          std::to_string(max_len));
    }
  }
}

std::pair<long long, long long> corpus_stats(
    const std::vector<Example>& examples) {
  long long aspects = 0;
  for (const Example& ex : examples)
    aspects += static_cast<long long>(ex.spans.size());
  return {static_cast<long long>(examples.size()), aspects};
}

std::vector<Batch> make_batches(const std::vector<Example>& examples,
                                int batch_size,
                                unsigned long long shuffle_seed) {
  if (batch_size < 1) {
    throw ContractError("make_batches: batch_size " +
                        std::to_string(batch_size) + " must be at least 1");
  }
  std::vector<int> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(shuffle_seed);
  rng.shuffle(order);

  std::vector<Batch> batches;
  for (std::size_t pos = 0; pos < order.size(); pos += batch_size) {
    std::size_t n = std::min<std::size_t>(batch_size, order.size() - pos);
    int t_max = 0;
    for (std::size_t k = 0; k < n; ++k)
      t_max = std::max(t_max, examples[static_cast<std::size_t>(
                                  order[pos + k])].length());
    Batch b;
    for (std::size_t k = 0; k < n; ++k) {
      const Example& ex = examples[static_cast<std::size_t>(order[pos + k])];
      if (ex.token_ids.size() != ex.tokens.size()) {
        throw ContractError("make_batches: vocabulary not applied yet");
      }
      std::vector<int> ids(static_cast<std::size_t>(t_max), Vocab::kPad);
      std::vector<int> mask(static_cast<std::size_t>(t_max), 0);
      std::vector<int> tags(static_cast<std::size_t>(t_max), 0);
      for (int t = 0; t < ex.length(); ++t) {
        ids[static_cast<std::size_t>(t)] =
            ex.token_ids[static_cast<std::size_t>(t)];
        mask[static_cast<std::size_t>(t)] = 1;
        tags[static_cast<std::size_t>(t)] =
            ex.tag_ids[static_cast<std::size_t>(t)];
      }
      b.token_ids.push_back(std::move(ids));
      b.mask.push_back(std::move(mask));
      b.tag_ids.push_back(std::move(tags));
      b.lengths.push_back(ex.length());
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace absa
