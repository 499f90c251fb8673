#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "absa/tags.hpp"

namespace absa {

// One tokenized, annotated sentence. token_ids stay empty until a vocabulary
// is applied; tag_ids always mirror spans exactly.
struct Example {
  std::vector<std::string> tokens;
  std::vector<int> token_ids;
  std::vector<AspectSpan> spans;
  std::vector<int> tag_ids;

  int length() const { return static_cast<int>(tokens.size()); }

  friend bool operator==(const Example& a, const Example& b) {
    return a.tokens == b.tokens && a.spans == b.spans;
  }
};

// Lowercased token -> index map with <pad>=0 and <unk>=1 reserved. Kept in
// first-occurrence order so builds are deterministic.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocab();

  // Tokens seen fewer than min_freq times fall back to <unk>.
  static Vocab build(const std::vector<Example>& examples, int min_freq = 1);
  // Rebuild from a saved id->token list (checkpoint loading).
  static Vocab from_tokens(const std::vector<std::string>& id_to_token);

  int id(const std::string& token) const;  // lowercases; unknown -> <unk>
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::vector<std::string>& id_to_token() const { return id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

std::string lowercase(const std::string& s);  // ASCII-only case folding

// Readers. Both file formats are accepted:
//   - CoNLL: one `token<TAB>tag` line per token, blank line between sentences
//   - JSONL: {"tokens": [...], "spans": [[start, end, "POS"], ...]} per line
// All format, tag-alphabet, and sequence-validity problems surface as
// ParseError carrying the offending line number.
std::vector<Example> read_conll(const std::string& path);
std::vector<Example> read_jsonl(const std::string& path);
// Sniffs the format from the first non-whitespace byte ('{' means JSONL).
std::vector<Example> read_dataset(const std::string& path);

std::vector<Example> parse_conll(const std::string& content,
                                 const std::string& origin);
std::vector<Example> parse_jsonl(const std::string& content,
                                 const std::string& origin);

// Inverse of parse_conll modulo trailing whitespace.
std::string render_conll(const std::vector<Example>& examples);

void apply_vocab(std::vector<Example>& examples, const Vocab& vocab);

// ContractError naming the first sentence longer than max_len.
void reject_longer_than(const std::vector<Example>& examples, int max_len,
                        const std::string& origin);

// (sentence count, total gold aspect spans)
std::pair<long long, long long> corpus_stats(
    const std::vector<Example>& examples);

// A padded mini-batch: B rows, each max_len() wide. Padded token positions
// carry <pad>/O and mask 0; losses and metrics must skip them.
struct Batch {
  std::vector<std::vector<int>> token_ids;
  std::vector<std::vector<int>> mask;
  std::vector<std::vector<int>> tag_ids;
  std::vector<int> lengths;

  int size() const { return static_cast<int>(lengths.size()); }
  int max_len() const {
    return token_ids.empty() ? 0 : static_cast<int>(token_ids[0].size());
  }
};

// Deterministic shuffle under seed, then fixed-size chunks (last one may be
// short), each right-padded to its own longest sentence.
std::vector<Batch> make_batches(const std::vector<Example>& examples,
                                int batch_size,
                                unsigned long long shuffle_seed);

}  // namespace absa
