#pragma once

#include <string>

#include "absa/model.hpp"
#include "absa/train.hpp"

namespace absa {

// Everything a run needs, resolvable from a `key = value` config file plus
// `--key value` command-line overrides (applied in order, last one wins).
// Unknown keys are rejected loudly. Environment variables are never read.
struct RunConfig {
  std::string train_file;
  std::string dev_file;
  std::string test_file;  // empty: reuse the dev set
  std::string out_dir = "run_out";
  int vocab_min_freq = 1;
  int parallel_seeds = 1;
  ModelConfig model;   // encoder.vocab_size is derived from the data
  TrainConfig train;
};

// Sets one configuration key from its text value. ConfigError on an unknown
// key or an unparsable value.
void set_config_key(RunConfig& cfg, const std::string& key,
                    const std::string& value);

// Parses a config file body (`key = value` lines, `#` comments) on top of
// the defaults in cfg. origin appears in error messages.
void apply_config_text(RunConfig& cfg, const std::string& text,
                       const std::string& origin);

// The fully resolved config as a config file body; parsing it back yields
// the same configuration.
std::string render_config(const RunConfig& cfg);

// train | eval | predict | gradcheck | stats.
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
int cli_main(int argc, char** argv);

}  // namespace absa
