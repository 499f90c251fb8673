#include "absa/tags.hpp"

#include <array>

#include "absa/error.hpp"

namespace absa {

namespace {

const std::array<std::string, kNumTags> kTagNames = {
    "O",     "B-POS", "I-POS", "E-POS", "S-POS", "B-NEG", "I-NEG",
    "E-NEG", "S-NEG", "B-NEU", "I-NEU", "E-NEU", "S-NEU"};

const std::array<std::string, kNumSentiments> kSentimentNames = {"POS", "NEG",
                                                                 "NEU"};

void check_tag(int tag) {
  if (tag < 0 || tag >= kNumTags) {
    throw ContractError("tag index " + std::to_string(tag) +
                        " outside [0," + std::to_string(kNumTags) + ")");
  }
}

}  // namespace

int tag_index(TagPos pos, Sentiment s) {
  if (pos == TagPos::O) return 0;
  return 1 + 4 * static_cast<int>(s) + (static_cast<int>(pos) - 1);
}

TagPos tag_pos(int tag) {
  check_tag(tag);
  if (tag == 0) return TagPos::O;
  return static_cast<TagPos>((tag - 1) % 4 + 1);
}

Sentiment tag_sentiment(int tag) {
  check_tag(tag);
  if (tag == 0) throw ContractError("tag O carries no sentiment");
  return static_cast<Sentiment>((tag - 1) / 4);
}

const std::string& tag_name(int tag) {
  check_tag(tag);
  return kTagNames[static_cast<std::size_t>(tag)];
}

int tag_from_name(const std::string& name) {
  for (int i = 0; i < kNumTags; ++i) {
    if (kTagNames[static_cast<std::size_t>(i)] == name) return i;
  }
  throw ParseError("unknown tag name '" + name + "'");
}

const std::string& sentiment_name(Sentiment s) {
  return kSentimentNames[static_cast<std::size_t>(s)];
}

Sentiment sentiment_from_name(const std::string& name) {
  for (int i = 0; i < kNumSentiments; ++i) {
    if (kSentimentNames[static_cast<std::size_t>(i)] == name)
      return static_cast<Sentiment>(i);
  }
  throw ParseError("unknown sentiment '" + name + "'");
}

std::vector<int> spans_to_tags(int length,
                               const std::vector<AspectSpan>& spans) {
  std::vector<int> tags(static_cast<std::size_t>(length), 0);
  int prev_end = -1;
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const AspectSpan& sp = spans[k];
    if (sp.start < 0 || sp.end < sp.start || sp.end >= length) {
      throw AnnotationError("span #" + std::to_string(k) + " [" +
                            std::to_string(sp.start) + "," +
                            std::to_string(sp.end) +
                            "] out of range for length " +
                            std::to_string(length));
    }
    if (sp.start <= prev_end) {
      throw AnnotationError("span #" + std::to_string(k) + " starting at " +
                            std::to_string(sp.start) +
                            " overlaps or is out of order (previous span "
                            "ends at " +
                            std::to_string(prev_end) + ")");
    }
    prev_end = sp.end;
    if (sp.start == sp.end) {
      tags[static_cast<std::size_t>(sp.start)] =
          tag_index(TagPos::S, sp.sentiment);
    } else {
      tags[static_cast<std::size_t>(sp.start)] =
          tag_index(TagPos::B, sp.sentiment);
      for (int t = sp.start + 1; t < sp.end; ++t)
        tags[static_cast<std::size_t>(t)] = tag_index(TagPos::I, sp.sentiment);
      tags[static_cast<std::size_t>(sp.end)] =
          tag_index(TagPos::E, sp.sentiment);
    }
  }
  return tags;
}

std::vector<AspectSpan> tags_to_spans(const std::vector<int>& tags) {
  int bad = first_invalid(tags);
  if (bad >= 0) {
    throw ValidityError("invalid tag sequence at position " +
                        std::to_string(bad) + " (" +
                        tag_name(tags[static_cast<std::size_t>(bad)]) + ")");
  }
  std::vector<AspectSpan> spans;
  int open_start = -1;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    int tag = tags[t];
    switch (tag_pos(tag)) {
      case TagPos::O:
        break;
      case TagPos::S:
        spans.push_back({static_cast<int>(t), static_cast<int>(t),
                         tag_sentiment(tag)});
        break;
      case TagPos::B:
        open_start = static_cast<int>(t);
        break;
      case TagPos::I:
        break;
      case TagPos::E:
        spans.push_back({open_start, static_cast<int>(t), tag_sentiment(tag)});
        open_start = -1;
        break;
    }
  }
  return spans;
}

int first_invalid(const std::vector<int>& tags) {
  // Two-state automaton: closed, or inside an open run of one sentiment.
  bool open = false;
  Sentiment run = Sentiment::POS;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    int tag = tags[t];
    check_tag(tag);
    TagPos pos = tag_pos(tag);
    if (!open) {
      if (pos == TagPos::I || pos == TagPos::E) return static_cast<int>(t);
      if (pos == TagPos::B) {
        open = true;
        run = tag_sentiment(tag);
      }
    } else {
      if (pos != TagPos::I && pos != TagPos::E) return static_cast<int>(t);
      if (tag_sentiment(tag) != run) return static_cast<int>(t);
      if (pos == TagPos::E) open = false;
    }
  }
  if (open) return static_cast<int>(tags.size()) - 1;  // ends mid-run
  return -1;
}

bool is_valid_tags(const std::vector<int>& tags) {
  return first_invalid(tags) < 0;
}

std::vector<int> repair(const std::vector<int>& tags) {
  std::vector<int> out(tags.size());
  bool open = false;
  Sentiment run = Sentiment::POS;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    int tag = tags[t];
    check_tag(tag);
    TagPos pos = tag_pos(tag);
    // Lookahead on the original predictions: does the next tag continue a
    // run? Any I/E counts — its sentiment gets coerced to the run's.
    bool next_continues = false;
    if (t + 1 < tags.size()) {
      TagPos np = tag_pos(tags[t + 1]);
      next_continues = np == TagPos::I || np == TagPos::E;
    }
    if (!open) {
      if (pos == TagPos::O) {
        out[t] = 0;
      } else {
        Sentiment s = tag_sentiment(tag);
        if (pos == TagPos::S || !next_continues) {
          out[t] = tag_index(TagPos::S, s);
        } else {
          // B, or an orphan I/E promoted to B, opening a run.
          out[t] = tag_index(TagPos::B, s);
          open = true;
          run = s;
        }
      }
    } else {
      // While a run is open the current tag is I or E by construction: the
      // run only stayed open because this position was I/E in the original.
      if (pos == TagPos::E || !next_continues) {
        out[t] = tag_index(TagPos::E, run);
        open = false;
      } else {
        out[t] = tag_index(TagPos::I, run);
      }
    }
  }
  return out;
}

}  // namespace absa
