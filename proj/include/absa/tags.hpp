#pragma once

#include <string>
#include <vector>

namespace absa {

// 13-tag alphabet: O plus {B,I,E,S} x {POS,NEG,NEU}. Index order is fixed —
// O, B-POS, I-POS, E-POS, S-POS, B-NEG, ..., S-NEU — and checkpoints depend
// on it staying put.
inline constexpr int kNumTags = 13;
inline constexpr int kNumSentiments = 3;

enum class Sentiment { POS = 0, NEG = 1, NEU = 2 };
enum class TagPos { O = 0, B, I, E, S };

// An aspect mention: token range [start, end] (both inclusive) plus polarity.
struct AspectSpan {
  int start = 0;
  int end = 0;
  Sentiment sentiment = Sentiment::POS;

  friend bool operator==(const AspectSpan& a, const AspectSpan& b) {
    return a.start == b.start && a.end == b.end && a.sentiment == b.sentiment;
  }
  friend bool operator<(const AspectSpan& a, const AspectSpan& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end < b.end;
    return static_cast<int>(a.sentiment) < static_cast<int>(b.sentiment);
  }
};

int tag_index(TagPos pos, Sentiment s);
TagPos tag_pos(int tag);
Sentiment tag_sentiment(int tag);  // tag must not be O

const std::string& tag_name(int tag);
int tag_from_name(const std::string& name);  // ParseError on unknown name

const std::string& sentiment_name(Sentiment s);
Sentiment sentiment_from_name(const std::string& name);

// Gold spans -> BIOES tag indices. AnnotationError on out-of-range or
// overlapping spans (spans must be sorted by start).
std::vector<int> spans_to_tags(int length, const std::vector<AspectSpan>& spans);

// Exact inverse of spans_to_tags. ValidityError naming the first offending
// position when the sequence is not valid.
std::vector<AspectSpan> tags_to_spans(const std::vector<int>& tags);

// First position where the BIOES automaton rejects, or -1 if valid. A
// sequence that ends inside an open run reports its final position.
int first_invalid(const std::vector<int>& tags);
bool is_valid_tags(const std::vector<int>& tags);

// Deterministic left-to-right repair of a predicted tag sequence, using one
// token of lookahead on the *original* sequence. Orphan I/E opens a run (or
// becomes S if nothing follows compatibly), an unclosed run is closed at its
// last token, and sentiment conflicts inside a run resolve to the run's first
// sentiment. Output is always valid; valid input comes back unchanged.
std::vector<int> repair(const std::vector<int>& tags);

}  // namespace absa
