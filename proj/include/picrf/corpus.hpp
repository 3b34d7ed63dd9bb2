#pragma once

// CoNLL column I/O, IOB2 validation/repair and chunk extraction.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "picrf/error.hpp"

namespace picrf {

struct Token {
  std::string text;

  friend bool operator==(const Token&, const Token&) = default;
};

/// One training/decoding instance. `labels` is empty for unlabeled input,
/// otherwise it has exactly one entry per token.
struct Sentence {
  std::vector<Token> tokens;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return tokens.size(); }
  bool has_labels() const noexcept { return !labels.empty(); }

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

/// Half-open token span [start, end) carrying an entity type.
struct Chunk {
  std::string entity_type;
  std::size_t start = 0;
  std::size_t end = 0;

  friend auto operator<=>(const Chunk&, const Chunk&) = default;
};

using Labels = std::vector<std::string>;

inline constexpr std::string_view kOutside = "O";

// ---------------------------------------------------------------------------
// IOB2 label syntax

enum class TagKind { Begin, Inside, Outside };

struct ParsedTag {
  TagKind kind = TagKind::Outside;
  std::string type;
};

/// Parses "O", "B-<type>" or "I-<type>"; nullopt for anything else.
inline std::optional<ParsedTag> parse_tag(std::string_view label) {
  if (label == kOutside) return ParsedTag{TagKind::Outside, {}};
  if (label.size() < 3 || label[1] != '-') return std::nullopt;
  if (label[0] == 'B') return ParsedTag{TagKind::Begin, std::string(label.substr(2))};
  if (label[0] == 'I') return ParsedTag{TagKind::Inside, std::string(label.substr(2))};
  return std::nullopt;
}

enum class Iob2Mode { Strict, Repair };

/// Checks an IOB2 sequence. An I-t that does not continue a B-t/I-t run is an
/// error in strict mode and is rewritten to B-t in repair mode (the conlleval
/// convention). Unknown labels are errors in both modes. When `entity_types`
/// is null any well-formed B-/I- type is accepted.
inline Labels validate_iob2(const Labels& labels, Iob2Mode mode,
                            const std::set<std::string>* entity_types = nullptr) {
  Labels out = labels;
  std::optional<std::string> open;  // type of the chunk the previous token belongs to
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto tag = parse_tag(out[i]);
    if (!tag) throw LabelError("unknown label '" + out[i] + "' at position " + std::to_string(i));
    if (tag->kind != TagKind::Outside && entity_types && !entity_types->count(tag->type)) {
      throw LabelError("undeclared entity type in label '" + out[i] + "' at position " +
                       std::to_string(i));
    }
    switch (tag->kind) {
      case TagKind::Outside:
        open.reset();
        break;
      case TagKind::Begin:
        open = tag->type;
        break;
      case TagKind::Inside:
        if (open != tag->type) {
          if (mode == Iob2Mode::Strict) {
            throw LabelError("orphan '" + out[i] + "' at position " + std::to_string(i));
          }
          out[i] = "B-" + tag->type;
        }
        open = tag->type;
        break;
    }
  }
  return out;
}

inline bool is_valid_iob2(const Labels& labels) {
  try {
    validate_iob2(labels, Iob2Mode::Strict);
    return true;
  } catch (const LabelError&) {
    return false;
  }
}

/// Maximal B-t (I-t)* runs, in order of position. Requires strict-valid input.
inline std::vector<Chunk> extract_chunks(const Labels& labels) {
  validate_iob2(labels, Iob2Mode::Strict);
  std::vector<Chunk> chunks;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto tag = parse_tag(labels[i]);
    if (tag->kind == TagKind::Begin) {
      chunks.push_back({tag->type, i, i + 1});
    } else if (tag->kind == TagKind::Inside) {
      chunks.back().end = i + 1;
    }
  }
  return chunks;
}

/// Entity types in order of first appearance across a corpus.
inline std::vector<std::string> collect_entity_types(const std::vector<Sentence>& corpus) {
  std::vector<std::string> types;
  std::set<std::string> seen;
  for (const auto& s : corpus) {
    for (const auto& l : s.labels) {
      auto tag = parse_tag(l);
      if (!tag) throw LabelError("unknown label '" + l + "'");
      if (tag->kind != TagKind::Outside && seen.insert(tag->type).second) types.push_back(tag->type);
    }
  }
  return types;
}

// ---------------------------------------------------------------------------
// CoNLL reading and writing

/// Which column holds the gold label.
struct LabelColumn {
  enum class Kind { None, Last, Index } kind = Kind::Last;
  std::size_t index = 0;

  static LabelColumn none() { return {Kind::None, 0}; }
  static LabelColumn last() { return {Kind::Last, 0}; }
  static LabelColumn at(std::size_t i) { return {Kind::Index, i}; }
};

namespace detail {

inline std::vector<std::string_view> split_columns(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) cols.push_back(line.substr(i, j - i));
    i = j;
  }
  return cols;
}

inline bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t'; });
}

}  // namespace detail

/// Reads whitespace-separated columns; a blank line ends a sentence. CRLF
/// line endings are accepted.
inline std::vector<Sentence> read_conll(std::istream& in, std::size_t token_column = 0,
                                        LabelColumn label_column = LabelColumn::last()) {
  std::vector<Sentence> sentences;
  Sentence current;
  std::string line;
  std::size_t lineno = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) sentences.push_back(std::move(current));
    current = Sentence{};
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_blank(line)) {
      flush();
      continue;
    }
    auto cols = detail::split_columns(line);
    std::size_t needed = token_column + 1;
    if (label_column.kind == LabelColumn::Kind::Last) needed = std::max<std::size_t>(needed, 2);
    if (label_column.kind == LabelColumn::Kind::Index) {
      needed = std::max(needed, label_column.index + 1);
    }
    if (cols.size() < needed) {
      throw ParseError("expected at least " + std::to_string(needed) + " columns, found " +
                           std::to_string(cols.size()),
                       lineno);
    }
    current.tokens.push_back({std::string(cols[token_column])});
    switch (label_column.kind) {
      case LabelColumn::Kind::None:
        break;
      case LabelColumn::Kind::Last:
        current.labels.emplace_back(cols.back());
        break;
      case LabelColumn::Kind::Index:
        current.labels.emplace_back(cols[label_column.index]);
        break;
    }
  }
  flush();
  return sentences;
}

inline std::vector<Sentence> read_conll_string(const std::string& text, std::size_t token_column = 0,
                                               LabelColumn label_column = LabelColumn::last()) {
  std::istringstream in(text);
  return read_conll(in, token_column, label_column);
}

/// Writes token, gold label (if present) and predicted label (if given),
/// tab-separated, with a blank line after every sentence.
inline void write_conll(std::ostream& out, const std::vector<Sentence>& sentences,
                        const std::vector<Labels>* predicted = nullptr) {
  if (predicted && predicted->size() != sentences.size()) {
    throw Error("predicted corpus has " + std::to_string(predicted->size()) + " sentences, expected " +
                std::to_string(sentences.size()));
  }
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& s = sentences[i];
    if (s.has_labels() && s.labels.size() != s.size()) {
      throw Error("sentence " + std::to_string(i) + ": gold labels do not align with tokens");
    }
    if (predicted && (*predicted)[i].size() != s.size()) {
      throw Error("sentence " + std::to_string(i) + ": predicted labels do not align with tokens");
    }
    for (std::size_t t = 0; t < s.size(); ++t) {
      out << s.tokens[t].text;
      if (s.has_labels()) out << '\t' << s.labels[t];
      if (predicted) out << '\t' << (*predicted)[i][t];
      out << '\n';
    }
    out << '\n';
  }
}

inline std::string write_conll_string(const std::vector<Sentence>& sentences,
                                      const std::vector<Labels>* predicted = nullptr) {
  std::ostringstream out;
  write_conll(out, sentences, predicted);
  return out.str();
}

}  // namespace picrf
