#pragma once

// Observation feature templates and the feature-to-parameter index.
//
// Family (a): W[d]=<token> and NW[d]=<normalized token> for every window
// offset d. Family (b), template set 2 only: PRE[L]= / SUF[L]= character
// affixes of the current token. Every position also fires BIAS.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "picrf/corpus.hpp"
#include "picrf/error.hpp"

namespace picrf {

struct TemplateConfig {
  int set_id = 1;
  std::vector<int> window_offsets{-1, 0, 1};
  bool use_normalized = true;
  std::vector<std::size_t> affix_lengths{2, 3, 4};
  std::size_t min_feature_count = 0;

  static TemplateConfig set(int id) {
    TemplateConfig c;
    c.set_id = id;
    return c;
  }

  bool affixes_enabled() const noexcept { return set_id == 2; }

  int window_radius() const noexcept {
    int r = 0;
    for (int d : window_offsets) r = std::max(r, d < 0 ? -d : d);
    return r;
  }

  void validate() const {
    if (set_id != 1 && set_id != 2) throw Error("feature set must be 1 or 2");
    for (auto l : affix_lengths) {
      if (l == 0) throw Error("affix lengths must be at least 1");
    }
  }

  friend bool operator==(const TemplateConfig&, const TemplateConfig&) = default;
};

// Boundary sentinels start with a control byte, which a whitespace-free token
// read from a text corpus does not plausibly contain.
inline const std::string kBos = "\x01<BOS>";
inline const std::string kEos = "\x01<EOS>";
inline const std::string kBiasFeature = "BIAS";

/// Lowercases ASCII letters and folds every decimal digit to '0'.
inline std::string normalize_token(std::string_view token) {
  std::string out(token);
  for (char& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isdigit(u)) {
      c = '0';
    } else if (u < 0x80) {
      c = static_cast<char>(std::tolower(u));
    }
  }
  return out;
}

namespace detail {

// Byte offsets of UTF-8 code point starts, plus the end offset.
inline std::vector<std::size_t> codepoint_offsets(std::string_view s) {
  std::vector<std::size_t> offs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) offs.push_back(i);
  }
  offs.push_back(s.size());
  return offs;
}

}  // namespace detail

using PositionFeatures = std::vector<std::string>;

inline std::vector<PositionFeatures> extract_features(const Sentence& sentence, const TemplateConfig& config) {
  const auto n = static_cast<long>(sentence.size());
  std::vector<std::string> normalized;
  normalized.reserve(sentence.size());
  for (const auto& tok : sentence.tokens) normalized.push_back(normalize_token(tok.text));

  std::vector<PositionFeatures> out(sentence.size());
  for (long t = 0; t < n; ++t) {
    auto& feats = out[static_cast<std::size_t>(t)];
    auto at = [&](int d, bool norm) -> const std::string& {
      const long j = t + d;
      if (j < 0) return kBos;
      if (j >= n) return kEos;
      return norm ? normalized[static_cast<std::size_t>(j)] : sentence.tokens[static_cast<std::size_t>(j)].text;
    };
    for (int d : config.window_offsets) feats.push_back("W[" + std::to_string(d) + "]=" + at(d, false));
    if (config.use_normalized) {
      for (int d : config.window_offsets) feats.push_back("NW[" + std::to_string(d) + "]=" + at(d, true));
    }
    if (config.affixes_enabled()) {
      const std::string& tok = sentence.tokens[static_cast<std::size_t>(t)].text;
      const auto offs = detail::codepoint_offsets(tok);
      const std::size_t chars = offs.size() - 1;
      for (auto len : config.affix_lengths) {
        if (chars >= len) feats.push_back("PRE[" + std::to_string(len) + "]=" + tok.substr(0, offs[len]));
      }
      for (auto len : config.affix_lengths) {
        if (chars >= len) feats.push_back("SUF[" + std::to_string(len) + "]=" + tok.substr(offs[chars - len]));
      }
    }
    feats.push_back(kBiasFeature);
  }
  return out;
}

/// How a state's observation score is assembled from a feature's slot block:
/// `state_label[s]` picks the fine slot; states flagged `tied` also read the
/// block's trailing coarse-outside slot.
struct SlotLayout {
  std::size_t label_count = 0;
  bool coarse = false;
  std::vector<std::uint32_t> state_label;
  std::vector<bool> tied;

  std::size_t block_size() const noexcept { return label_count + (coarse ? 1 : 0); }
  std::size_t state_count() const noexcept { return state_label.size(); }

  friend bool operator==(const SlotLayout&, const SlotLayout&) = default;
};

class FeatureIndex {
 public:
  static constexpr std::uint32_t kUnknown = UINT32_MAX;

  FeatureIndex() = default;
  FeatureIndex(std::vector<std::string> names, SlotLayout layout) : names_(std::move(names)), layout_(std::move(layout)) {
    ids_.reserve(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (!ids_.emplace(names_[i], static_cast<std::uint32_t>(i)).second) {
        throw Error("duplicate feature '" + names_[i] + "'");
      }
    }
  }

  std::size_t feature_count() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const SlotLayout& layout() const noexcept { return layout_; }
  std::size_t block_size() const noexcept { return layout_.block_size(); }
  std::size_t parameter_count() const noexcept { return names_.size() * layout_.block_size(); }
  std::size_t block_base(std::uint32_t feature) const noexcept { return std::size_t{feature} * block_size(); }

  std::uint32_t find(const std::string& name) const {
    auto it = ids_.find(name);
    return it == ids_.end() ? kUnknown : it->second;
  }

  /// Active feature ids of every position; unknown features are dropped.
  std::vector<std::vector<std::uint32_t>> index(const std::vector<PositionFeatures>& feats) const {
    std::vector<std::vector<std::uint32_t>> out(feats.size());
    for (std::size_t t = 0; t < feats.size(); ++t) {
      out[t].reserve(feats[t].size());
      for (const auto& f : feats[t]) {
        auto id = find(f);
        if (id != kUnknown) out[t].push_back(id);
      }
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  SlotLayout layout_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

/// Collects features in first-occurrence order, keeping those that occur at
/// least `min_feature_count` times.
inline FeatureIndex build_feature_index(const std::vector<Sentence>& corpus, const TemplateConfig& config,
                                        SlotLayout layout) {
  config.validate();
  if (corpus.empty()) throw Error("cannot build a feature index from an empty corpus");
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& s : corpus) {
    for (const auto& pos : extract_features(s, config)) {
      for (const auto& f : pos) {
        auto [it, inserted] = counts.emplace(f, 0);
        if (inserted) order.push_back(f);
        ++it->second;
      }
    }
  }
  std::vector<std::string> kept;
  for (auto& f : order) {
    if (counts[f] >= config.min_feature_count) kept.push_back(std::move(f));
  }
  if (kept.empty()) throw Error("no features survive the count cutoff");
  return FeatureIndex(std::move(kept), std::move(layout));
}

/// Parameter slots whose weights sum to the score of (feature, state).
inline std::vector<std::size_t> observation_slots(std::uint32_t feature, std::size_t state, const FeatureIndex& index) {
  const auto& layout = index.layout();
  if (state >= layout.state_count()) throw Error("unknown state " + std::to_string(state));
  if (feature >= index.feature_count()) throw Error("unknown feature id " + std::to_string(feature));
  const std::size_t base = index.block_base(feature);
  std::vector<std::size_t> slots{base + layout.state_label[state]};
  if (layout.coarse && layout.tied[state]) slots.push_back(base + layout.label_count);
  return slots;
}

}  // namespace picrf
