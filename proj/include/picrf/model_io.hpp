#pragma once

// Text model format. Layout:
//
//   picrf-model <version>
//   order <first|second|pre-induced>
//   constrained <0|1>
//   entity_types <n>          followed by n lines
//   alphabet <n>              base + carrier labels in index order
//   states <n>                effective state count
//   start_pairs <n>           second order only
//   set <1|2>
//   window <n> <offsets...>
//   normalized <0|1>
//   affixes <n> <lengths...>
//   min_count <n>
//   features <n> block <slots per feature>   followed by n lines
//   transitions <n> <layout>
//   weights <n>               followed by n lines, %.17g
//   end

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "picrf/error.hpp"
#include "picrf/training.hpp"

namespace picrf {

inline constexpr int kModelFormatVersion = 1;
inline constexpr std::string_view kModelMagic = "picrf-model";

inline void save_model(std::ostream& out, const Model& m) {
  const auto& space = m.space();
  const auto& alpha = m.alphabet();
  const auto& tc = m.templates();
  out << kModelMagic << ' ' << kModelFormatVersion << '\n';
  out << "order " << to_string(m.order()) << '\n';
  out << "constrained " << (m.constrained_decode() ? 1 : 0) << '\n';
  out << "entity_types " << alpha.entity_types().size() << '\n';
  for (const auto& t : alpha.entity_types()) out << t << '\n';
  out << "alphabet " << alpha.expanded_size() << '\n';
  for (const auto& l : alpha.expanded_labels()) out << l << '\n';
  out << "states " << space.effective_states() << '\n';
  if (m.order() == ModelOrder::Second) out << "start_pairs " << space.pairs().start_pair_count() << '\n';
  out << "set " << tc.set_id << '\n';
  out << "window " << tc.window_offsets.size();
  for (int d : tc.window_offsets) out << ' ' << d;
  out << '\n';
  out << "normalized " << (tc.use_normalized ? 1 : 0) << '\n';
  out << "affixes " << tc.affix_lengths.size();
  for (auto l : tc.affix_lengths) out << ' ' << l;
  out << '\n';
  out << "min_count " << tc.min_feature_count << '\n';
  const auto& fi = m.features();
  out << "features " << fi.feature_count() << " block " << fi.block_size() << '\n';
  for (const auto& f : fi.names()) out << f << '\n';
  out << "transitions " << space.transition_parameter_count() << ' '
      << (m.order() == ModelOrder::Second ? "start+start_triples+triples" : "start+matrix") << '\n';
  out << "weights " << m.weights().size() << '\n';
  char buf[40];
  for (double w : m.weights()) {
    std::snprintf(buf, sizeof buf, "%.17g\n", w);
    out << buf;
  }
  out << "end\n";
}

namespace detail {

class ModelReader {
 public:
  explicit ModelReader(std::istream& in) : in_(in) {}

  std::string line() {
    std::string l;
    if (!std::getline(in_, l)) throw ParseError("unexpected end of model file", lineno_ + 1);
    ++lineno_;
    if (!l.empty() && l.back() == '\r') l.pop_back();
    return l;
  }

  // Reads "<key> <values...>" and returns the value stream.
  std::istringstream keyed(std::string_view key) {
    auto l = line();
    std::istringstream ss(l);
    std::string k;
    ss >> k;
    if (k != key) fail("expected '" + std::string(key) + "', found '" + k + "'");
    return ss;
  }

  template <class T>
  T value(std::string_view key) {
    auto ss = keyed(key);
    T v;
    if (!(ss >> v)) fail("malformed value for '" + std::string(key) + "'");
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, lineno_); }

  std::size_t lineno() const noexcept { return lineno_; }

 private:
  std::istream& in_;
  std::size_t lineno_ = 0;
};

}  // namespace detail

inline Model load_model(std::istream& in) {
  detail::ModelReader r(in);
  {
    auto ss = std::istringstream(r.line());
    std::string magic;
    int version = -1;
    ss >> magic >> version;
    if (magic != kModelMagic) r.fail("not a model file");
    if (version != kModelFormatVersion) {
      throw Error("model format version " + std::to_string(version) + " is not supported (expected " +
                  std::to_string(kModelFormatVersion) + ")");
    }
  }
  const auto order = parse_order(r.value<std::string>("order"));
  if (!order) r.fail("unknown model order");
  const bool constrained = r.value<int>("constrained") != 0;
  std::vector<std::string> types(r.value<std::size_t>("entity_types"));
  for (auto& t : types) t = r.line();
  LabelAlphabet alphabet(types);
  const auto alpha_n = r.value<std::size_t>("alphabet");
  if (alpha_n != alphabet.expanded_size()) r.fail("alphabet size does not match entity types");
  for (std::size_t i = 0; i < alpha_n; ++i) {
    if (r.line() != alphabet.label(i)) r.fail("alphabet listing does not match entity types");
  }
  StateSpace space(alphabet, *order);
  if (r.value<std::size_t>("states") != space.effective_states()) r.fail("state count mismatch");
  if (*order == ModelOrder::Second && r.value<std::size_t>("start_pairs") != space.pairs().start_pair_count()) {
    r.fail("start pair count mismatch");
  }
  TemplateConfig tc;
  tc.set_id = r.value<int>("set");
  {
    auto ss = r.keyed("window");
    std::size_t n = 0;
    ss >> n;
    tc.window_offsets.assign(n, 0);
    for (auto& d : tc.window_offsets) {
      if (!(ss >> d)) r.fail("malformed window offsets");
    }
  }
  tc.use_normalized = r.value<int>("normalized") != 0;
  {
    auto ss = r.keyed("affixes");
    std::size_t n = 0;
    ss >> n;
    tc.affix_lengths.assign(n, 0);
    for (auto& l : tc.affix_lengths) {
      if (!(ss >> l)) r.fail("malformed affix lengths");
    }
  }
  tc.min_feature_count = r.value<std::size_t>("min_count");
  tc.validate();

  std::size_t feature_n = 0, block = 0;
  {
    auto ss = r.keyed("features");
    std::string kw;
    if (!(ss >> feature_n >> kw >> block) || kw != "block") r.fail("malformed features header");
  }
  if (block != space.slot_layout().block_size()) r.fail("feature block size does not match model order");
  std::vector<std::string> names(feature_n);
  for (auto& n : names) n = r.line();
  {
    auto ss = r.keyed("transitions");
    std::size_t n = 0;
    ss >> n;
    if (n != space.transition_parameter_count()) r.fail("transition parameter count mismatch");
  }
  std::vector<double> weights(r.value<std::size_t>("weights"));
  for (auto& w : weights) {
    const auto l = r.line();
    std::size_t used = 0;
    try {
      w = std::stod(l, &used);
    } catch (const std::exception&) {
      r.fail("malformed weight '" + l + "'");
    }
    if (used != l.size()) r.fail("malformed weight '" + l + "'");
  }
  if (r.line() != "end") r.fail("missing end marker");
  return Model(*order, std::move(alphabet), std::move(tc), std::move(names), std::move(weights), constrained);
}

inline void save_model(const std::string& path, const Model& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  save_model(out, m);
  if (!out) throw Error("failed writing '" + path + "'");
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace picrf
