#pragma once

// Corpus ingestion: record parsing, sentence/token splitting, entity mention
// extraction and vocabulary construction.
//
// Record format (one per line, UTF-8):
//   id <TAB> label <TAB> text [<TAB> entities]
// label is 0 (real), 1 (fake) or ? (unlabeled); entities is a '|'-separated
// list of surface strings, or empty to fall back to the capitalization
// heuristic.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace heterosgt::corpus {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RawArticle {
  std::string id;
  std::optional<int> label;  // 1 = fake, 0 = real
  std::string text;
  std::optional<std::vector<std::string>> entities;
};

// ---------------------------------------------------------------------------
// Text utilities

inline bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }
inline bool is_space(unsigned char c) { return c < 0x80 && std::isspace(c); }

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

/// Case-folded, whitespace-normalised key used to merge entity surfaces.
inline std::string fold_entity(std::string_view surface) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : trim(surface)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
  }
  return out;
}

/// A whitespace token with leading/trailing ASCII punctuation removed.
struct RawToken {
  std::string text;  // original casing
  bool leading_punct = false;
  bool trailing_punct = false;
};

using RawSentence = std::vector<RawToken>;

/// Splits on '.', '?' or '!' followed by whitespace (or end of text), then on
/// whitespace. Tokens that are pure punctuation and sentences with no tokens
/// are dropped.
inline std::vector<RawSentence> split_sentences(std::string_view text) {
  std::vector<RawSentence> sentences;
  RawSentence current;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    std::size_t start = i;
    while (i < n && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::string_view word = text.substr(start, i - start);
    const char last = word.back();
    const bool ends_sentence = last == '.' || last == '?' || last == '!';

    std::size_t b = 0, e = word.size();
    while (b < e && is_ascii_punct(static_cast<unsigned char>(word[b]))) ++b;
    while (e > b && is_ascii_punct(static_cast<unsigned char>(word[e - 1]))) --e;
    if (b < e) current.push_back(RawToken{std::string(word.substr(b, e - b)), b > 0, e < word.size()});
    if (ends_sentence && !current.empty()) {
      sentences.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  return sentences;
}

// ---------------------------------------------------------------------------
// Record IO

inline std::vector<std::string> split_fields(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.emplace_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline RawArticle parse_record(std::string_view line, std::size_t line_no) {
  auto fail = [&](const std::string& why) {
    return CorpusError("line " + std::to_string(line_no) + ": " + why);
  };
  auto fields = split_fields(line, '\t');
  if (fields.size() < 3 || fields.size() > 4)
    throw fail("expected 3 or 4 tab-separated fields, got " + std::to_string(fields.size()));
  RawArticle a;
  a.id = std::string(trim(fields[0]));
  if (a.id.empty()) throw fail("empty id");
  const std::string_view label = trim(fields[1]);
  if (label == "0") a.label = 0;
  else if (label == "1") a.label = 1;
  else if (label != "?") throw fail("label must be 0, 1 or ?, got '" + std::string(label) + "'");
  a.text = fields[2];
  if (trim(a.text).empty()) throw fail("empty text");
  if (fields.size() == 4 && !trim(fields[3]).empty()) {
    std::vector<std::string> ents;
    for (auto& e : split_fields(fields[3], '|')) {
      auto t = trim(e);
      if (!t.empty()) ents.emplace_back(t);
    }
    if (!ents.empty()) a.entities = std::move(ents);
  }
  return a;
}

inline std::vector<RawArticle> parse_corpus(std::istream& in) {
  std::vector<RawArticle> out;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    RawArticle a = parse_record(line, line_no);
    auto [it, inserted] = seen.emplace(a.id, line_no);
    if (!inserted)
      throw CorpusError("line " + std::to_string(line_no) + ": duplicate id '" + a.id + "' (first seen on line " +
                        std::to_string(it->second) + ")");
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<RawArticle> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path.string());
  return parse_corpus(in);
}

inline std::string format_record(const RawArticle& a) {
  std::string line = a.id + '\t' + (a.label ? std::to_string(*a.label) : std::string("?")) + '\t' + a.text + '\t';
  if (a.entities) {
    for (std::size_t i = 0; i < a.entities->size(); ++i) {
      if (i) line += '|';
      line += (*a.entities)[i];
    }
  }
  return line;
}

inline void save_corpus(const std::filesystem::path& path, const std::vector<RawArticle>& articles) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write corpus file: " + path.string());
  for (const auto& a : articles) out << format_record(a) << '\n';
}

// ---------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
 public:
  static constexpr int kUnknown = 0;

  int id(std::string_view token) const {
    auto it = index_.find(to_lower(token));
    return it == index_.end() ? kUnknown : it->second;
  }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t frequency(int id) const { return freq_.at(static_cast<std::size_t>(id)); }
  /// Number of ids including the reserved unknown id 0.
  std::size_t size() const { return tokens_.size(); }
  /// True when `lower` occurred somewhere in the corpus written in lowercase.
  bool seen_lowercase(const std::string& lower) const { return lowercase_forms_.count(lower) > 0; }
  std::size_t min_freq() const { return min_freq_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.freq_ == b.freq_ && a.min_freq_ == b.min_freq_ &&
           a.lowercase_forms_ == b.lowercase_forms_;
  }

 private:
  friend Vocabulary build_vocab(const std::vector<RawArticle>&, std::size_t);

  std::vector<std::string> tokens_{"<unk>"};
  std::vector<std::size_t> freq_{0};
  std::unordered_map<std::string, int> index_;
  std::set<std::string> lowercase_forms_;
  std::size_t min_freq_ = 1;
};

/// Ids are assigned by descending frequency, then lexicographically. Tokens
/// with frequency below min_freq are folded into id 0.
inline Vocabulary build_vocab(const std::vector<RawArticle>& articles, std::size_t min_freq = 2) {
  if (articles.empty()) throw CorpusError("cannot build a vocabulary from an empty corpus");
  if (min_freq < 1) throw CorpusError("min_freq must be at least 1");
  std::map<std::string, std::size_t> counts;
  Vocabulary v;
  v.min_freq_ = min_freq;
  for (const auto& a : articles) {
    for (const auto& sentence : split_sentences(a.text)) {
      for (const auto& tok : sentence) {
        std::string lower = to_lower(tok.text);
        if (lower == tok.text) v.lowercase_forms_.insert(lower);
        ++counts[std::move(lower)];
      }
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  for (auto& [tok, f] : ranked) {
    if (f < min_freq) {
      v.freq_[0] += f;
      continue;
    }
    v.index_.emplace(tok, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(tok);
    v.freq_.push_back(f);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Entities

struct SurfaceMention {
  std::string key;  // folded surface
  std::size_t sentence = 0;
};

inline bool is_capitalized_word(std::string_view t) {
  if (t.empty() || !std::isupper(static_cast<unsigned char>(t[0]))) return false;
  return std::all_of(t.begin(), t.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::isalpha(u);
  });
}

/// Maximal runs of capitalized alphabetic tokens within a sentence. Punctuation
/// attached to a token closes the run. A lone sentence-initial token is dropped
/// when its lowercase form is used elsewhere in the corpus.
inline std::vector<SurfaceMention> extract_entities(const std::vector<RawSentence>& sentences,
                                                    const Vocabulary& vocab) {
  std::vector<SurfaceMention> out;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& toks = sentences[s];
    std::size_t i = 0;
    while (i < toks.size()) {
      if (!is_capitalized_word(toks[i].text)) {
        ++i;
        continue;
      }
      const std::size_t start = i;
      std::string surface = toks[i].text;
      bool closed = toks[i].trailing_punct;
      ++i;
      while (!closed && i < toks.size() && is_capitalized_word(toks[i].text) && !toks[i].leading_punct) {
        surface += ' ';
        surface += toks[i].text;
        closed = toks[i].trailing_punct;
        ++i;
      }
      const bool single = i - start == 1;
      if (single && start == 0 && vocab.seen_lowercase(to_lower(toks[start].text))) continue;
      out.push_back(SurfaceMention{fold_entity(surface), s});
    }
  }
  return out;
}

/// Mentions of one article: the pre-annotated list when present, otherwise the
/// heuristic. Pre-annotated surfaces are located in the first sentence whose
/// lowercased text contains them (sentence 0 if none does).
inline std::vector<SurfaceMention> article_mentions(const RawArticle& a, const std::vector<RawSentence>& sentences,
                                                    const Vocabulary& vocab) {
  if (!a.entities) return extract_entities(sentences, vocab);
  std::vector<std::string> lowered;
  for (const auto& s : sentences) {
    std::string joined;
    for (const auto& t : s) {
      joined += to_lower(t.text);
      joined += ' ';
    }
    lowered.push_back(std::move(joined));
  }
  std::vector<SurfaceMention> out;
  for (const auto& surface : *a.entities) {
    SurfaceMention m{fold_entity(surface), 0};
    for (std::size_t s = 0; s < lowered.size(); ++s) {
      if (lowered[s].find(m.key) != std::string::npos) {
        m.sentence = s;
        break;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

class EntityTable {
 public:
  /// -1 when the surface is unknown.
  int id(std::string_view surface) const {
    auto it = index_.find(fold_entity(surface));
    return it == index_.end() ? -1 : it->second;
  }
  const std::string& surface(int id) const { return surfaces_.at(static_cast<std::size_t>(id)); }
  std::size_t doc_frequency(int id) const { return doc_freq_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return surfaces_.size(); }

  friend bool operator==(const EntityTable&, const EntityTable&) = default;

 private:
  friend EntityTable build_entity_table(const std::vector<RawArticle>&, const Vocabulary&);

  std::vector<std::string> surfaces_;
  std::vector<std::size_t> doc_freq_;
  std::map<std::string, int> index_;
};

/// Entity ids follow lexicographic order of the folded surfaces.
inline EntityTable build_entity_table(const std::vector<RawArticle>& articles, const Vocabulary& vocab) {
  std::map<std::string, std::size_t> df;
  for (const auto& a : articles) {
    std::set<std::string> keys;
    for (auto& m : article_mentions(a, split_sentences(a.text), vocab)) keys.insert(std::move(m.key));
    for (const auto& k : keys) ++df[k];
  }
  EntityTable t;
  for (const auto& [key, f] : df) {
    t.index_.emplace(key, static_cast<int>(t.surfaces_.size()));
    t.surfaces_.push_back(key);
    t.doc_freq_.push_back(f);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Documents

struct EntityMention {
  int entity = 0;
  std::size_t sentence = 0;
  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct Document {
  std::string id;
  std::optional<int> label;
  std::vector<std::vector<int>> sentences;
  std::vector<EntityMention> entity_mentions;

  /// Distinct entity ids, ascending.
  std::vector<int> entity_set() const {
    std::vector<int> out;
    for (const auto& m : entity_mentions) out.push_back(m.entity);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }

  friend bool operator==(const Document&, const Document&) = default;
};

struct AnnotateOptions {
  std::size_t max_sentences = 0;  // 0 = unlimited
  std::size_t max_tokens = 0;     // per sentence, 0 = unlimited
};

inline Document annotate(const RawArticle& a, const Vocabulary& vocab, const EntityTable& entities,
                         const AnnotateOptions& opts = {}) {
  const auto raw = split_sentences(a.text);
  if (raw.empty()) throw CorpusError("article '" + a.id + "' has no sentences");
  Document d;
  d.id = a.id;
  d.label = a.label;
  for (const auto& s : raw) {
    if (opts.max_sentences && d.sentences.size() == opts.max_sentences) break;
    std::vector<int> ids;
    for (const auto& t : s) {
      if (opts.max_tokens && ids.size() == opts.max_tokens) break;
      ids.push_back(vocab.id(t.text));
    }
    d.sentences.push_back(std::move(ids));
  }
  for (const auto& m : article_mentions(a, raw, vocab)) {
    const int e = entities.id(m.key);
    if (e < 0) continue;
    EntityMention em{e, std::min(m.sentence, d.sentences.size() - 1)};
    if (std::find(d.entity_mentions.begin(), d.entity_mentions.end(), em) == d.entity_mentions.end())
      d.entity_mentions.push_back(em);
  }
  return d;
}

/// Vocabulary, entity table and annotated documents for one corpus.
struct AnnotatedCorpus {
  Vocabulary vocab;
  EntityTable entities;
  std::vector<Document> docs;
};

inline AnnotatedCorpus annotate_corpus(const std::vector<RawArticle>& articles, std::size_t min_freq = 2,
                                       const AnnotateOptions& opts = {}) {
  AnnotatedCorpus c;
  c.vocab = build_vocab(articles, min_freq);
  c.entities = build_entity_table(articles, c.vocab);
  c.docs.reserve(articles.size());
  for (const auto& a : articles) c.docs.push_back(annotate(a, c.vocab, c.entities, opts));
  return c;
}

}  // namespace heterosgt::corpus
