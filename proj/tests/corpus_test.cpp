#include <heterosgt/corpus.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace heterosgt::corpus {
namespace {

RawArticle article(std::string id, std::string text, std::optional<int> label = 0) {
  return RawArticle{std::move(id), label, std::move(text), std::nullopt};
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p, std::ios::binary) << body;
  return p;
}

TEST(LoadCorpus, ReadsRecordsInFileOrder) {
  auto p = temp_file("corpus_three.tsv",
                     "a\t1\tFirst text.\t\n"
                     "b\t0\tSecond text.\tFoo|Bar\n"
                     "c\t?\tThird text.\n");
  auto arts = load_corpus(p);
  ASSERT_EQ(arts.size(), 3u);
  EXPECT_EQ(arts[0].id, "a");
  EXPECT_EQ(arts[0].label, 1);
  EXPECT_FALSE(arts[0].entities.has_value());
  EXPECT_EQ(arts[1].label, 0);
  ASSERT_TRUE(arts[1].entities.has_value());
  EXPECT_EQ(*arts[1].entities, (std::vector<std::string>{"Foo", "Bar"}));
  EXPECT_FALSE(arts[2].label.has_value());
}

TEST(LoadCorpus, EmptyFileGivesNoArticles) {
  EXPECT_TRUE(load_corpus(temp_file("corpus_empty.tsv", "")).empty());
}

TEST(LoadCorpus, MalformedLineReportsLineNumber) {
  auto p = temp_file("corpus_bad.tsv", "a\t1\tok.\n\nb\t7\tbad label.\n");
  try {
    load_corpus(p);
    FAIL() << "expected a parse error";
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_corpus(temp_file("corpus_fields.tsv", "only-one-field\n")), CorpusError);
  EXPECT_THROW(load_corpus("/nonexistent/corpus.tsv"), CorpusError);
}

TEST(LoadCorpus, DuplicateIdsAreRejected) {
  auto p = temp_file("corpus_dup.tsv", "x\t1\tone.\nx\t0\ttwo.\n");
  EXPECT_THROW(load_corpus(p), CorpusError);
}

TEST(LoadCorpus, FullSizeCorpusRoundTrips) {
  std::vector<RawArticle> arts;
  for (int i = 0; i < 3048; ++i)
    arts.push_back(article("n" + std::to_string(i), "Some text number " + std::to_string(i) + ".", i < 1888 ? 1 : 0));
  auto p = std::filesystem::temp_directory_path() / "corpus_full.tsv";
  save_corpus(p, arts);
  auto back = load_corpus(p);
  ASSERT_EQ(back.size(), 3048u);
  int fake = 0;
  for (const auto& a : back) fake += *a.label;
  EXPECT_EQ(fake, 1888);
  EXPECT_EQ(back[17].text, arts[17].text);
}

TEST(Sentences, SplitOnTerminalPunctuationFollowedBySpace) {
  auto s = split_sentences("Hello there. How are you? Fine! v1.2 is out");
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].size(), 2u);
  EXPECT_EQ(s[1].back().text, "you");
  EXPECT_EQ(s[2][0].text, "Fine");
  EXPECT_EQ(s[3][0].text, "v1.2");
  EXPECT_TRUE(split_sentences("  ... !!  ").empty());
}

TEST(Vocab, FrequencyThenLexicographicIds) {
  auto v = build_vocab({article("1", "a a b")}, 1);
  EXPECT_EQ(v.id("a"), 1);
  EXPECT_EQ(v.id("b"), 2);
  EXPECT_EQ(v.size(), 3u);
  auto tied = build_vocab({article("1", "zeta alpha mid")}, 1);
  EXPECT_EQ(tied.id("alpha"), 1);
  EXPECT_EQ(tied.id("mid"), 2);
  EXPECT_EQ(tied.id("zeta"), 3);
}

TEST(Vocab, RareTokensMapToUnknown) {
  auto v = build_vocab({article("1", "a a b")}, 2);
  EXPECT_EQ(v.id("a"), 1);
  EXPECT_EQ(v.id("b"), Vocabulary::kUnknown);
  EXPECT_EQ(v.frequency(0), 1u);
  EXPECT_EQ(v.id("never-seen"), Vocabulary::kUnknown);
}

TEST(Vocab, DeterministicAndRoundTrips) {
  std::vector<RawArticle> arts{article("1", "The cat sat. The dog ran!"), article("2", "A cat, a dog; the end.")};
  auto v1 = build_vocab(arts, 1);
  auto v2 = build_vocab(arts, 1);
  EXPECT_TRUE(v1 == v2);
  for (std::size_t id = 1; id < v1.size(); ++id) {
    EXPECT_EQ(v1.id(v1.token(static_cast<int>(id))), static_cast<int>(id));
    EXPECT_GE(v1.frequency(static_cast<int>(id)), 1u);
  }
  EXPECT_EQ(v1.id("The"), v1.id("the"));
  EXPECT_THROW(build_vocab({}, 1), CorpusError);
  EXPECT_THROW(build_vocab(arts, 0), CorpusError);
}

std::vector<std::string> mention_keys(const Document& d, const EntityTable& t) {
  std::vector<std::string> out;
  for (const auto& m : d.entity_mentions) out.push_back(t.surface(m.entity));
  return out;
}

TEST(Entities, CapitalizedRuns) {
  auto c = annotate_corpus({article("1", "Donald Trump spoke in New York.")}, 1);
  EXPECT_EQ(mention_keys(c.docs[0], c.entities), (std::vector<std::string>{"donald trump", "new york"}));
}

TEST(Entities, NoCapitalsNoMentions) {
  auto c = annotate_corpus({article("1", "the virus spread.")}, 1);
  EXPECT_TRUE(c.docs[0].entity_mentions.empty());
  EXPECT_EQ(c.entities.size(), 0u);
}

TEST(Entities, PreAnnotatedBypassesHeuristic) {
  RawArticle a = article("1", "Donald Trump says 5G spreads covid-19.");
  a.entities = std::vector<std::string>{"5G", "COVID-19"};
  auto c = annotate_corpus({a}, 1);
  auto keys = mention_keys(c.docs[0], c.entities);
  std::sort(keys.begin(), keys.end());
  EXPECT_EQ(keys, (std::vector<std::string>{"5g", "covid-19"}));
  EXPECT_EQ(c.entities.size(), 2u);
}

TEST(Entities, CaseVariantsMerge) {
  RawArticle a = article("1", "one.");
  a.entities = std::vector<std::string>{"COVID-19"};
  RawArticle b = article("2", "two.");
  b.entities = std::vector<std::string>{"Covid-19"};
  auto c = annotate_corpus({a, b}, 1);
  ASSERT_EQ(c.entities.size(), 1u);
  EXPECT_EQ(c.entities.doc_frequency(0), 2u);
}

TEST(Entities, SentenceInitialCommonWordIsDropped) {
  auto c = annotate_corpus({article("1", "Officials met Smith at the door. Officials left."),
                            article("2", "The officials agreed. Smith spoke.")},
                           1);
  EXPECT_EQ(mention_keys(c.docs[0], c.entities), (std::vector<std::string>{"smith"}));
  EXPECT_EQ(mention_keys(c.docs[1], c.entities), (std::vector<std::string>{"smith"}));
  EXPECT_EQ(c.docs[1].entity_mentions[0].sentence, 1u);
}

TEST(Entities, NeverSpanSentenceBoundaries) {
  auto c = annotate_corpus({article("1", "He visited New. York was cold. Paris Hilton, London Bridge.")}, 1);
  auto keys = mention_keys(c.docs[0], c.entities);
  for (const auto& k : keys) EXPECT_EQ(k.find("new york"), std::string::npos);
  EXPECT_NE(std::find(keys.begin(), keys.end(), "paris hilton"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "london bridge"), keys.end());
  for (const auto& m : c.docs[0].entity_mentions) EXPECT_LT(m.sentence, c.docs[0].sentences.size());
}

TEST(Annotate, DeterministicAndConsistent) {
  std::vector<RawArticle> arts{article("1", "Alice met Bob in Paris. They ate."),
                               article("2", "Bob left Paris! Alice stayed?")};
  auto c = annotate_corpus(arts, 1);
  for (std::size_t i = 0; i < arts.size(); ++i) {
    EXPECT_TRUE(annotate(arts[i], c.vocab, c.entities) == c.docs[i]);
    for (const auto& s : c.docs[i].sentences) {
      EXPECT_FALSE(s.empty());
      for (int t : s) EXPECT_LT(static_cast<std::size_t>(t), c.vocab.size());
    }
    for (const auto& m : c.docs[i].entity_mentions) {
      EXPECT_GE(m.entity, 0);
      EXPECT_LT(static_cast<std::size_t>(m.entity), c.entities.size());
    }
  }
  EXPECT_EQ(c.docs[0].sentences.size(), 2u);
}

TEST(Annotate, EmptyDocumentIsAnError) {
  auto v = build_vocab({article("1", "x")}, 1);
  EntityTable t;
  EXPECT_THROW(annotate(article("2", "?!. ..."), v, t), CorpusError);
}

TEST(Annotate, LengthCaps) {
  auto arts = std::vector<RawArticle>{article("1", "a b c d. e f g. h i.")};
  auto c = annotate_corpus(arts, 1, AnnotateOptions{2, 3});
  ASSERT_EQ(c.docs[0].sentences.size(), 2u);
  EXPECT_EQ(c.docs[0].sentences[0].size(), 3u);
}

}  // namespace
}  // namespace heterosgt::corpus
