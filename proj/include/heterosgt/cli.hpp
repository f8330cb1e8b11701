#pragma once

// Command-line driver: synth, ingest, topics, graph, sample, train, eval,
// ablate and sweep. Exit status 0 on success, 1 on usage errors, 2 on runtime
// errors.

#include "checkpoint.hpp"
#include "config.hpp"
#include "report.hpp"
#include "sampler.hpp"
#include "synth.hpp"
#include "topics.hpp"
#include "trainer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace heterosgt::cli {

namespace fs = std::filesystem;
using trainer::TrainConfig;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Grids

/// "a", "a,b,c", "a..b" or "a..b:step". Without a step, integer keys step by
/// 1 and real keys by 0.1.
inline std::vector<std::string> parse_grid(const std::string& key, const std::string& text, bool integral) {
  if (text.empty()) throw UsageError("empty grid for --" + key);
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto v = corpus::trim(item);
      if (v.empty()) throw UsageError("empty grid entry for --" + key);
      out.emplace_back(v);
    }
    return out;
  }
  auto number = [&](std::string_view s) {
    const std::string v(corpus::trim(s));
    try {
      return config::detail::parse_number<double>(key, v);
    } catch (const config::ConfigError&) {
      throw UsageError("bad grid '" + text + "' for --" + key);
    }
  };
  const auto colon = text.find(':', dots);
  const double lo = number(std::string_view(text).substr(0, dots));
  const double hi = number(std::string_view(text).substr(dots + 2, colon == std::string::npos ? std::string::npos
                                                                                             : colon - dots - 2));
  const double step = colon == std::string::npos ? (integral ? 1.0 : 0.1) : number(std::string_view(text).substr(colon + 1));
  if (!(step > 0.0) || hi < lo) throw UsageError("bad grid '" + text + "' for --" + key);
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = lo + static_cast<double>(i) * step;
    if (integral) {
      if (v != std::round(v)) throw UsageError("grid for --" + key + " must be integral");
      out.push_back(std::to_string(static_cast<long long>(std::llround(v))));
    } else {
      out.push_back(config::format_double(std::round(v * 1e12) / 1e12));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared options

/// TrainConfig keys as flags, plus --config and the run keys.
struct RunOptions {
  std::string config_file;
  std::string corpus;
  std::string out;
  std::size_t rounds = 1;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> flags;
  CLI::Option* corpus_opt = nullptr;
  CLI::Option* rounds_opt = nullptr;

  void add_to(CLI::App* app, const std::vector<std::string>& skip = {}) {
    app->add_option("--config", config_file, "key = value config file; flags override it");
    for (const auto& [key, value] : config::to_key_values(TrainConfig{})) {
      if (std::find(skip.begin(), skip.end(), key) != skip.end()) continue;
      flags[key] = app->add_option("--" + key, values[key], "config key (default " + value + ")");
    }
  }
  void add_corpus(CLI::App* app) { corpus_opt = app->add_option("--corpus", corpus, "corpus file"); }
  void add_rounds(CLI::App* app) {
    rounds_opt = app->add_option("--rounds", rounds, "independent rounds, seeds seed..seed+rounds-1");
  }

  /// Defaults, then the config file, then explicit flags.
  TrainConfig resolve(TrainConfig base = {}) {
    TrainConfig cfg = base;
    if (!config_file.empty()) {
      if (!fs::exists(config_file)) throw std::runtime_error("config file not found: " + config_file);
      for (const auto& [k, v] : config::load_file(config_file)) {
        if (config::is_train_key(k)) config::apply(cfg, k, v);
        else if (k == "corpus") {
          if (!corpus_opt || !corpus_opt->count()) corpus = v;
        } else if (k == "rounds") {
          if (!rounds_opt || !rounds_opt->count()) rounds = config::detail::parse_number<std::size_t>(k, v);
        } else if (k == "input_sha1") {
          expected_sha1 = v;
        } else if (k != "command") {
          throw config::ConfigError("unknown config key '" + k + "'");
        }
      }
    }
    for (const auto& [key, opt] : flags)
      if (opt->count()) config::apply(cfg, key, values[key]);
    cfg.validate();
    if (rounds < 1) throw UsageError("--rounds must be at least 1");
    return cfg;
  }

  std::vector<corpus::RawArticle> load() const {
    if (corpus.empty()) throw UsageError("--corpus is required");
    auto articles = corpus::load_corpus(corpus);
    if (expected_sha1 && report::file_sha1(corpus) != *expected_sha1)
      throw std::runtime_error("corpus " + corpus + " does not match the manifest's input_sha1");
    return articles;
  }

  std::optional<std::string> expected_sha1;
};

inline void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) out << text;
  else report::write_text(path, text);
}

inline TrainConfig round_config(TrainConfig cfg, std::size_t round) {
  cfg.seed += round - 1;
  return cfg;
}

inline report::Summary test_summary(const std::vector<corpus::RawArticle>& articles, const TrainConfig& cfg,
                                    std::size_t rounds, std::ostream& err, const std::string& label) {
  std::vector<metrics::Metrics> runs;
  for (std::size_t r = 1; r <= rounds; ++r) {
    const auto res = trainer::train(articles, round_config(cfg, r));
    runs.push_back(res.split_metrics("test"));
    err << label << " round " << r << ": test acc " << report::format_number(runs.back().accuracy) << " auc "
        << report::format_auc(runs.back().auc) << '\n';
  }
  return report::summarize(runs);
}

// ---------------------------------------------------------------------------
// Commands

struct SynthOptions {
  synth::SynthSpec spec;
  std::string preset = "default";
  std::string out;
  std::map<std::string, CLI::Option*> given;

  void add_to(CLI::App* app) {
    app->add_option("--preset", preset, "default or benchmark")->check(CLI::IsMember({"default", "benchmark"}));
    app->add_option("--out", out, "output corpus file")->required();
    given["clusters"] = app->add_option("--clusters", spec.clusters);
    given["entities_per_cluster"] = app->add_option("--entities_per_cluster", spec.entities_per_cluster);
    given["words_per_cluster"] = app->add_option("--words_per_cluster", spec.words_per_cluster);
    given["articles_per_cluster"] = app->add_option("--articles_per_cluster", spec.articles_per_cluster);
    given["fake_fraction"] = app->add_option("--fake_fraction", spec.fake_fraction);
    given["min_sentences"] = app->add_option("--min_sentences", spec.min_sentences);
    given["max_sentences"] = app->add_option("--max_sentences", spec.max_sentences);
    given["min_sentence_len"] = app->add_option("--min_sentence_len", spec.min_sentence_len);
    given["max_sentence_len"] = app->add_option("--max_sentence_len", spec.max_sentence_len);
    given["min_entities"] = app->add_option("--min_entities", spec.min_entities);
    given["max_entities"] = app->add_option("--max_entities", spec.max_entities);
    given["common_word_rate"] = app->add_option("--common_word_rate", spec.common_word_rate);
    given["seed"] = app->add_option("--seed", spec.seed);
  }

  synth::SynthSpec resolve() const {
    if (preset == "default") return spec;
    synth::SynthSpec s = synth::benchmark_spec(spec.seed);
    auto take = [&](const char* key, auto& dst, const auto& src) {
      if (given.at(key)->count()) dst = src;
    };
    take("clusters", s.clusters, spec.clusters);
    take("entities_per_cluster", s.entities_per_cluster, spec.entities_per_cluster);
    take("words_per_cluster", s.words_per_cluster, spec.words_per_cluster);
    take("articles_per_cluster", s.articles_per_cluster, spec.articles_per_cluster);
    take("fake_fraction", s.fake_fraction, spec.fake_fraction);
    take("min_sentences", s.min_sentences, spec.min_sentences);
    take("max_sentences", s.max_sentences, spec.max_sentences);
    take("min_sentence_len", s.min_sentence_len, spec.min_sentence_len);
    take("max_sentence_len", s.max_sentence_len, spec.max_sentence_len);
    take("min_entities", s.min_entities, spec.min_entities);
    take("max_entities", s.max_entities, spec.max_entities);
    take("common_word_rate", s.common_word_rate, spec.common_word_rate);
    return s;
  }
};

inline void cmd_synth(const SynthOptions& o, std::ostream& out) {
  const auto corpus = synth::generate_synthetic(o.resolve());
  corpus::save_corpus(o.out, corpus.articles);
  std::size_t fake = 0;
  for (const auto& a : corpus.articles) fake += a.label == 1;
  out << "wrote " << corpus.articles.size() << " articles (" << fake << " fake) to " << o.out << '\n';
}

/// Loads and annotates; a corpus with unlabeled-only content or empty
/// documents fails validation.
inline void cmd_ingest(RunOptions& o, std::ostream& out) {
  const TrainConfig cfg = o.resolve();
  const auto articles = o.load();
  if (articles.empty()) throw std::runtime_error("corpus " + o.corpus + " has no records");
  const auto c = corpus::annotate_corpus(articles, cfg.min_freq, {cfg.max_sentences, cfg.max_tokens});
  std::size_t fake = 0, real = 0, unlabeled = 0, sentences = 0, tokens = 0, mentions = 0;
  std::vector<std::string> empty;
  for (std::size_t i = 0; i < articles.size(); ++i) {
    if (!articles[i].label) ++unlabeled;
    else if (*articles[i].label == 1) ++fake;
    else ++real;
    const auto& d = c.docs[i];
    if (d.sentences.empty()) empty.push_back(articles[i].id);
    sentences += d.sentences.size();
    for (const auto& s : d.sentences) tokens += s.size();
    mentions += d.entity_mentions.size();
  }
  const double n = static_cast<double>(articles.size());
  out << "articles: " << articles.size() << '\n'
      << "fake: " << fake << '\n'
      << "real: " << real << '\n'
      << "unlabeled: " << unlabeled << '\n'
      << "vocab_size: " << c.vocab.size() << '\n'
      << "entities: " << c.entities.size() << '\n'
      << "mean_sentences: " << report::format_number(static_cast<double>(sentences) / n) << '\n'
      << "mean_tokens: " << report::format_number(static_cast<double>(tokens) / n) << '\n'
      << "mean_entity_mentions: " << report::format_number(static_cast<double>(mentions) / n) << '\n'
      << "input_sha1: " << report::file_sha1(o.corpus) << '\n';
  if (!empty.empty()) throw std::runtime_error("article '" + empty.front() + "' has no text after tokenization");
}

inline void cmd_topics(RunOptions& o, const std::string& grid, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = o.resolve();
  const auto articles = o.load();
  const auto c = corpus::annotate_corpus(articles, cfg.min_freq, {cfg.max_sentences, cfg.max_tokens});
  const auto docs = topics::token_docs(c.docs);
  const auto split = trainer::split_dataset(docs.size(), cfg.split, derive_seed(cfg.seed, "topics"));
  std::vector<topics::TokenDoc> fit, heldout;
  for (auto part : {&split.train, &split.val})
    for (std::size_t i : *part) fit.push_back(docs[i]);
  for (std::size_t i : split.test) heldout.push_back(docs[i]);
  std::vector<int> ks;
  for (const auto& k : parse_grid("k", grid, true)) ks.push_back(config::detail::parse_number<int>("k", k));
  const auto points =
      topics::sweep_k(fit, heldout, c.vocab.size(), ks, cfg.lda_alpha, cfg.lda_beta, cfg.lda_iterations, cfg.seed);
  std::ostringstream csv;
  csv << "k,perplexity,coherence\n";
  for (const auto& p : points)
    csv << p.k << ',' << report::format_number(p.perplexity) << ',' << report::format_number(p.coherence) << '\n';
  write_or_print(o.out, csv.str(), out);
  err << "best k by coherence: " << topics::best_k_by_coherence(points) << '\n';
}

inline void cmd_graph(RunOptions& o, std::ostream& out) {
  const TrainConfig cfg = o.resolve();
  if (cfg.ablation == trainer::Ablation::NoHg) throw UsageError("graph: ablation no_hg has no graph");
  const auto ds = trainer::prepare_dataset(o.load(), cfg);
  write_or_print(o.out, report::graph_stats(trainer::build_hetero_graph(ds, cfg)), out);
}

inline void cmd_sample(RunOptions& o, std::size_t roots, std::ostream& out) {
  const TrainConfig cfg = o.resolve();
  if (cfg.ablation == trainer::Ablation::NoHg) throw UsageError("sample: ablation no_hg has no graph");
  const auto articles = o.load();
  const auto ds = trainer::prepare_dataset(articles, cfg);
  const auto g = trainer::build_hetero_graph(ds, cfg);
  std::ostringstream csv;
  csv << "root_id,position,node_kind,node_index\n";
  const std::size_t n = roots ? std::min(roots, articles.size()) : articles.size();
  for (std::size_t i = 0; i < n; ++i)
    sampler::write_sequence_csv(csv, articles[i].id,
                                sampler::sample_subgraph(g, hgraph::news(i), cfg.wl, cfg.r,
                                                         sampler::walk_seed(cfg.seed, i, 0)));
  write_or_print(o.out, csv.str(), out);
}

inline std::vector<const ad::Parameter*> const_params(trainer::Model& m) {
  std::vector<const ad::Parameter*> out;
  for (const ad::Parameter* p : m.parameters()) out.push_back(p);
  return out;
}

inline void write_history(std::ostream& os, std::size_t round, const std::vector<trainer::EpochRecord>& history) {
  for (const auto& h : history)
    os << round << ',' << h.phase << ',' << h.epoch << ',' << report::format_number(h.train_loss) << ','
       << report::format_number(h.train_acc) << ',' << report::format_number(h.val_acc) << ','
       << report::format_number(h.val_f1) << ',' << report::format_number(h.val_loss) << '\n';
}

/// Writes metrics.csv, history.csv, roc.csv, graph_stats.txt, model.ckpt and
/// manifest.txt into --out. ROC, graph stats and checkpoint come from round 1.
inline void cmd_train(RunOptions& o, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = o.resolve();
  if (o.out.empty()) throw UsageError("train: --out is required");
  const auto articles = o.load();
  const fs::path dir = o.out;
  report::ensure_dir(dir);
  std::vector<report::MetricsRow> rows;
  std::vector<metrics::Metrics> test;
  std::ostringstream history;
  history << "round,phase,epoch,train_loss,train_acc,val_acc,val_f1,val_loss\n";
  for (std::size_t r = 1; r <= o.rounds; ++r) {
    const TrainConfig rc = round_config(cfg, r);
    auto res = trainer::train(articles, rc);
    for (const char* split : {"train", "val", "test"}) rows.push_back({r, split, res.split_metrics(split)});
    test.push_back(res.split_metrics("test"));
    write_history(history, r, res.history);
    err << "round " << r << ": best epoch " << res.best_epoch << ", test acc "
        << report::format_number(test.back().accuracy) << " auc " << report::format_auc(test.back().auc) << '\n';
    if (r == 1) {
      std::ostringstream roc;
      report::write_roc_csv(roc, res.split_metrics("test").roc);
      report::write_text(dir / "roc.csv", roc.str());
      if (res.graph) report::write_text(dir / "graph_stats.txt", report::graph_stats(*res.graph));
      checkpoint::save(dir / "model.ckpt", config::format(rc), const_params(res.model));
    }
  }
  std::ostringstream csv;
  report::write_metrics_csv(csv, rows);
  report::write_text(dir / "metrics.csv", csv.str());
  report::write_text(dir / "history.csv", history.str());
  report::write_text(dir / "manifest.txt",
                     report::manifest(cfg, {{"command", "train"},
                                            {"corpus", fs::absolute(o.corpus).string()},
                                            {"input_sha1", report::file_sha1(o.corpus)},
                                            {"rounds", std::to_string(o.rounds)}}));
  const auto s = report::summarize(test);
  out << "test over " << s.rounds << " round(s): acc " << report::format_mean_sd(s.acc) << ", m_pre "
      << report::format_mean_sd(s.m_pre) << ", m_rec " << report::format_mean_sd(s.m_rec) << ", m_f1 "
      << report::format_mean_sd(s.m_f1) << ", auc " << report::format_mean_sd(s.auc) << '\n';
}

/// Evaluates a checkpoint without training; the checkpoint's config is the
/// base that flags may override.
inline void cmd_eval(RunOptions& o, const std::string& ckpt_path, const std::string& roc_split, std::ostream& out) {
  const auto ck = checkpoint::load(ckpt_path);
  TrainConfig base;
  config::apply(base, config::parse_text(ck.config, ckpt_path));
  const TrainConfig cfg = o.resolve(base);
  const auto res = trainer::run_pipeline(o.load(), cfg, false,
                                         [&](trainer::Model& m) { checkpoint::restore(ck, m.parameters()); });
  std::vector<report::MetricsRow> rows;
  for (const char* split : {"train", "val", "test", "all"}) rows.push_back({1, split, res.split_metrics(split)});
  std::ostringstream csv, roc;
  report::write_metrics_csv(csv, rows);
  report::write_roc_csv(roc, res.split_metrics(roc_split).roc);
  if (o.out.empty()) {
    out << csv.str();
    return;
  }
  const fs::path dir = o.out;
  report::ensure_dir(dir);
  report::write_text(dir / "metrics.csv", csv.str());
  report::write_text(dir / "roc.csv", roc.str());
  out << csv.str();
}

struct Variant {
  std::string id;
  void (*apply)(TrainConfig&);
};

/// RPE removal, the two alternative readouts and the graph ablations.
inline const std::vector<Variant>& ablation_variants() {
  static const std::vector<Variant> v{
      {"full", [](TrainConfig&) {}},
      {"no_rpe", [](TrainConfig& c) { c.use_rpe = false; }},
      {"readout_mean", [](TrainConfig& c) { c.readout = sgt::Readout::Mean; }},
      {"readout_max", [](TrainConfig& c) { c.readout = sgt::Readout::Max; }},
      {"no_hg", [](TrainConfig& c) { c.ablation = trainer::Ablation::NoHg; }},
      {"no_et", [](TrainConfig& c) { c.ablation = trainer::Ablation::NoEt; }},
      {"no_e", [](TrainConfig& c) { c.ablation = trainer::Ablation::NoE; }},
      {"no_t", [](TrainConfig& c) { c.ablation = trainer::Ablation::NoT; }},
  };
  return v;
}

inline void cmd_ablate(RunOptions& o, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = o.resolve();
  const auto articles = o.load();
  std::ostringstream csv;
  csv << "variant,rounds," << report::kSummaryColumns << '\n';
  for (const auto& v : ablation_variants()) {
    TrainConfig c = cfg;
    v.apply(c);
    const auto s = test_summary(articles, c, o.rounds, err, v.id);
    csv << v.id << ',' << s.rounds << ',' << report::summary_fields(s) << '\n';
  }
  write_or_print(o.out, csv.str(), out);
}

inline const std::vector<std::pair<std::string, bool>>& sweep_keys() {
  static const std::vector<std::pair<std::string, bool>> keys{
      {"wl", true}, {"r", false}, {"layers", true}, {"d", true}, {"lambda_t", true}, {"k", true}};
  return keys;
}

inline void cmd_sweep(RunOptions& o, const std::map<std::string, std::string>& grids, std::ostream& out,
                      std::ostream& err) {
  const TrainConfig cfg = o.resolve();
  const auto base = config::to_key_values(cfg);
  std::vector<std::vector<std::string>> axes;
  bool any = false;
  for (const auto& [key, integral] : sweep_keys()) {
    const auto& text = grids.at(key);
    if (!text.empty()) {
      axes.push_back(parse_grid(key, text, integral));
      any = true;
    } else {
      for (const auto& [k, v] : base)
        if (k == key) axes.push_back({v});
    }
  }
  if (!any) throw UsageError("sweep: give at least one grid (--wl, --r, --layers, --d, --lambda_t, --k)");
  const auto articles = o.load();
  std::ostringstream csv;
  csv << "wl,r,layers,d,lambda_t,k,rounds," << report::kSummaryColumns << '\n';
  std::vector<std::size_t> idx(axes.size(), 0);
  for (;;) {
    TrainConfig c = cfg;
    std::string label;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      config::apply(c, sweep_keys()[a].first, axes[a][idx[a]]);
      label += (a ? "," : "") + axes[a][idx[a]];
    }
    c.validate();
    const auto s = test_summary(articles, c, o.rounds, err, label);
    csv << label << ',' << s.rounds << ',' << report::summary_fields(s) << '\n';
    std::size_t a = axes.size();
    while (a > 0 && ++idx[a - 1] == axes[a - 1].size()) idx[--a] = 0;
    if (a == 0) break;
  }
  write_or_print(o.out, csv.str(), out);
}

// ---------------------------------------------------------------------------
// Entry point

inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"Fake news detection with heterogeneous subgraph transformers"};
  app.name("heterosgt");
  app.require_subcommand(1);

  SynthOptions synth_o;
  synth_o.add_to(app.add_subcommand("synth", "generate a planted-anomaly synthetic corpus"));

  RunOptions ingest_o, topics_o, graph_o, sample_o, train_o, eval_o, ablate_o, sweep_o;
  auto* ingest = app.add_subcommand("ingest", "validate a corpus and print vocabulary and entity stats");
  ingest_o.add_to(ingest);
  ingest_o.add_corpus(ingest);

  auto* topics_cmd = app.add_subcommand("topics", "k sweep CSV: k,perplexity,coherence");
  std::string k_grid = "5..80:5";
  topics_o.add_to(topics_cmd, {"k"});
  topics_o.add_corpus(topics_cmd);
  topics_cmd->add_option("--k", k_grid, "k grid (list or a..b:step)");
  topics_cmd->add_option("--out", topics_o.out, "output CSV (default stdout)");

  auto* graph = app.add_subcommand("graph", "build the heterogeneous graph and print stats");
  graph_o.add_to(graph);
  graph_o.add_corpus(graph);
  graph->add_option("--out", graph_o.out, "output file (default stdout)");

  auto* sample = app.add_subcommand("sample", "dump fixed random walks as CSV");
  std::size_t roots = 0;
  sample_o.add_to(sample);
  sample_o.add_corpus(sample);
  sample->add_option("--roots", roots, "number of leading articles to sample (0 = all)");
  sample->add_option("--out", sample_o.out, "output CSV (default stdout)");

  auto* train = app.add_subcommand("train", "train and write metrics, ROC, checkpoint and manifest");
  train_o.add_to(train);
  train_o.add_corpus(train);
  train_o.add_rounds(train);
  train->add_option("--out", train_o.out, "output directory");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ckpt, roc_split = "test";
  eval_o.add_to(eval);
  eval_o.add_corpus(eval);
  eval->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  eval->add_option("--roc_split", roc_split, "split for the ROC CSV")->check(CLI::IsMember({"train", "val", "test", "all"}));
  eval->add_option("--out", eval_o.out, "output directory (default: metrics to stdout)");

  auto* ablate = app.add_subcommand("ablate", "compare the eight model variants");
  ablate_o.add_to(ablate);
  ablate_o.add_corpus(ablate);
  ablate_o.add_rounds(ablate);
  ablate->add_option("--out", ablate_o.out, "output CSV (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "grid over wl, r, layers, d, lambda_t and k");
  std::map<std::string, std::string> grids;
  std::vector<std::string> grid_keys;
  for (const auto& [key, integral] : sweep_keys()) grid_keys.push_back(key);
  sweep_o.add_to(sweep, grid_keys);
  sweep_o.add_corpus(sweep);
  sweep_o.add_rounds(sweep);
  for (const auto& key : grid_keys) sweep->add_option("--" + key, grids[key], "grid (list or a..b[:step])");
  sweep->add_option("--out", sweep_o.out, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand("synth")) cmd_synth(synth_o, out);
    else if (app.got_subcommand(ingest)) cmd_ingest(ingest_o, out);
    else if (app.got_subcommand(topics_cmd)) cmd_topics(topics_o, k_grid, out, err);
    else if (app.got_subcommand(graph)) cmd_graph(graph_o, out);
    else if (app.got_subcommand(sample)) cmd_sample(sample_o, roots, out);
    else if (app.got_subcommand(train)) cmd_train(train_o, out, err);
    else if (app.got_subcommand(eval)) cmd_eval(eval_o, ckpt, roc_split, out);
    else if (app.got_subcommand(ablate)) cmd_ablate(ablate_o, out, err);
    else if (app.got_subcommand(sweep)) cmd_sweep(sweep_o, grids, out, err);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"heterosgt"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_command(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace heterosgt::cli
