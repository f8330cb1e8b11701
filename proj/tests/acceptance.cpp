// Acceptance gate. `acceptance` runs every criterion, `acceptance N` only
// criterion N. One PASS/FAIL line per criterion; nonzero exit on any FAIL.

#include <heterosgt/cli.hpp>
#include <heterosgt/gradcheck.hpp>
#include <heterosgt/hgraph.hpp>
#include <heterosgt/report.hpp>
#include <heterosgt/sampler.hpp>
#include <heterosgt/sgt.hpp>
#include <heterosgt/synth.hpp>
#include <heterosgt/textenc.hpp>
#include <heterosgt/topics.hpp>
#include <heterosgt/trainer.hpp>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "graph_oracle.hpp"
#include "op_cases.hpp"
#include "test_util.hpp"

namespace {

using namespace heterosgt;
using ad::Index;
using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Var;
using heterosgt::testing::probe;
using heterosgt::testing::random_matrix;

namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double x, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  return buf;
}

std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness

Outcome gradients() {
  Timer timer;
  double worst = 0.0;
  std::string worst_name;
  int checks = 0, failures = 0;
  auto record = [&](const std::string& name, const ad::GradCheckResult& r) {
    ++checks;
    if (!r.passed(1e-4)) ++failures;
    if (r.max_rel_error > worst) worst = r.max_rel_error, worst_name = name;
  };

  for (const auto& c : heterosgt::testing::op_cases()) {
    for (int trial = 0; trial < 10; ++trial) {
      Rng rng(derive_seed(42, {hash_tag(c.name), static_cast<std::uint64_t>(trial)}));
      Parameter x("x", c.init(rng, c.rows, c.cols));
      record(c.name, ad::finite_diff_check([&](Tape& t) { return probe(c.op(t, t.param(x)), 99 + trial); }, x));
    }
  }
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(derive_seed(43, {static_cast<std::uint64_t>(trial)}));
    Parameter table("emb", random_matrix(6, 3, rng));
    const std::vector<int> ids{4, 1, 4, 0};
    record("embedding", ad::finite_diff_check([&](Tape& t) { return probe(ad::tanh(ad::embedding(t, table, ids)), 13); },
                                              table));
    const Matrix x = random_matrix(3, 5, rng);
    Parameter gain("g", random_matrix(1, 5, rng)), bias("b", random_matrix(1, 5, rng));
    auto ln = [&](Tape& t) { return probe(ad::layer_norm(t.constant(x), t.param(gain), t.param(bias)), 7); };
    record("layer_norm.gain", ad::finite_diff_check(ln, gain));
    record("layer_norm.bias", ad::finite_diff_check(ln, bias));
  }

  corpus::Document doc;
  doc.sentences = {{1, 4, 2}, {3, 3}, {5}};
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    auto p = textenc::make_text_encoder(6, 3, 2, trial);
    auto program = [&](Tape& t) { return probe(textenc::encode(t, doc, p).vector, trial); };
    for (Parameter* q : p.parameters()) record("encode_article:" + q->name, ad::finite_diff_check(program, *q));
  }

  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    auto p = sgt::make_sgt(8, 2, 2, 16, trial);
    Rng rng(derive_seed(trial, "sequence"));
    Parameter s("S", random_matrix(4, 8, rng));
    s.value.row(3).setZero();
    const std::vector<unsigned char> mask{1, 1, 1, 0};
    auto program = [&](Tape& t) {
      Var h = sgt::transformer_forward(t, t.param(s), mask, p, true);
      return probe(sgt::readout(h, mask, sgt::Readout::First), trial);
    };
    record("transformer:S", ad::finite_diff_check(program, s));
    for (Parameter* q : p.parameters()) record("transformer:" + q->name, ad::finite_diff_check(program, *q));
  }

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto mlp = trainer::make_mlp("m", 5, 4, seed);
    Rng rng(seed + 100);
    const Matrix h = random_matrix(6, 5, rng);
    std::vector<int> y;
    for (int i = 0; i < 6; ++i) y.push_back(static_cast<int>(uniform_index(rng, 2)));
    for (Parameter* q : mlp.parameters())
      record("classify+cross_entropy:" + q->name,
             ad::finite_diff_check(
                 [&](Tape& t) { return trainer::cross_entropy(t, trainer::classify(t, t.constant(h), mlp), y); }, *q));
  }

  const double secs = timer.seconds();
  return {failures == 0 && secs < 60.0, std::to_string(checks) + " checks, " + std::to_string(failures) +
                                            " above 1e-4, worst " + sci(worst) + " (" + worst_name + "), " +
                                            fmt(secs, 1) + " s"};
}

// ---------------------------------------------------------------------------
// 2. RWR transition law

Outcome rwr_law() {
  Timer timer;
  Rng cfg(2718);
  double worst_dev = 0.0, worst_p = 1.0;
  int bad = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = heterosgt::testing::random_graph_input(cfg, 12);
    const auto g = hgraph::build_graph(in.entities, in.n_entities, in.dists, in.lambda_t);
    const auto root = hgraph::news(uniform_index(cfg, g.count(hgraph::NodeKind::News)));
    const auto cur = g.node(uniform_index(cfg, g.node_count()));
    const double r = uniform01(cfg);
    std::map<hgraph::NodeId, double> law;
    const auto nb = g.neighbors(cur);
    law[root] += nb.empty() ? 1.0 : r;
    for (const auto& v : nb) law[v] += (1.0 - r) / static_cast<double>(nb.size());
    std::map<hgraph::NodeId, double> seen;
    Rng rng(derive_seed(31, {static_cast<std::uint64_t>(trial)}));
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) seen[sampler::rwr_step(g, cur, root, r, rng)] += 1.0;
    bool ok = true;
    for (const auto& [v, c] : seen)
      if (!law.count(v)) ok = false;
    double chi2 = 0.0;
    for (const auto& [v, p] : law) {
      const double freq = seen[v] / draws;
      worst_dev = std::max(worst_dev, std::abs(freq - p));
      if (std::abs(freq - p) > 0.01) ok = false;
      chi2 += std::pow(seen[v] - p * draws, 2) / (p * draws);
    }
    if (law.size() > 1) {
      const boost::math::chi_squared dist(static_cast<double>(law.size() - 1));
      const double pvalue = boost::math::cdf(boost::math::complement(dist, chi2));
      worst_p = std::min(worst_p, pvalue);
      if (!(pvalue > 0.01)) ok = false;
    }
    bad += !ok;
  }
  const double secs = timer.seconds();
  return {bad == 0 && secs < 30.0, "20 configurations, " + std::to_string(bad) + " failing, max |freq - law| " +
                                       fmt(worst_dev, 5) + ", min chi2 p " + fmt(worst_p, 3) + ", " + fmt(secs, 1) +
                                       " s"};
}

// ---------------------------------------------------------------------------
// 3. Graph construction oracle

Outcome graph_oracle() {
  Rng rng(1618);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = heterosgt::testing::random_graph_input(rng, 30);
    const auto g = hgraph::build_graph(in.entities, in.n_entities, in.dists, in.lambda_t);
    if (g.edge_set() != heterosgt::testing::oracle_edges(in, hgraph::EdgeRules{})) ++mismatches;
  }
  return {mismatches == 0, "100 random corpora, " + std::to_string(mismatches) + " edge-set mismatches"};
}

// ---------------------------------------------------------------------------
// 4. Readout contract

Outcome readout_contract() {
  int row0_bad = 0, perm_bad = 0;
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    auto p = sgt::make_sgt(8, 2, 2, 16, trial);
    Rng rng(derive_seed(trial, "readout"));
    const Index n = 6;
    Matrix s = random_matrix(n, 8, rng);
    std::vector<unsigned char> mask(static_cast<std::size_t>(n), 1);
    mask[static_cast<std::size_t>(n - 1)] = uniform01(rng) < 0.5 ? 0 : 1;
    if (!mask.back()) s.row(n - 1).setZero();
    Tape tape(false);
    Var h = sgt::transformer_forward(tape, tape.constant(s), mask, p, trial % 2 == 0);
    if (!(sgt::readout(h, mask, sgt::Readout::First).value() == h.value().row(0))) ++row0_bad;

    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) perm[static_cast<std::size_t>(j)] = j;
    std::vector<Index> tail(perm.begin() + 1, perm.end());
    shuffle_in_place(tail, rng);
    std::copy(tail.begin(), tail.end(), perm.begin() + 1);
    Matrix sp(n, 8);
    std::vector<unsigned char> mp(mask.size());
    for (Index j = 0; j < n; ++j) {
      sp.row(j) = s.row(perm[static_cast<std::size_t>(j)]);
      mp[static_cast<std::size_t>(j)] = mask[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
    }
    const Matrix a = sgt::readout(sgt::transformer_forward(tape, tape.constant(s), mask, p, false), mask,
                                  sgt::Readout::First)
                         .value();
    const Matrix b = sgt::readout(sgt::transformer_forward(tape, tape.constant(sp), mp, p, false), mp,
                                  sgt::Readout::First)
                         .value();
    const double diff = (a - b).cwiseAbs().maxCoeff();
    worst = std::max(worst, diff);
    if (diff > 1e-12) ++perm_bad;
  }
  return {row0_bad == 0 && perm_bad == 0, "100 trials, row 0 bitwise mismatches " + std::to_string(row0_bad) +
                                              ", permutation max diff " + sci(worst) + ", " +
                                              std::to_string(perm_bad) + " above 1e-12"};
}

// ---------------------------------------------------------------------------
// 5. RPE identities

Outcome rpe_identities() {
  const std::size_t wl = 11, d = 600;
  const Matrix rpe = sgt::relative_positional_encoding(wl + 1, d);
  bool row0 = true;
  for (Index i = 0; i < rpe.cols(); ++i)
    if (rpe(0, i) != (i % 2 == 0 ? 0.0 : 1.0)) row0 = false;
  const bool bounded = rpe.cwiseAbs().maxCoeff() <= 1.0;
  bool distinct = true;
  for (Index a = 0; a < rpe.rows(); ++a)
    for (Index b = a + 1; b < rpe.rows(); ++b)
      if (rpe.row(a) == rpe.row(b)) distinct = false;
  return {row0 && bounded && distinct, std::string("row 0 alternating ") + (row0 ? "yes" : "no") + ", entries in [-1,1] " +
                                           (bounded ? "yes" : "no") + ", rows 0.." + std::to_string(wl) + " distinct " +
                                           (distinct ? "yes" : "no") + " at d = 600"};
}

// ---------------------------------------------------------------------------
// 6. LDA recovery

double purity(const topics::TopicModel& m, const std::vector<std::size_t>& truth) {
  std::map<std::pair<int, std::size_t>, int> table;
  for (std::size_t d = 0; d < m.docs.size(); ++d) {
    const auto th = m.theta(d);
    ++table[{static_cast<int>(std::max_element(th.begin(), th.end()) - th.begin()), truth[d]}];
  }
  std::map<int, int> best;
  for (const auto& [key, n] : table) best[key.first] = std::max(best[key.first], n);
  int hit = 0;
  for (const auto& [t, n] : best) hit += n;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i] / n, my += ry[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

Outcome lda_recovery() {
  Timer timer;
  int pure = 0;
  double worst_rho = -1.0;
  std::string purities;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    synth::PlantedTopicSpec spec;
    spec.seed = seed;
    const auto train = synth::planted_topic_corpus(spec);
    spec.seed = seed + 1000;
    spec.docs = 50;
    const auto heldout = synth::planted_topic_corpus(spec);
    const auto m2 = topics::fit_lda(train.docs, train.vocab_size, 2, 25.0, 0.01, 200, seed);
    const double p = purity(m2, train.cluster);
    pure += p >= 0.9;
    purities += (purities.empty() ? "" : " ") + fmt(p, 3);
    std::vector<double> ks, ppl;
    for (int k : {2, 4, 8, 16}) {
      const auto m = topics::fit_lda(train.docs, train.vocab_size, k, 50.0 / k, 0.01, 200, seed);
      ks.push_back(k);
      ppl.push_back(topics::perplexity(m, heldout.docs));
    }
    worst_rho = std::max(worst_rho, spearman(ks, ppl));
  }
  const double secs = timer.seconds();
  return {pure >= 4 && worst_rho <= -0.9 && secs < 120.0,
          "k=2 purity [" + purities + "] (" + std::to_string(pure) + "/5 >= 0.9), worst Spearman(k, held-out perplexity) " +
              fmt(worst_rho, 3) + ", " + fmt(secs, 1) + " s"};
}

// ---------------------------------------------------------------------------
// 7 and 8. End-to-end detection and ablation direction

trainer::TrainConfig benchmark_config(std::uint64_t seed) {
  trainer::TrainConfig c;
  config::apply(c, config::load_file(HETEROSGT_SOURCE_DIR "/configs/benchmark.conf"));
  c.seed = seed;
  return c;
}

std::vector<corpus::RawArticle> benchmark_corpus(std::uint64_t seed) {
  return synth::generate_synthetic(synth::benchmark_spec(seed)).articles;
}

struct VariantRuns {
  std::vector<double> acc, auc, secs;
  double mean(const std::vector<double>& v) const { return report::mean_sd(v).mean; }
};

VariantRuns run_variant(const std::function<void(trainer::TrainConfig&)>& modify) {
  VariantRuns out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto cfg = benchmark_config(seed);
    modify(cfg);
    Timer timer;
    const auto res = trainer::train(benchmark_corpus(seed), cfg);
    out.secs.push_back(timer.seconds());
    const auto& m = res.split_metrics("test");
    out.acc.push_back(m.accuracy);
    out.auc.push_back(m.auc.value_or(std::nan("")));
  }
  return out;
}

const VariantRuns& full_model() {
  static const VariantRuns runs = run_variant([](trainer::TrainConfig&) {});
  return runs;
}

Outcome end_to_end() {
  const auto& r = full_model();
  const double acc = r.mean(r.acc), auc = r.mean(r.auc);
  const double slowest = *std::max_element(r.secs.begin(), r.secs.end());
  std::string accs;
  for (double a : r.acc) accs += (accs.empty() ? "" : " ") + fmt(a, 2);
  return {acc >= 0.85 && auc >= 0.90 && slowest < 300.0,
          "mean test acc " + fmt(acc) + " (>= 0.85) [" + accs + "], mean AUC " + fmt(auc) +
              " (>= 0.90), slowest run " + fmt(slowest, 1) + " s"};
}

Outcome ablation_direction() {
  const double full = full_model().mean(full_model().acc);
  const auto no_hg = run_variant([](trainer::TrainConfig& c) { c.ablation = trainer::Ablation::NoHg; });
  bool ok = full >= no_hg.mean(no_hg.acc) + 0.05;
  std::string detail = "full " + fmt(full, 3) + ", no_hg " + fmt(no_hg.mean(no_hg.acc), 3) + " (needs +0.05)";
  const std::vector<std::pair<std::string, std::function<void(trainer::TrainConfig&)>>> band{
      {"no_rpe", [](trainer::TrainConfig& c) { c.use_rpe = false; }},
      {"readout_mean", [](trainer::TrainConfig& c) { c.readout = sgt::Readout::Mean; }},
      {"readout_max", [](trainer::TrainConfig& c) { c.readout = sgt::Readout::Max; }},
      {"no_et", [](trainer::TrainConfig& c) { c.ablation = trainer::Ablation::NoEt; }},
  };
  for (const auto& [name, modify] : band) {
    const auto runs = run_variant(modify);
    const double acc = runs.mean(runs.acc);
    ok = ok && full >= acc - 0.02;
    detail += ", " + name + " " + fmt(acc, 3);
  }
  return {ok, detail + " (each needs <= full + 0.02)"};
}

// ---------------------------------------------------------------------------
// 9 and 10. Manifest determinism and default conformance

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("heterosgt_acceptance_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

int cli(const std::vector<std::string>& args, std::string* error = nullptr) {
  std::ostringstream out, err;
  const int rc = heterosgt::cli::run_command(args, out, err);
  if (error) *error = err.str();
  return rc;
}

Outcome determinism() {
  Scratch s("determinism");
  std::string err;
  bool ok = cli({"synth", "--preset", "benchmark", "--seed", "3", "--out", s / "corpus.tsv"}, &err) == 0;
  ok = ok && cli({"train", "--config", HETEROSGT_SOURCE_DIR "/configs/benchmark.conf", "--resample_walks", "false",
                  "--seed", "3", "--corpus", s / "corpus.tsv", "--out", s / "first"},
                 &err) == 0;
  ok = ok && cli({"train", "--config", s / "first/manifest.txt", "--out", s / "second"}, &err) == 0;
  const bool same =
      ok && report::read_file(s / "first/metrics.csv") == report::read_file(s / "second/metrics.csv");
  const auto split = trainer::split_dataset(3048, {0.8, 0.1, 0.1}, 1);
  const bool sizes = split.train.size() == 2438 && split.val.size() == 304 && split.test.size() == 306;
  return {ok && same && sizes, std::string("manifest re-run metrics CSV ") + (same ? "bitwise identical" : "differs") +
                                   (ok ? "" : " (run failed: " + err + ")") + "; n=3048 split " +
                                   std::to_string(split.train.size()) + "/" + std::to_string(split.val.size()) + "/" +
                                   std::to_string(split.test.size())};
}

Outcome default_conformance() {
  Scratch s("defaults");
  std::string err;
  bool ok = cli({"synth", "--articles_per_cluster", "5", "--out", s / "corpus.tsv"}, &err) == 0;
  ok = ok && cli({"train", "--corpus", s / "corpus.tsv", "--epochs", "0", "--pretrain_epochs", "0", "--out", s / "run"},
                 &err) == 0;
  if (!ok) return {false, "default run failed: " + err};
  std::map<std::string, std::string> manifest;
  for (const auto& [k, v] : config::load_file(s / "run/manifest.txt")) manifest[k] = v;
  const std::vector<std::pair<std::string, std::string>> expected{
      {"wl", "11"}, {"r", "0.1"}, {"lambda_t", "3"}, {"layers", "5"}, {"d", "600"}, {"lr", "5e-05"},
      {"weight_decay", "0.005"}};
  std::string detail;
  for (const auto& [k, v] : expected) {
    const bool match = manifest.count(k) && std::stod(manifest[k]) == std::stod(v);
    ok = ok && match;
    detail += (detail.empty() ? "" : ", ") + k + "=" + (manifest.count(k) ? manifest[k] : "missing");
  }
  return {ok, "manifest " + detail};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "gradient correctness", gradients},     {2, "RWR transition law", rwr_law},
      {3, "graph construction oracle", graph_oracle}, {4, "readout contract", readout_contract},
      {5, "RPE identities", rpe_identities},      {6, "LDA recovery", lda_recovery},
      {7, "end-to-end detection", end_to_end},    {8, "ablation direction", ablation_direction},
      {9, "determinism and splits", determinism}, {10, "default conformance", default_conformance},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %d (%s): %s - %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
