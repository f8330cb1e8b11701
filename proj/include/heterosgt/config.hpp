#pragma once

// Plain-text `key = value` configuration with `#` comments, mapped onto
// TrainConfig. Numbers are written in shortest round-trip form.

#include "trainer.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace heterosgt::config {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw ConfigError("cannot format number");
  return std::string(buf, end);
}

inline KeyValues parse_text(std::string_view text, const std::string& source = "config") {
  KeyValues out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = corpus::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = corpus::trim(body.substr(0, eq));
    const auto value = corpus::trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::string(key), std::string(value));
  }
  return out;
}

inline KeyValues load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path.string());
}

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("invalid value '" + v + "' for key '" + key + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("invalid boolean '" + v + "' for key '" + key + "'");
}

inline std::array<double, 3> parse_split(const std::string& key, const std::string& v) {
  std::array<double, 3> out{};
  std::size_t i = 0, start = 0;
  for (std::size_t pos = 0; pos <= v.size(); ++pos) {
    if (pos == v.size() || v[pos] == ',') {
      if (i == 3) throw ConfigError("key '" + key + "' takes three comma-separated ratios");
      out[i++] = parse_number<double>(key, std::string(corpus::trim(std::string_view(v).substr(start, pos - start))));
      start = pos + 1;
    }
  }
  if (i != 3) throw ConfigError("key '" + key + "' takes three comma-separated ratios");
  return out;
}

}  // namespace detail

/// Every TrainConfig key with its current value, in a fixed order.
inline KeyValues to_key_values(const trainer::TrainConfig& c) {
  auto u = [](std::size_t x) { return std::to_string(x); };
  auto i = [](long long x) { return std::to_string(x); };
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  return {
      {"wl", u(c.wl)},
      {"r", format_double(c.r)},
      {"lambda_t", u(c.lambda_t)},
      {"k", i(c.k)},
      {"edge_pairs", c.edge_pairs == hgraph::PairBaseline::Sharing ? "sharing" : "all"},
      {"edge_topic", c.edge_topic == hgraph::TopicRule::Top1 ? "top1" : "overlap"},
      {"layers", u(c.layers)},
      {"heads", i(c.heads)},
      {"d", i(c.d)},
      {"d_w", i(c.d_w)},
      {"d_ff", i(c.ffn_size())},
      {"d_hid", i(c.mlp_hidden())},
      {"readout", sgt::readout_name(c.readout)},
      {"use_rpe", b(c.use_rpe)},
      {"mlp_relu", b(c.mlp_relu)},
      {"ablation", trainer::ablation_name(c.ablation)},
      {"lr", format_double(c.lr)},
      {"weight_decay", format_double(c.weight_decay)},
      {"epochs", u(c.epochs)},
      {"pretrain_epochs", u(c.pretrain_epochs)},
      {"pretrain_lr", format_double(c.pretrain_lr)},
      {"batch_size", u(c.batch_size)},
      {"patience", u(c.patience)},
      {"resample_walks", b(c.resample_walks)},
      {"joint", b(c.joint)},
      {"split", format_double(c.split[0]) + "," + format_double(c.split[1]) + "," + format_double(c.split[2])},
      {"seed", std::to_string(c.seed)},
      {"min_freq", u(c.min_freq)},
      {"max_sentences", u(c.max_sentences)},
      {"max_tokens", u(c.max_tokens)},
      {"lda_alpha", format_double(c.alpha())},
      {"lda_beta", format_double(c.lda_beta)},
      {"lda_iterations", i(c.lda_iterations)},
  };
}

inline bool is_train_key(std::string_view key) {
  for (const auto& [k, v] : to_key_values(trainer::TrainConfig{}))
    if (k == key) return true;
  return false;
}

/// Sets one field; unknown keys and malformed values are errors.
inline void apply(trainer::TrainConfig& c, const std::string& key, const std::string& v) {
  using detail::parse_bool;
  using detail::parse_number;
  auto size = [&] { return parse_number<std::size_t>(key, v); };
  auto index = [&] { return parse_number<ad::Index>(key, v); };
  auto real = [&] { return parse_number<double>(key, v); };
  if (key == "wl") c.wl = size();
  else if (key == "r") c.r = real();
  else if (key == "lambda_t") c.lambda_t = size();
  else if (key == "k") c.k = parse_number<int>(key, v);
  else if (key == "edge_pairs") {
    if (v == "sharing") c.edge_pairs = hgraph::PairBaseline::Sharing;
    else if (v == "all") c.edge_pairs = hgraph::PairBaseline::All;
    else throw ConfigError("edge_pairs must be 'sharing' or 'all'");
  } else if (key == "edge_topic") {
    if (v == "top1") c.edge_topic = hgraph::TopicRule::Top1;
    else if (v == "overlap") c.edge_topic = hgraph::TopicRule::Overlap;
    else throw ConfigError("edge_topic must be 'top1' or 'overlap'");
  } else if (key == "layers") c.layers = size();
  else if (key == "heads") c.heads = index();
  else if (key == "d") c.d = index();
  else if (key == "d_w") c.d_w = index();
  else if (key == "d_ff") c.d_ff = index();
  else if (key == "d_hid") c.d_hid = index();
  else if (key == "readout") c.readout = sgt::parse_readout(v);
  else if (key == "use_rpe") c.use_rpe = parse_bool(key, v);
  else if (key == "mlp_relu") c.mlp_relu = parse_bool(key, v);
  else if (key == "ablation") c.ablation = trainer::parse_ablation(v);
  else if (key == "lr") c.lr = real();
  else if (key == "weight_decay") c.weight_decay = real();
  else if (key == "epochs") c.epochs = size();
  else if (key == "pretrain_epochs") c.pretrain_epochs = size();
  else if (key == "pretrain_lr") c.pretrain_lr = real();
  else if (key == "batch_size") c.batch_size = size();
  else if (key == "patience") c.patience = size();
  else if (key == "resample_walks") c.resample_walks = parse_bool(key, v);
  else if (key == "joint") c.joint = parse_bool(key, v);
  else if (key == "split") c.split = detail::parse_split(key, v);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "min_freq") c.min_freq = size();
  else if (key == "max_sentences") c.max_sentences = size();
  else if (key == "max_tokens") c.max_tokens = size();
  else if (key == "lda_alpha") c.lda_alpha = real();
  else if (key == "lda_beta") c.lda_beta = real();
  else if (key == "lda_iterations") c.lda_iterations = parse_number<int>(key, v);
  else throw ConfigError("unknown config key '" + key + "'");
}

inline void apply(trainer::TrainConfig& c, const KeyValues& kv) {
  for (const auto& [k, v] : kv) apply(c, k, v);
}

inline std::string format(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

inline std::string format(const trainer::TrainConfig& c) { return format(to_key_values(c)); }

}  // namespace heterosgt::config
