#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "semtag/error.hpp"

namespace semtag::cli {

namespace {

class Reader {
 public:
  Reader(std::string source, std::filesystem::path base) : source_(std::move(source)), base_(std::move(base)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    const auto m = at.Mark();
    std::string where = source_;
    if (m.line >= 0) where += ":" + std::to_string(m.line + 1);
    throw ConfigError(where + ": " + what);
  }

  void keys(const YAML::Node& map, const std::string& section, const std::set<std::string>& allowed) const {
    if (!map.IsMap()) fail(map, "'" + section + "' must be a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + section);
    }
  }

  template <typename T>
  T scalar(const YAML::Node& n, const std::string& name) const {
    if (!n.IsScalar()) fail(n, "'" + name + "' must be a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "bad value '" + n.Scalar() + "' for '" + name + "'");
    }
  }

  std::size_t count(const YAML::Node& n, const std::string& name) const {
    const auto v = scalar<long long>(n, name);
    if (v < 0) fail(n, "'" + name + "' must be non-negative");
    return static_cast<std::size_t>(v);
  }

  std::filesystem::path path(const YAML::Node& n, const std::string& name) const {
    std::filesystem::path p = scalar<std::string>(n, name);
    return p.is_absolute() ? p : base_ / p;
  }

  // Runs f, re-raising library validation errors at n's line.
  template <typename F>
  auto at(const YAML::Node& n, F&& f) const {
    try {
      return f();
    } catch (const ValidationError& e) {
      fail(n, e.what());
    }
  }

  std::vector<std::string> strings(const YAML::Node& n, const std::string& name) const {
    if (!n.IsSequence()) fail(n, "'" + name + "' must be a list");
    std::vector<std::string> out;
    for (const auto& item : n) out.push_back(scalar<std::string>(item, name));
    return out;
  }

 private:
  std::string source_;
  std::filesystem::path base_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base,
                              const std::string& source_name) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source_name + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  Reader r(source_name, base);
  ExperimentConfig c;
  if (root.IsNull()) throw ConfigError(source_name + ": empty config");
  r.keys(root, "config", {"seed", "data", "model", "training", "resources"});

  if (auto n = root["seed"]) c.training.seed = r.scalar<std::uint64_t>(n, "seed");

  if (auto d = root["data"]) {
    r.keys(d, "data", {"corpus", "split", "train", "dev", "test"});
    auto opt = [&](const char* k, std::optional<std::filesystem::path>& dst) {
      if (auto n = d[k]) dst = r.path(n, k);
    };
    opt("corpus", c.data.corpus);
    opt("split", c.data.split);
    opt("train", c.data.train);
    opt("dev", c.data.dev);
    opt("test", c.data.test);
    const bool by_split = c.data.corpus || c.data.split;
    const bool by_files = c.data.train || c.data.dev || c.data.test;
    if (by_split && by_files) r.fail(d, "data takes either corpus+split or train/dev/test, not both");
    if (by_split && !(c.data.corpus && c.data.split)) r.fail(d, "data needs both corpus and split");
    if (by_files && !(c.data.train && c.data.dev)) r.fail(d, "data needs at least train and dev");
  }

  if (auto m = root["model"]) {
    r.keys(m, "model",
           {"encoder", "hidden", "sources", "word_dim", "char_emb_dim", "char_encoder_out", "external_dim",
            "external_bos", "categorical_mode", "categorical_features", "categorical_dim",
            "freeze_word_embeddings"});
    auto& f = c.model.features;
    auto& e = c.model.encoder;
    if (auto n = m["encoder"]) e.kind = r.at(n, [&] { return encoders::parse_encoder_kind(r.scalar<std::string>(n, "encoder")); });
    if (auto n = m["hidden"]) e.hidden_per_direction = r.count(n, "hidden");
    if (auto n = m["sources"]) {
      f.sources.clear();
      for (const auto& s : r.strings(n, "sources")) f.sources.push_back(r.at(n, [&] { return features::parse_source(s); }));
    }
    if (auto n = m["word_dim"]) f.word_dim = r.count(n, "word_dim");
    if (auto n = m["char_emb_dim"]) f.char_emb_dim = r.count(n, "char_emb_dim");
    if (auto n = m["char_encoder_out"]) f.char_encoder_out = r.count(n, "char_encoder_out");
    if (auto n = m["external_dim"]) f.external_dim = r.count(n, "external_dim");
    if (auto n = m["external_bos"]) f.external_bos = r.scalar<bool>(n, "external_bos");
    if (auto n = m["categorical_mode"]) {
      f.categorical_mode = r.at(n, [&] { return features::parse_categorical_mode(r.scalar<std::string>(n, "categorical_mode")); });
    }
    if (auto n = m["categorical_features"]) {
      for (const auto& s : r.strings(n, "categorical_features")) {
        f.categorical_features.push_back(r.at(n, [&] { return features::parse_categorical_feature(s); }));
      }
    }
    if (auto n = m["categorical_dim"]) f.categorical_dim = r.count(n, "categorical_dim");
    if (auto n = m["freeze_word_embeddings"]) f.freeze_word_embeddings = r.scalar<bool>(n, "freeze_word_embeddings");
    f.normalize();
    r.at(m, [&] {
      c.model.validate();
      return 0;
    });
  }

  if (auto t = root["training"]) {
    r.keys(t, "training", {"batch_size", "learning_rate", "patience", "max_epochs", "monitor"});
    if (auto n = t["batch_size"]) c.training.batch_size = r.count(n, "batch_size");
    if (auto n = t["learning_rate"]) c.training.learning_rate = r.scalar<double>(n, "learning_rate");
    if (auto n = t["patience"]) c.training.patience = r.count(n, "patience");
    if (auto n = t["max_epochs"]) c.training.max_epochs = r.count(n, "max_epochs");
    if (auto n = t["monitor"]) c.training.monitor = r.at(n, [&] { return training::parse_monitor(r.scalar<std::string>(n, "monitor")); });
    r.at(t, [&] {
      c.training.validate();
      return 0;
    });
  }

  if (auto res = root["resources"]) {
    r.keys(res, "resources", {"token_vectors", "lemma_vectors", "external_vectors"});
    if (auto n = res["token_vectors"]) c.resources.token_vectors = r.path(n, "token_vectors");
    if (auto n = res["lemma_vectors"]) c.resources.lemma_vectors = r.path(n, "lemma_vectors");
    if (auto n = res["external_vectors"]) c.resources.external_vectors = r.path(n, "external_vectors");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path(), path.string());
}

nlohmann::json to_json(const ExperimentConfig& c) {
  auto opt = [](const std::optional<std::filesystem::path>& p) {
    return p ? nlohmann::json(p->string()) : nlohmann::json();
  };
  return {{"model", training::to_json(c.model)},
          {"training", training::to_json(c.training)},
          {"data",
           {{"corpus", opt(c.data.corpus)},
            {"split", opt(c.data.split)},
            {"train", opt(c.data.train)},
            {"dev", opt(c.data.dev)},
            {"test", opt(c.data.test)}}},
          {"resources",
           {{"token_vectors", opt(c.resources.token_vectors)},
            {"lemma_vectors", opt(c.resources.lemma_vectors)},
            {"external_vectors", opt(c.resources.external_vectors)}}}};
}

}  // namespace semtag::cli
