#include "semtag/corpus/split.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "semtag/error.hpp"
#include "semtag/numerics/rng.hpp"

namespace semtag::corpus {

std::string_view to_string(SplitName name) { return name == SplitName::full ? "full" : "partial"; }

SplitName parse_split_name(std::string_view s) {
  if (s == "full") return SplitName::full;
  if (s == "partial") return SplitName::partial;
  throw ValidationError("unknown split name '" + std::string(s) + "'");
}

SplitTargets full_split_targets() { return {{2013, 252, 251}, {19940, 2493, 2491}}; }

SplitTargets partial_split_targets() { return {{420, 252, 251}, {3970, 2493, 2491}}; }

SplitTargets scale(const SplitTargets& t, double ratio) {
  if (!(ratio > 0)) throw ValidationError("split ratio must be positive");
  auto f = [ratio](std::size_t n) {
    // Nudge so exact products such as 2013 × 1.0 never round down.
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
  };
  auto g = [&](const LabelCounts& c) { return LabelCounts{f(c.train), f(c.dev), f(c.test)}; };
  return {g(t.positive), g(t.negative)};
}

namespace {

struct Drawn {
  std::vector<std::string> train, dev, test;
};

Drawn draw(std::vector<std::string> pool, const LabelCounts& want, const char* label,
           numerics::Rng& rng) {
  const std::size_t need = want.train + want.dev + want.test;
  if (pool.size() < need) {
    throw CountError(std::string("split: need ") + std::to_string(need) + " " + label +
                     " records, have " + std::to_string(pool.size()) + " (deficit " +
                     std::to_string(need - pool.size()) + ")");
  }
  rng.shuffle(pool);
  Drawn d;
  auto it = pool.begin();
  d.test.assign(it, it + want.test);
  it += want.test;
  d.dev.assign(it, it + want.dev);
  it += want.dev;
  d.train.assign(it, it + want.train);
  return d;
}

}  // namespace

CorpusSplit build_splits(const std::vector<SentenceRecord>& records, SplitName name,
                         std::uint64_t seed, double ratio) {
  std::vector<std::string> positives, negatives;
  for (const auto& r : records) {
    (r.label == Label::positive ? positives : negatives).push_back(r.id);
  }
  const auto full = scale(full_split_targets(), ratio);
  numerics::Rng rng(numerics::mix_seed(seed, 0));
  auto pos = draw(std::move(positives), full.positive, "positive", rng);
  auto neg = draw(std::move(negatives), full.negative, "negative", rng);

  CorpusSplit split;
  split.name = name;
  split.test = pos.test;
  split.test.insert(split.test.end(), neg.test.begin(), neg.test.end());
  split.dev = pos.dev;
  split.dev.insert(split.dev.end(), neg.dev.begin(), neg.dev.end());
  if (name == SplitName::full) {
    split.train = pos.train;
    split.train.insert(split.train.end(), neg.train.begin(), neg.train.end());
    return split;
  }
  const auto partial = scale(partial_split_targets(), ratio);
  numerics::Rng sub(numerics::mix_seed(seed, 1));
  auto take = [&](std::vector<std::string> ids, std::size_t n) {
    sub.shuffle(ids);
    ids.resize(std::min(n, ids.size()));
    return ids;
  };
  split.train = take(pos.train, partial.positive.train);
  auto neg_train = take(neg.train, partial.negative.train);
  split.train.insert(split.train.end(), neg_train.begin(), neg_train.end());
  return split;
}

nlohmann::json to_json(const CorpusSplit& s) {
  return {{"name", to_string(s.name)}, {"train", s.train}, {"dev", s.dev}, {"test", s.test}};
}

CorpusSplit split_from_json(const nlohmann::json& j) {
  try {
    CorpusSplit s;
    s.name = parse_split_name(j.at("name").get<std::string>());
    s.train = j.at("train").get<std::vector<std::string>>();
    s.dev = j.at("dev").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed split: ") + e.what());
  }
}

void save_split(const std::filesystem::path& path, const CorpusSplit& split) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write split file " + path.string());
  out << to_json(split).dump(2) << '\n';
}

CorpusSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open split file " + path.string());
  try {
    return split_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("split file " + path.string() + ": " + e.what());
  }
}

SplitRecords materialize(const CorpusSplit& split, const std::vector<SentenceRecord>& records) {
  std::unordered_map<std::string, const SentenceRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r);
  auto resolve = [&](const std::vector<std::string>& ids) {
    std::vector<SentenceRecord> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw LookupError("split references unknown id '" + id + "'");
      out.push_back(*it->second);
    }
    return out;
  };
  return {resolve(split.train), resolve(split.dev), resolve(split.test)};
}

}  // namespace semtag::corpus
