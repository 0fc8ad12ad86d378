#include "semtag/training/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace semtag::training {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

using nlohmann::json;

namespace {

constexpr char magic[8] = {'S', 'M', 'T', 'G', 'C', 'K', 'P', 'T'};

template <typename U>
void put(std::ostream& out, U v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename U>
U get(std::istream& in, const char* what) {
  U v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ValidationError(std::string("checkpoint truncated reading ") + what);
  }
  return v;
}

std::string get_bytes(std::istream& in, std::uint64_t n, const char* what) {
  constexpr std::uint64_t limit = 1ull << 32;
  if (n > limit) throw ValidationError(std::string("checkpoint: implausible length for ") + what);
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw ValidationError(std::string("checkpoint truncated reading ") + what);
  }
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Classifier<float>& model, const json& meta) {
  out.write(magic, sizeof magic);
  put<std::uint32_t>(out, checkpoint_version);
  const json header = {{"model", to_json(model.config())},
                       {"vocab", to_json(model.vocab())},
                       {"seed", model.seed()},
                       {"meta", meta}};
  const auto text = header.dump();
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto params = model.parameters();
  put<std::uint64_t>(out, params.size());
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint8_t>(out, 0);
    const auto& shape = p.tensor.shape();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) put<std::uint64_t>(out, d);
    const auto data = p.tensor.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
}

void save_checkpoint(const std::filesystem::path& path, const Classifier<float>& model, const json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  write_checkpoint(out, model, meta);
  out.flush();
  if (!out) throw Error("write failed for checkpoint " + path.string());
}

LoadedCheckpoint read_checkpoint(std::istream& in, const ModelResources& resources) {
  char m[8];
  if (!in.read(m, sizeof m) || std::memcmp(m, magic, sizeof m) != 0) {
    throw ValidationError("not a checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != checkpoint_version) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_text = get_bytes(in, get<std::uint64_t>(in, "header length"), "header");
  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("checkpoint header: ") + e.what());
  }
  if (!header.contains("model") || !header.contains("vocab") || !header.contains("seed")) {
    throw ValidationError("checkpoint header lacks model/vocab/seed");
  }
  ModelResources shell;
  shell.external = resources.external;
  Classifier<float> model(model_config_from_json(header["model"]), model_vocab_from_json(header["vocab"]),
                          header["seed"].get<std::uint64_t>(), shell);

  auto params = model.parameters();
  const auto count = get<std::uint64_t>(in, "tensor count");
  if (count != params.size()) {
    throw ValidationError("checkpoint holds " + std::to_string(count) + " tensors, model has " +
                          std::to_string(params.size()));
  }
  for (auto& p : params) {
    const auto name = get_bytes(in, get<std::uint32_t>(in, "name length"), "name");
    if (name != p.name) throw ValidationError("checkpoint tensor '" + name + "' where '" + p.name + "' expected");
    if (get<std::uint8_t>(in, "dtype") != 0) throw ValidationError("checkpoint tensor '" + name + "': unsupported dtype");
    const auto rank = get<std::uint32_t>(in, "rank");
    numerics::Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(get<std::uint64_t>(in, "dims"));
    if (shape != p.tensor.shape()) {
      throw ValidationError("checkpoint tensor '" + name + "' has shape " + numerics::shape_string(shape) +
                            ", model expects " + numerics::shape_string(p.tensor.shape()));
    }
    auto data = p.tensor.mutable_data();
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)))) {
      throw ValidationError("checkpoint truncated in tensor '" + name + "'");
    }
  }
  return {std::move(model), header.value("meta", json::object())};
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ModelResources& resources) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  return read_checkpoint(in, resources);
}

}  // namespace semtag::training
