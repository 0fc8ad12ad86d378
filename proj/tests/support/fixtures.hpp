#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "semtag/baselines/baselines.hpp"
#include "semtag/corpus/record.hpp"
#include "semtag/features/features.hpp"
#include "semtag/training/model.hpp"

namespace semtag::fixtures {

inline const std::string planted_lemma = "fello";

struct PlantedCorpus {
  std::vector<corpus::SentenceRecord> train, dev, test;
};

// Sentences of 4–8 filler lemmas; positives carry the planted lemma at a
// random position. Labels alternate so every split is balanced.
PlantedCorpus planted_corpus(std::uint64_t seed, std::size_t n_train = 200, std::size_t n_dev = 50,
                             std::size_t n_test = 50);

// Per-lemma deterministic vectors in ±0.5; with `bos` a leading row holding
// the mean of the token rows.
std::shared_ptr<features::ExternalVectors> synthetic_external(
    const std::vector<corpus::SentenceRecord>& records, std::size_t dim, bool bos,
    std::uint64_t seed);

// Small configs per encoder kind for gradient checks and the planted-signal
// runs. Pooling kinds read external vectors of width external_dim.
training::ModelConfig small_config(encoders::EncoderKind kind, std::size_t hidden,
                                   std::size_t word_dim, std::size_t external_dim);

struct BaselineFixture {
  std::vector<baselines::InventoryRow> inventory;
  std::vector<corpus::SentenceRecord> records;
};

// Inventory of 40 lemmas with seeded flags, and sentences mixing inventory
// lemmas with fillers; labels are only loosely tied to the inventory.
BaselineFixture baseline_fixture(std::uint64_t seed, std::size_t n_records = 200);

// Text carries no signal; the label follows the author (Martialis positive,
// others negative) with 10% flips. Models that see the author overfit to it.
PlantedCorpus metadata_corpus(std::uint64_t seed, std::size_t n_train = 120, std::size_t n_test = 40);

const std::vector<corpus::AuthorMeta>& fixture_authors();

std::filesystem::path scratch_dir(const std::string& name);

struct GradientReport {
  double f64 = 0;  // pure double central difference
  double f32 = 0;  // float analytic vs double central difference
};

struct PrimitiveReport {
  std::string name;
  double f64 = 0;
  double f32 = 0;
};

// Every autodiff primitive on random 3×4-ish inputs, both precisions.
std::vector<PrimitiveReport> primitive_gradient_checks(std::uint64_t seed);

// Full classifier (features → encoder → head → loss over two sentences)
// with small dims; every trainable parameter is probed.
GradientReport model_gradient_check(encoders::EncoderKind kind, std::uint64_t seed);

}  // namespace semtag::fixtures
