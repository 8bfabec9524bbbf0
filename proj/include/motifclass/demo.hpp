#pragma once

// The bundled demo dataset: a planted 5-category corpus plus a ready-to-run
// pipeline config.

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "motifclass/pipeline.hpp"
#include "motifclass/synthetic.hpp"

namespace motifclass {

inline nlohmann::json demo_config_json(std::uint64_t seed) {
  return {{"corpus", "corpus.jsonl"},
          {"categories", "categories.json"},
          {"patterns", "patterns.txt"},
          {"workdir", "work"},
          {"metadata_types", {"Author", "Venue", "Year"}},
          {"min_freq", 5},
          {"seed", seed},
          {"embedding", {{"dim", 100}, {"epochs", 5}}},
          {"selection", {{"size", 50}, {"eta", 2.0}}},
          {"pseudo", {{"retrieved", 50}, {"generated", 50}}},
          {"classifier", {{"epochs", 40}, {"batch_size", 32}}}};
}

// Writes corpus.jsonl, categories.json, patterns.txt and config.json into
// `dir` and returns the config path.
inline std::filesystem::path write_demo(const std::filesystem::path& dir, std::uint64_t seed,
                                        const synthetic::AcademicOptions& options = {}) {
  synthetic::write_bundle(synthetic::academic(seed, options), dir);
  const auto path = dir / "config.json";
  std::ofstream out(path);
  out << demo_config_json(seed).dump(2) << '\n';
  return path;
}

}  // namespace motifclass
