#pragma once

// Token sequence fed to the classifier: metadata instances, then text.

#include <string>
#include <vector>

#include "motifclass/corpus.hpp"
#include "motifclass/motif_index.hpp"

namespace motifclass {

inline constexpr std::size_t kDefaultMaxSequence = 200;

// Metadata tokens in schema declaration order (values in document order),
// followed by Term tokens; truncated to max_len.
inline std::vector<std::string> build_input_sequence(const Document& d, const CorpusSchema& schema,
                                                     std::size_t max_len = kDefaultMaxSequence) {
  std::vector<std::string> out;
  for (const auto& type : schema.metadata_types) {
    auto it = d.metadata.find(type);
    if (it == d.metadata.end()) continue;
    for (const auto& v : it->second) {
      if (out.size() == max_len) return out;
      out.push_back(binding_token(type, v));
    }
  }
  for (const auto& t : d.terms) {
    if (out.size() == max_len) return out;
    out.push_back(term_instance_id(t));
  }
  return out;
}

}  // namespace motifclass
