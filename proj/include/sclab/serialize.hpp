#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sclab/datagen.hpp"
#include "sclab/netmodel.hpp"

namespace sclab {

// Shortest round-trip decimal form of a double (std::to_chars). All
// artifact files format numbers through this so reruns are byte-identical.
std::string fmt_double(double value);

double parse_double(const std::string& text, const std::string& context);
long parse_long(const std::string& text, const std::string& context);

// Parameter checkpoint: versioned magic header, shapes, seed, view tag and
// row-major entries in a flat text layout.
struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::uint64_t seed);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Corpus directory layout: one CSV per split (header line naming columns,
// one row per example, deterministic ordering) plus manifest.txt echoing
// the GenSpec and version tag.
void write_corpus(const CorpusBundle& bundle, const std::filesystem::path& dir);
CorpusBundle read_corpus(const std::filesystem::path& dir);

}  // namespace sclab
