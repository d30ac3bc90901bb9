#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "vawe/tables.hpp"

namespace vawe {

// Synthetic dataset with a controllable visual-semantic discrepancy knob.
//
// Class centers are standard Gaussian in visual space; images are noisy
// copies of their center. Semantic vectors are an isometric image of the
// centers (when semantic_dim >= visual_dim) blended with an independent
// Gaussian component weighted by discrepancy_rho and rescaled by
// 1/sqrt(1+rho^2) so distance scales stay comparable across rho. At rho=0
// and zero noise the semantic neighborhood structure reproduces the visual
// one exactly.
struct SynthConfig {
    std::size_t num_classes = 40;
    std::size_t images_per_class = 25;
    std::size_t visual_dim = 32;
    std::size_t semantic_dim = 24;
    double noise_sigma = 0.3;
    double discrepancy_rho = 2.0;
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError
};

struct SynthData {
    LabeledFeatureSet features;
    ClassEmbeddingTable embeddings;
    VisualSignatureTable signatures;  // empirical per-class means
};

SynthData generate_synthetic(const SynthConfig& cfg);

// -- Text formats ------------------------------------------------------------
//
// Embedding file:  line 1 "N D", then N lines "class_name v1 ... vD".
// Feature file:    line 1 "M D", then M lines "class_name f1 ... fD".
// Split file:      lines "seen class_name" / "unseen class_name".
//
// Single-space separated; floats written in shortest round-trip decimal.
// Loaders reject malformed input with a ParseError naming the line.

ClassEmbeddingTable load_embeddings(const std::filesystem::path& path);
void save_embeddings(const ClassEmbeddingTable& table, const std::filesystem::path& path);

LabeledFeatureSet load_features(const std::filesystem::path& path);
void save_features(const LabeledFeatureSet& set, const std::filesystem::path& path);

ZslSplit load_split(const std::filesystem::path& path);
void save_split(const ZslSplit& split, const std::filesystem::path& path);

// Signature tables reuse the embedding format.
VisualSignatureTable load_signatures(const std::filesystem::path& path);
void save_signatures(const VisualSignatureTable& table, const std::filesystem::path& path);

// Shortest round-trip decimal for a double (the format used by all writers).
std::string format_double(double value);

}  // namespace vawe
