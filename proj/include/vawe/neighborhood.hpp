#pragma once

#include <cstdint>
#include <vector>

#include "vawe/tables.hpp"

namespace vawe {

// Per class, the indices of its k nearest other classes, ascending by
// distance with ties broken by ascending class index. A class never lists
// itself.
struct NeighborLists {
    std::size_t k = 0;
    std::vector<std::vector<std::size_t>> lists;

    std::size_t size() const { return lists.size(); }
};

// Classes that appear in more than k1 other classes' top-k1 neighbor lists.
struct HubSet {
    std::vector<std::size_t> members;  // sorted ascending
    std::int64_t epoch = 0;

    bool contains(std::size_t index) const;
};

// Per-class arithmetic mean of feature rows, in class_order. Throws
// ProtocolError if a class has no rows.
VisualSignatureTable visual_signatures(const LabeledFeatureSet& features,
                                       const std::vector<std::string>& class_order);

// Symmetric Euclidean (not squared) distance matrix with an exactly zero
// diagonal. Throws ShapeError for fewer than 2 rows.
DenseMatrix class_distance_matrix(const DenseMatrix& rows);

// Top-k neighbor lists from a square distance matrix. Requires
// 1 <= k <= n-1 (ConfigError otherwise).
NeighborLists top_k_neighbors(const DenseMatrix& dist, std::size_t k);

// Average neighborhood overlap: (1/C) * sum_i |nv[i] /\ ns[i]|. Both sides
// must have the same class count and the same k.
double consistency(const NeighborLists& nv, const NeighborLists& ns);

// How often each class appears in the others' top-k lists.
std::vector<std::size_t> hub_counts(const NeighborLists& lists);

// Hub detection over mapped embeddings: count appearances in top-k1
// neighbor lists and keep classes with count > k1.
HubSet detect_hubs(const ClassEmbeddingTable& mapped, std::size_t k1,
                   std::int64_t epoch = 0);

}  // namespace vawe
