#pragma once

#include <cstdint>
#include <vector>

#include "vawe/neighborhood.hpp"

namespace vawe {

// (anchor, positive, negative) class indices; pairwise distinct by
// construction of the mining rule.
struct Triplet {
    std::size_t a;
    std::size_t p;
    std::size_t n;

    bool operator==(const Triplet&) const = default;
    auto operator<=>(const Triplet&) const = default;
};

struct TripletBatch {
    std::int64_t epoch = 0;
    std::vector<Triplet> triplets;  // post-shuffle order

    bool empty() const { return triplets.empty(); }
    std::size_t size() const { return triplets.size(); }
};

// Per-epoch dynamic triplet selection. Hub members are removed from the
// visual lists first (filtered, not re-sorted); then for each anchor a,
// negatives are semantic k1-neighbors absent from the filtered visual k2
// list, positives are filtered visual k1-neighbors absent from the semantic
// k2 list, and the full cross product is emitted. The batch is shuffled
// with `rng` at the end.
//
// Preconditions: all four structures cover the same classes, k2 > k1, and
// the k1 lists are prefixes of the k2 lists (same distance matrix).
TripletBatch mine_triplets(const NeighborLists& nv_k1, const NeighborLists& nv_k2,
                           const NeighborLists& ns_k1, const NeighborLists& ns_k2,
                           const HubSet& hubs, Rng& rng, std::int64_t epoch = 0);

}  // namespace vawe
