#include "vawe/miner.hpp"

#include <algorithm>

namespace vawe {

namespace {

void check_prefix(const NeighborLists& k1_lists, const NeighborLists& k2_lists,
                  const char* side) {
    for (std::size_t i = 0; i < k1_lists.size(); ++i) {
        if (!std::equal(k1_lists.lists[i].begin(), k1_lists.lists[i].end(),
                        k2_lists.lists[i].begin())) {
            throw ConfigError(std::string("mine_triplets: ") + side +
                              " k1 lists are not prefixes of the k2 lists");
        }
    }
}

}  // namespace

TripletBatch mine_triplets(const NeighborLists& nv_k1, const NeighborLists& nv_k2,
                           const NeighborLists& ns_k1, const NeighborLists& ns_k2,
                           const HubSet& hubs, Rng& rng, std::int64_t epoch) {
    const std::size_t c = nv_k1.size();
    if (nv_k2.size() != c || ns_k1.size() != c || ns_k2.size() != c) {
        throw ShapeError("mine_triplets: neighbor structures cover different class sets");
    }
    if (nv_k2.k <= nv_k1.k || ns_k2.k <= ns_k1.k || nv_k1.k != ns_k1.k ||
        nv_k2.k != ns_k2.k) {
        throw ConfigError("mine_triplets: requires K2 > K1 on both sides");
    }
    check_prefix(nv_k1, nv_k2, "visual");
    check_prefix(ns_k1, ns_k2, "semantic");

    TripletBatch batch;
    batch.epoch = epoch;
    std::vector<char> in_ns_k2(c), in_nv_k2_filtered(c);
    std::vector<std::size_t> positives;

    for (std::size_t a = 0; a < c; ++a) {
        std::fill(in_ns_k2.begin(), in_ns_k2.end(), 0);
        std::fill(in_nv_k2_filtered.begin(), in_nv_k2_filtered.end(), 0);
        for (std::size_t j : ns_k2.lists[a]) in_ns_k2[j] = 1;
        for (std::size_t j : nv_k2.lists[a]) {
            if (!hubs.contains(j)) in_nv_k2_filtered[j] = 1;
        }
        positives.clear();
        for (std::size_t v : nv_k1.lists[a]) {
            if (!hubs.contains(v) && !in_ns_k2[v]) positives.push_back(v);
        }
        if (positives.empty()) continue;
        for (std::size_t s : ns_k1.lists[a]) {
            if (in_nv_k2_filtered[s]) continue;
            for (std::size_t p : positives) {
                batch.triplets.push_back({a, p, s});
            }
        }
    }
    rng.shuffle(batch.triplets);
    return batch;
}

}  // namespace vawe
