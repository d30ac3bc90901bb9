#include "vawe/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace vawe {

bool HubSet::contains(std::size_t index) const {
    return std::binary_search(members.begin(), members.end(), index);
}

VisualSignatureTable visual_signatures(const LabeledFeatureSet& features,
                                       const std::vector<std::string>& class_order) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < class_order.size(); ++i) index.emplace(class_order[i], i);

    VisualSignatureTable out;
    out.class_names = class_order;
    out.signatures = DenseMatrix(class_order.size(), features.dim());
    std::vector<std::size_t> counts(class_order.size(), 0);

    for (std::size_t r = 0; r < features.size(); ++r) {
        auto it = index.find(features.class_labels[r]);
        if (it == index.end()) continue;  // extra classes in the file are ignored
        auto src = features.features.row(r);
        auto dst = out.signatures.row(it->second);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
        ++counts[it->second];
    }
    for (std::size_t i = 0; i < class_order.size(); ++i) {
        if (counts[i] == 0) {
            throw ProtocolError("class '" + class_order[i] + "' has no feature rows");
        }
        auto row = out.signatures.row(i);
        for (double& v : row) v /= static_cast<double>(counts[i]);
    }
    return out;
}

DenseMatrix class_distance_matrix(const DenseMatrix& rows) {
    if (rows.rows() < 2) {
        throw ShapeError("class_distance_matrix: need at least 2 rows, got " +
                         std::to_string(rows.rows()));
    }
    DenseMatrix dist(rows.rows(), rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        for (std::size_t j = i + 1; j < rows.rows(); ++j) {
            double d2 = squared_distance(rows.row(i), rows.row(j));
            double d = std::sqrt(d2 < 0.0 ? 0.0 : d2);
            dist.at(i, j) = d;
            dist.at(j, i) = d;
        }
    }
    return dist;
}

NeighborLists top_k_neighbors(const DenseMatrix& dist, std::size_t k) {
    if (dist.rows() != dist.cols()) {
        throw ShapeError("top_k_neighbors: distance matrix must be square");
    }
    const std::size_t n = dist.rows();
    if (k < 1 || k > n - 1) {
        throw ConfigError("top_k_neighbors: k=" + std::to_string(k) +
                          " out of range [1, " + std::to_string(n - 1) + "]");
    }
    NeighborLists out;
    out.k = k;
    out.lists.resize(n);
    std::vector<std::size_t> order(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) order[m++] = j;
        }
        // Ties break toward the smaller class index; stable sort on an
        // index-ascending sequence delivers exactly that.
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return dist.at(i, a) < dist.at(i, b);
        });
        out.lists[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return out;
}

double consistency(const NeighborLists& nv, const NeighborLists& ns) {
    if (nv.size() != ns.size()) {
        throw ShapeError("consistency: class counts differ (" + std::to_string(nv.size()) +
                         " vs " + std::to_string(ns.size()) + ")");
    }
    if (nv.k != ns.k) {
        throw ShapeError("consistency: neighbor counts differ (k=" + std::to_string(nv.k) +
                         " vs k=" + std::to_string(ns.k) + ")");
    }
    if (nv.size() == 0) throw ShapeError("consistency: empty neighbor lists");

    std::size_t shared = 0;
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < nv.size(); ++i) {
        a = nv.lists[i];
        b = ns.lists[i];
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        std::size_t ia = 0, ib = 0;
        while (ia < a.size() && ib < b.size()) {
            if (a[ia] == b[ib]) {
                ++shared;
                ++ia;
                ++ib;
            } else if (a[ia] < b[ib]) {
                ++ia;
            } else {
                ++ib;
            }
        }
    }
    return static_cast<double>(shared) / static_cast<double>(nv.size());
}

std::vector<std::size_t> hub_counts(const NeighborLists& lists) {
    std::vector<std::size_t> counts(lists.size(), 0);
    for (const auto& list : lists.lists) {
        for (std::size_t j : list) ++counts[j];
    }
    return counts;
}

HubSet detect_hubs(const ClassEmbeddingTable& mapped, std::size_t k1, std::int64_t epoch) {
    auto lists = top_k_neighbors(class_distance_matrix(mapped.vectors), k1);
    auto counts = hub_counts(lists);
    HubSet hubs;
    hubs.epoch = epoch;
    for (std::size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] > k1) hubs.members.push_back(j);
    }
    return hubs;
}

}  // namespace vawe
