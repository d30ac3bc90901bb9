#include "vawe/tables.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace vawe {

namespace {

std::unordered_map<std::string, std::size_t> index_by_name(
    const std::vector<std::string>& names) {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);
    return index;
}

}  // namespace

void ClassEmbeddingTable::validate() const {
    if (class_names.size() != vectors.rows()) {
        throw ShapeError("embedding table: " + std::to_string(class_names.size()) +
                         " names vs " + std::to_string(vectors.rows()) + " rows");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : class_names) {
        if (!seen.insert(name).second) {
            throw ProtocolError("embedding table: duplicate class name '" + name + "'");
        }
    }
}

ClassEmbeddingTable ClassEmbeddingTable::restricted_to(
    const std::vector<std::string>& names) const {
    auto index = index_by_name(class_names);
    ClassEmbeddingTable out;
    out.class_names = names;
    out.vectors = DenseMatrix(names.size(), dim());
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto it = index.find(names[i]);
        if (it == index.end()) {
            throw ProtocolError("class '" + names[i] + "' not present in embedding table");
        }
        auto src = vectors.row(it->second);
        std::copy(src.begin(), src.end(), out.vectors.row(i).begin());
    }
    return out;
}

void LabeledFeatureSet::validate() const {
    if (class_labels.size() != features.rows()) {
        throw ShapeError("feature set: " + std::to_string(class_labels.size()) +
                         " labels vs " + std::to_string(features.rows()) + " rows");
    }
}

LabeledFeatureSet LabeledFeatureSet::restricted_to(
    const std::vector<std::string>& names) const {
    std::unordered_set<std::string> keep(names.begin(), names.end());
    LabeledFeatureSet out;
    std::vector<double> rows;
    for (std::size_t i = 0; i < class_labels.size(); ++i) {
        if (!keep.contains(class_labels[i])) continue;
        out.class_labels.push_back(class_labels[i]);
        auto src = features.row(i);
        rows.insert(rows.end(), src.begin(), src.end());
    }
    out.features = DenseMatrix(out.class_labels.size(), dim(), std::move(rows));
    return out;
}

VisualSignatureTable VisualSignatureTable::restricted_to(
    const std::vector<std::string>& names) const {
    auto index = index_by_name(class_names);
    VisualSignatureTable out;
    out.class_names = names;
    out.signatures = DenseMatrix(names.size(), dim());
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto it = index.find(names[i]);
        if (it == index.end()) {
            throw ProtocolError("class '" + names[i] + "' not present in signature table");
        }
        auto src = signatures.row(it->second);
        std::copy(src.begin(), src.end(), out.signatures.row(i).begin());
    }
    return out;
}

void ZslSplit::validate() const {
    if (seen.empty() || unseen.empty()) {
        throw ProtocolError("split: seen and unseen sets must both be non-empty");
    }
    std::unordered_set<std::string> seen_set(seen.begin(), seen.end());
    for (const auto& name : unseen) {
        if (seen_set.contains(name)) {
            throw ProtocolError("split: class '" + name + "' is both seen and unseen");
        }
    }
}

bool ZslSplit::is_seen(const std::string& name) const {
    return std::find(seen.begin(), seen.end(), name) != seen.end();
}

bool ZslSplit::is_unseen(const std::string& name) const {
    return std::find(unseen.begin(), unseen.end(), name) != unseen.end();
}

}  // namespace vawe
