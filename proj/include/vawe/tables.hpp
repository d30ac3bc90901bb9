#pragma once

#include <string>
#include <vector>

#include "vawe/numerics.hpp"

namespace vawe {

// Class name <-> semantic vector table. Row order defines the canonical
// class index used by every other module.
struct ClassEmbeddingTable {
    std::vector<std::string> class_names;
    DenseMatrix vectors;  // one row per class

    std::size_t size() const { return class_names.size(); }
    std::size_t dim() const { return vectors.cols(); }

    // Throws ShapeError/ProtocolError if the table is internally inconsistent.
    void validate() const;

    // Rows for `names`, in the order given. Throws ProtocolError on a
    // missing name.
    ClassEmbeddingTable restricted_to(const std::vector<std::string>& names) const;
};

// One row per image, labelled with its class name.
struct LabeledFeatureSet {
    std::vector<std::string> class_labels;
    DenseMatrix features;

    std::size_t size() const { return class_labels.size(); }
    std::size_t dim() const { return features.cols(); }

    void validate() const;

    // Rows whose label is in `names` (kept in file order).
    LabeledFeatureSet restricted_to(const std::vector<std::string>& names) const;
};

// Class name <-> mean visual feature vector, rows in canonical class order.
struct VisualSignatureTable {
    std::vector<std::string> class_names;
    DenseMatrix signatures;

    std::size_t size() const { return class_names.size(); }
    std::size_t dim() const { return signatures.cols(); }

    VisualSignatureTable restricted_to(const std::vector<std::string>& names) const;
};

// Disjoint, non-empty seen/unseen class sets. Kept as ordered lists for
// deterministic output; membership helpers do the set logic.
struct ZslSplit {
    std::vector<std::string> seen;
    std::vector<std::string> unseen;

    void validate() const;
    bool is_seen(const std::string& name) const;
    bool is_unseen(const std::string& name) const;
};

}  // namespace vawe
