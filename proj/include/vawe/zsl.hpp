#pragma once

#include <map>
#include <string>
#include <vector>

#include "vawe/tables.hpp"

namespace vawe {

// Compatibility scorer: prediction is the argmax of score over candidate
// classes, ties broken by ascending class index.
class ZslScorer {
  public:
    virtual ~ZslScorer() = default;

    virtual double score(std::span<const double> x, std::span<const double> class_embedding) const = 0;

    // Index into `candidates` of the best-scoring class.
    virtual std::size_t predict(std::span<const double> x,
                                const ClassEmbeddingTable& candidates) const;
};

enum class LabelEncoding { PlusMinusOne, ZeroOne };

// Bilinear compatibility model fit in closed form:
//   V = (X X^T + gamma I)^-1 X Y S^T (S S^T + lam I)^-1
// with feature columns X (d_v x m), seen-class embedding columns S
// (d_emb x z) and the ground-truth matrix Y (m x z).
class EszslModel : public ZslScorer {
  public:
    EszslModel(DenseMatrix v, double gamma, double lam)
        : v_(std::move(v)), gamma_(gamma), lam_(lam) {}

    double score(std::span<const double> x, std::span<const double> s) const override;

    const DenseMatrix& v() const { return v_; }
    double gamma() const { return gamma_; }
    double lam() const { return lam_; }

  private:
    DenseMatrix v_;  // d_v x d_emb
    double gamma_;
    double lam_;
};

EszslModel eszsl_fit(const LabeledFeatureSet& x_seen, const ClassEmbeddingTable& emb_seen,
                     double gamma, double lam,
                     LabelEncoding encoding = LabelEncoding::PlusMinusOne);

// Convex-combination model: a seen-class posterior from a distance softmax
// over visual signatures weighs the seen-class embeddings; prediction is
// the cosine-nearest unseen embedding.
class ConseModel : public ZslScorer {
  public:
    ConseModel(VisualSignatureTable signatures, ClassEmbeddingTable seen_embeddings,
               std::size_t t_top, double temperature);

    // Normalized confidence-weighted combination of the top seen-class
    // embeddings for feature x.
    std::vector<double> embed(std::span<const double> x) const;

    // cosine(embed(x), class_embedding)
    double score(std::span<const double> x, std::span<const double> s) const override;

    std::size_t predict(std::span<const double> x,
                        const ClassEmbeddingTable& candidates) const override;

    std::size_t t_top() const { return t_top_; }
    double temperature() const { return temperature_; }

  private:
    VisualSignatureTable signatures_;
    ClassEmbeddingTable seen_embeddings_;
    std::size_t t_top_;
    double temperature_;
};

std::size_t conse_predict(std::span<const double> x, const ConseModel& model,
                          const ClassEmbeddingTable& unseen_emb);

struct EvalReport {
    std::map<std::string, double> per_class_accuracy;
    double mean_per_class_accuracy = 0.0;
    double overall_accuracy = 0.0;
    std::size_t sample_count = 0;
};

// Top-1 accuracy of `scorer` over unseen-labelled features. Throws
// ProtocolError if a feature row is labelled outside the unseen table.
EvalReport evaluate(const ZslScorer& scorer, const LabeledFeatureSet& features_unseen,
                    const ClassEmbeddingTable& emb_unseen);

}  // namespace vawe
