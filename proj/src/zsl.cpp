#include "vawe/zsl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace vawe {

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
    double na = norm2(a), nb = norm2(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

}  // namespace

std::size_t ZslScorer::predict(std::span<const double> x,
                               const ClassEmbeddingTable& candidates) const {
    if (candidates.size() == 0) throw ShapeError("predict: no candidate classes");
    std::size_t best = 0;
    double best_score = score(x, candidates.vectors.row(0));
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        double s = score(x, candidates.vectors.row(i));
        if (s > best_score) {  // ties keep the smaller index
            best_score = s;
            best = i;
        }
    }
    return best;
}

double EszslModel::score(std::span<const double> x, std::span<const double> s) const {
    if (x.size() != v_.rows() || s.size() != v_.cols()) {
        throw ShapeError("eszsl score: x dim " + std::to_string(x.size()) + ", s dim " +
                         std::to_string(s.size()) + " vs V " + std::to_string(v_.rows()) +
                         "x" + std::to_string(v_.cols()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < v_.rows(); ++i) {
        if (x[i] == 0.0) continue;
        total += x[i] * dot(v_.row(i), s);
    }
    return total;
}

EszslModel eszsl_fit(const LabeledFeatureSet& x_seen, const ClassEmbeddingTable& emb_seen,
                     double gamma, double lam, LabelEncoding encoding) {
    if (!(gamma > 0.0) || !(lam > 0.0)) {
        throw ConfigError("eszsl_fit: gamma and lam must be > 0");
    }
    const std::size_t m = x_seen.size();
    const std::size_t dv = x_seen.dim();
    const std::size_t z = emb_seen.size();
    if (m == 0) throw ShapeError("eszsl_fit: no training rows");

    std::unordered_map<std::string, std::size_t> class_index;
    for (std::size_t i = 0; i < z; ++i) class_index.emplace(emb_seen.class_names[i], i);

    const double negative = encoding == LabelEncoding::PlusMinusOne ? -1.0 : 0.0;

    // A = X X^T + gamma I  (features as columns: A_{ij} = sum_r x_ri x_rj)
    DenseMatrix a(dv, dv);
    for (std::size_t r = 0; r < m; ++r) {
        auto row = x_seen.features.row(r);
        for (std::size_t i = 0; i < dv; ++i) {
            double xi = row[i];
            if (xi == 0.0) continue;
            for (std::size_t j = 0; j < dv; ++j) a.at(i, j) += xi * row[j];
        }
    }
    for (std::size_t i = 0; i < dv; ++i) a.at(i, i) += gamma;

    // X Y: d_v x z, column c = sum over rows of y_{rc} * x_r
    DenseMatrix xy(dv, z);
    for (std::size_t r = 0; r < m; ++r) {
        auto it = class_index.find(x_seen.class_labels[r]);
        if (it == class_index.end()) {
            throw ProtocolError("eszsl_fit: feature label '" + x_seen.class_labels[r] +
                                "' not in the seen embedding table");
        }
        auto row = x_seen.features.row(r);
        for (std::size_t c = 0; c < z; ++c) {
            double y = c == it->second ? 1.0 : negative;
            if (y == 0.0) continue;
            for (std::size_t i = 0; i < dv; ++i) xy.at(i, c) += y * row[i];
        }
    }

    // X Y S^T: d_v x d_emb (S columns are seen-class embeddings)
    DenseMatrix xys = matmul(xy, emb_seen.vectors);

    // B = S S^T + lam I over the embedding dimension.
    const std::size_t de = emb_seen.dim();
    DenseMatrix b(de, de);
    for (std::size_t c = 0; c < z; ++c) {
        auto s = emb_seen.vectors.row(c);
        for (std::size_t i = 0; i < de; ++i) {
            double si = s[i];
            if (si == 0.0) continue;
            for (std::size_t j = 0; j < de; ++j) b.at(i, j) += si * s[j];
        }
    }
    for (std::size_t i = 0; i < de; ++i) b.at(i, i) += lam;

    DenseMatrix mid = solve_spd(a, xys);                 // (X X^T + gI)^-1 X Y S^T
    DenseMatrix v = transpose(solve_spd(b, transpose(mid)));  // ... (S S^T + lI)^-1
    v.check_finite("eszsl_fit");
    return EszslModel(std::move(v), gamma, lam);
}

ConseModel::ConseModel(VisualSignatureTable signatures, ClassEmbeddingTable seen_embeddings,
                       std::size_t t_top, double temperature)
    : signatures_(std::move(signatures)),
      seen_embeddings_(std::move(seen_embeddings)),
      t_top_(t_top),
      temperature_(temperature) {
    if (signatures_.class_names != seen_embeddings_.class_names) {
        throw ProtocolError("conse: signature and embedding tables disagree on class order");
    }
    if (t_top_ < 1 || t_top_ > signatures_.size()) {
        throw ConfigError("conse: t_top=" + std::to_string(t_top_) + " out of range [1, " +
                          std::to_string(signatures_.size()) + "]");
    }
    if (!(temperature_ > 0.0)) throw ConfigError("conse: temperature must be > 0");
}

std::vector<double> ConseModel::embed(std::span<const double> x) const {
    if (x.size() != signatures_.dim()) {
        throw ShapeError("conse embed: x dim " + std::to_string(x.size()) +
                         " vs signature dim " + std::to_string(signatures_.dim()));
    }
    const std::size_t z = signatures_.size();

    // Softmax over -||x - v_y||^2 / temperature, max-shifted.
    std::vector<double> logits(z);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < z; ++i) {
        logits[i] = -squared_distance(x, signatures_.signatures.row(i)) / temperature_;
        max_logit = std::max(max_logit, logits[i]);
    }
    std::vector<double> posterior(z);
    double total = 0.0;
    for (std::size_t i = 0; i < z; ++i) {
        posterior[i] = std::exp(logits[i] - max_logit);
        total += posterior[i];
    }
    for (double& p : posterior) p /= total;

    std::vector<std::size_t> order(z);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return posterior[a] > posterior[b]; });

    std::vector<double> out(seen_embeddings_.dim(), 0.0);
    double weight = 0.0;
    for (std::size_t r = 0; r < t_top_; ++r) {
        std::size_t cls = order[r];
        auto emb = seen_embeddings_.vectors.row(cls);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += posterior[cls] * emb[j];
        weight += posterior[cls];
    }
    for (double& vv : out) vv /= weight;
    l2_normalize_in_place(out, 1e-12);
    return out;
}

double ConseModel::score(std::span<const double> x, std::span<const double> s) const {
    return cosine(embed(x), s);
}

std::size_t ConseModel::predict(std::span<const double> x,
                                const ClassEmbeddingTable& candidates) const {
    if (candidates.size() == 0) throw ShapeError("predict: no candidate classes");
    std::vector<double> e = embed(x);
    std::size_t best = 0;
    double best_score = cosine(e, candidates.vectors.row(0));
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        double s = cosine(e, candidates.vectors.row(i));
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    return best;
}

std::size_t conse_predict(std::span<const double> x, const ConseModel& model,
                          const ClassEmbeddingTable& unseen_emb) {
    return model.predict(x, unseen_emb);
}

EvalReport evaluate(const ZslScorer& scorer, const LabeledFeatureSet& features_unseen,
                    const ClassEmbeddingTable& emb_unseen) {
    std::unordered_map<std::string, std::size_t> class_index;
    for (std::size_t i = 0; i < emb_unseen.size(); ++i) {
        class_index.emplace(emb_unseen.class_names[i], i);
    }

    std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // hit, total
    std::size_t hits = 0;
    for (std::size_t r = 0; r < features_unseen.size(); ++r) {
        const std::string& label = features_unseen.class_labels[r];
        auto it = class_index.find(label);
        if (it == class_index.end()) {
            throw ProtocolError("evaluate: label '" + label + "' is not an unseen class");
        }
        std::size_t predicted = scorer.predict(features_unseen.features.row(r), emb_unseen);
        auto& [hit, total] = per_class[label];
        ++total;
        if (predicted == it->second) {
            ++hit;
            ++hits;
        }
    }
    if (features_unseen.size() == 0) throw ProtocolError("evaluate: no test rows");

    EvalReport report;
    report.sample_count = features_unseen.size();
    report.overall_accuracy = static_cast<double>(hits) / static_cast<double>(features_unseen.size());
    double sum = 0.0;
    for (const auto& [name, counts] : per_class) {
        double acc = static_cast<double>(counts.first) / static_cast<double>(counts.second);
        report.per_class_accuracy.emplace(name, acc);
        sum += acc;
    }
    report.mean_per_class_accuracy = sum / static_cast<double>(report.per_class_accuracy.size());
    return report;
}

}  // namespace vawe
