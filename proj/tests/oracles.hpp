#pragma once

// Independent reference implementations shared by the unit and acceptance
// suites. Nothing here reuses the production code paths it checks.

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "vawe/alignnet.hpp"
#include "vawe/tables.hpp"

namespace vawe::testutil {

// -- Triplet selection re-derived from raw distance matrices ------------------

using TripletSet = std::multiset<std::tuple<std::size_t, std::size_t, std::size_t>>;

inline TripletSet mine_oracle(const DenseMatrix& dist_v, const DenseMatrix& dist_s,
                              std::size_t k1, std::size_t k2,
                              const std::set<std::size_t>& hubs) {
    const std::size_t c = dist_v.rows();
    auto ranked = [c](const DenseMatrix& dist, std::size_t anchor) {
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t j = 0; j < c; ++j) {
            if (j != anchor) order.emplace_back(dist.at(anchor, j), j);
        }
        std::sort(order.begin(), order.end());
        return order;
    };

    TripletSet out;
    for (std::size_t a = 0; a < c; ++a) {
        auto vis = ranked(dist_v, a);
        auto sem = ranked(dist_s, a);
        std::set<std::size_t> vis_k1_nohub, vis_k2_nohub, sem_k1, sem_k2;
        for (std::size_t r = 0; r < k1; ++r) {
            if (!hubs.contains(vis[r].second)) vis_k1_nohub.insert(vis[r].second);
            sem_k1.insert(sem[r].second);
        }
        for (std::size_t r = 0; r < k2; ++r) {
            if (!hubs.contains(vis[r].second)) vis_k2_nohub.insert(vis[r].second);
            sem_k2.insert(sem[r].second);
        }
        for (std::size_t n : sem_k1) {
            if (vis_k2_nohub.contains(n)) continue;
            for (std::size_t p : vis_k1_nohub) {
                if (sem_k2.contains(p)) continue;
                out.insert({a, p, n});
            }
        }
    }
    return out;
}

// -- Gradient checking ---------------------------------------------------------

inline std::vector<double> flatten(const MlpParams& p) {
    std::vector<double> out;
    for (const auto* block : {&p.w1.data(), &p.w2.data(), &p.w3.data(), &p.b1, &p.b2, &p.b3}) {
        out.insert(out.end(), block->begin(), block->end());
    }
    return out;
}

inline void unflatten(const std::vector<double>& flat, MlpParams& p) {
    std::size_t pos = 0;
    for (auto* block : {&p.w1.data(), &p.w2.data(), &p.w3.data(), &p.b1, &p.b2, &p.b3}) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                  flat.begin() + static_cast<std::ptrdiff_t>(pos + block->size()),
                  block->begin());
        pos += block->size();
    }
}

inline double triplet_objective(const MlpParams& p, const std::vector<double>& a,
                                const std::vector<double>& pos, const std::vector<double>& n,
                                double alpha, double lambda, double eps) {
    auto fa = forward(p, a, eps);
    auto fp = forward(p, pos, eps);
    auto fn = forward(p, n, eps);
    double reg = 0.0;
    for (double v : flatten(p)) reg += v * v;
    return triplet_loss(fa.y, fp.y, fn.y, alpha) + lambda * reg;
}

struct GradCheckResult {
    double max_component_rel = 0.0;  // per component, denominator floored at 1e-4
    double normwise_rel = 0.0;       // max abs diff over max abs gradient entry
};

// Central differences at h=1e-5 against the analytic gradient.
inline GradCheckResult gradient_check(MlpParams params, const std::vector<double>& a,
                                      const std::vector<double>& p,
                                      const std::vector<double>& n, double alpha,
                                      double lambda, double eps) {
    auto fa = forward(params, a, eps);
    auto fp = forward(params, p, eps);
    auto fn = forward(params, n, eps);
    MlpParams grads = backward(params, fa, fp, fn, alpha, lambda);
    std::vector<double> analytic = flatten(grads);

    std::vector<double> theta = flatten(params);
    const double h = 1e-5;
    GradCheckResult result;
    double max_abs_diff = 0.0, max_abs_grad = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        double saved = theta[i];
        theta[i] = saved + h;
        unflatten(theta, params);
        double up = triplet_objective(params, a, p, n, alpha, lambda, eps);
        theta[i] = saved - h;
        unflatten(theta, params);
        double down = triplet_objective(params, a, p, n, alpha, lambda, eps);
        theta[i] = saved;
        unflatten(theta, params);

        double numeric = (up - down) / (2.0 * h);
        double diff = std::abs(numeric - analytic[i]);
        max_abs_diff = std::max(max_abs_diff, diff);
        max_abs_grad = std::max(max_abs_grad, std::max(std::abs(numeric), std::abs(analytic[i])));
        double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-4});
        result.max_component_rel = std::max(result.max_component_rel, diff / denom);
    }
    result.normwise_rel = max_abs_diff / std::max(max_abs_grad, 1e-12);
    return result;
}

struct TripletDraw {
    MlpParams params;
    std::vector<double> a, p, n;
};

inline bool away_from_kinks(const ForwardCache& c) {
    for (double z : c.z1) {
        if (std::abs(z) < 1e-4) return false;
    }
    for (double z : c.z2) {
        if (std::abs(z) < 1e-4) return false;
    }
    return c.prenorm > 1e-3;
}

// Random active-hinge triplet away from ReLU kinks and the hinge boundary.
inline TripletDraw draw_checkable(Rng& rng, double alpha, double eps) {
    const std::size_t ds = 5, h1 = 6, h2 = 5, dout = 4;
    for (int attempt = 0; attempt < 2000; ++attempt) {
        TripletDraw d;
        d.params = MlpParams::init(ds, h1, h2, dout, rng);
        for (double& b : d.params.b1) b = rng.uniform(-0.1, 0.1);
        for (double& b : d.params.b2) b = rng.uniform(-0.1, 0.1);
        for (double& b : d.params.b3) b = rng.uniform(-0.1, 0.1);
        auto vec = [&rng, ds]() {
            std::vector<double> v(ds);
            for (double& x : v) x = rng.uniform(-1.5, 1.5);
            return v;
        };
        d.a = vec();
        d.p = vec();
        d.n = vec();
        auto fa = forward(d.params, d.a, eps);
        auto fp = forward(d.params, d.p, eps);
        auto fn = forward(d.params, d.n, eps);
        if (!away_from_kinks(fa) || !away_from_kinks(fp) || !away_from_kinks(fn)) continue;
        double margin = squared_distance(fa.y, fp.y) - squared_distance(fa.y, fn.y) + alpha;
        if (margin < 1e-2) continue;
        return d;
    }
    throw std::runtime_error("no checkable draw found");
}

// -- ESZSL stationarity --------------------------------------------------------

// Frobenius norm of the regularized-objective gradient at V:
//   2 [ (X X^T + gamma I) V (S S^T + lam I) - X Y S^T ]
inline double eszsl_stationarity_residual(const LabeledFeatureSet& feats,
                                          const ClassEmbeddingTable& emb,
                                          const DenseMatrix& v_fitted, double gamma,
                                          double lam) {
    const std::size_t dv = feats.dim(), de = emb.dim(), z = emb.size(), m = feats.size();
    DenseMatrix a(dv, dv);
    for (std::size_t r = 0; r < m; ++r) {
        auto row = feats.features.row(r);
        for (std::size_t i = 0; i < dv; ++i) {
            for (std::size_t j = 0; j < dv; ++j) a.at(i, j) += row[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < dv; ++i) a.at(i, i) += gamma;

    DenseMatrix b(de, de);
    for (std::size_t c = 0; c < z; ++c) {
        auto s = emb.vectors.row(c);
        for (std::size_t i = 0; i < de; ++i) {
            for (std::size_t j = 0; j < de; ++j) b.at(i, j) += s[i] * s[j];
        }
    }
    for (std::size_t i = 0; i < de; ++i) b.at(i, i) += lam;

    DenseMatrix xy(dv, z);
    for (std::size_t r = 0; r < m; ++r) {
        std::size_t cls = 0;
        for (std::size_t c = 0; c < z; ++c) {
            if (emb.class_names[c] == feats.class_labels[r]) cls = c;
        }
        auto row = feats.features.row(r);
        for (std::size_t c = 0; c < z; ++c) {
            double y = c == cls ? 1.0 : -1.0;
            for (std::size_t i = 0; i < dv; ++i) xy.at(i, c) += y * row[i];
        }
    }
    DenseMatrix xys = matmul(xy, emb.vectors);
    DenseMatrix avb = matmul(matmul(a, v_fitted), b);
    double norm = 0.0;
    for (std::size_t i = 0; i < avb.data().size(); ++i) {
        double g = 2.0 * (avb.data()[i] - xys.data()[i]);
        norm += g * g;
    }
    return std::sqrt(norm);
}

}  // namespace vawe::testutil
