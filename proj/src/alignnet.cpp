#include "vawe/alignnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vawe {

namespace {

void affine(const DenseMatrix& w, const std::vector<double>& b,
            std::span<const double> x, std::vector<double>& out) {
    out.assign(w.rows(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
        double acc = b[i];
        auto row = w.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
}

void relu(const std::vector<double>& z, std::vector<double>& h) {
    h.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) h[i] = z[i] > 0.0 ? z[i] : 0.0;
}

// dW += outer(dz, x); db += dz; dx = W^T dz
void backprop_affine(const DenseMatrix& w, std::span<const double> x,
                     const std::vector<double>& dz, DenseMatrix& dw,
                     std::vector<double>& db, std::vector<double>* dx) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
        double d = dz[i];
        db[i] += d;
        auto dwrow = dw.row(i);
        for (std::size_t j = 0; j < x.size(); ++j) dwrow[j] += d * x[j];
    }
    if (dx) {
        dx->assign(w.cols(), 0.0);
        for (std::size_t i = 0; i < w.rows(); ++i) {
            double d = dz[i];
            if (d == 0.0) continue;
            auto row = w.row(i);
            for (std::size_t j = 0; j < row.size(); ++j) (*dx)[j] += row[j] * d;
        }
    }
}

void backprop_branch(const MlpParams& params, const ForwardCache& cache,
                     const std::vector<double>& dy, MlpParams& grads) {
    const std::size_t dout = params.output_dim();

    // Through z -> z/max(||z||, eps). On the normalize path the Jacobian is
    // (I - y y^T)/||z||; on the eps-guard path it is I/eps.
    std::vector<double> dz3(dout);
    if (cache.prenorm >= cache.scale) {  // scale == prenorm: normalized
        double dyy = dot(dy, cache.y);
        for (std::size_t i = 0; i < dout; ++i) {
            dz3[i] = (dy[i] - dyy * cache.y[i]) / cache.scale;
        }
    } else {
        for (std::size_t i = 0; i < dout; ++i) dz3[i] = dy[i] / cache.scale;
    }

    std::vector<double> dh2, dh1;
    backprop_affine(params.w3, cache.h2, dz3, grads.w3, grads.b3, &dh2);
    for (std::size_t i = 0; i < dh2.size(); ++i) {
        if (cache.z2[i] <= 0.0) dh2[i] = 0.0;
    }
    backprop_affine(params.w2, cache.h1, dh2, grads.w2, grads.b2, &dh1);
    for (std::size_t i = 0; i < dh1.size(); ++i) {
        if (cache.z1[i] <= 0.0) dh1[i] = 0.0;
    }
    backprop_affine(params.w1, cache.input, dh1, grads.w1, grads.b1, nullptr);
}

void add_weight_decay(const MlpParams& params, double lambda, MlpParams& grads) {
    if (lambda == 0.0) return;
    auto add = [lambda](const std::vector<double>& src, std::vector<double>& dst) {
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] += 2.0 * lambda * src[i];
    };
    add(params.w1.data(), grads.w1.data());
    add(params.w2.data(), grads.w2.data());
    add(params.w3.data(), grads.w3.data());
    add(params.b1, grads.b1);
    add(params.b2, grads.b2);
    add(params.b3, grads.b3);
}

void for_each_param(MlpParams& p, const MlpParams& g, auto&& fn) {
    auto run = [&](std::vector<double>& pv, const std::vector<double>& gv) {
        for (std::size_t i = 0; i < pv.size(); ++i) fn(pv[i], gv[i]);
    };
    run(p.w1.data(), g.w1.data());
    run(p.w2.data(), g.w2.data());
    run(p.w3.data(), g.w3.data());
    run(p.b1, g.b1);
    run(p.b2, g.b2);
    run(p.b3, g.b3);
}

}  // namespace

MlpParams MlpParams::init(std::size_t input, std::size_t hidden1, std::size_t hidden2,
                          std::size_t output, Rng& rng) {
    MlpParams p;
    p.w1 = DenseMatrix(hidden1, input);
    p.w2 = DenseMatrix(hidden2, hidden1);
    p.w3 = DenseMatrix(output, hidden2);
    p.b1.assign(hidden1, 0.0);
    p.b2.assign(hidden2, 0.0);
    p.b3.assign(output, 0.0);
    auto fill = [&rng](DenseMatrix& w) {
        double limit = std::sqrt(6.0 / static_cast<double>(w.cols()));
        for (double& v : w.data()) v = rng.uniform(-limit, limit);
    };
    fill(p.w1);
    fill(p.w2);
    fill(p.w3);
    return p;
}

MlpParams MlpParams::zeros_like(const MlpParams& shape) {
    MlpParams p;
    p.w1 = DenseMatrix(shape.w1.rows(), shape.w1.cols());
    p.w2 = DenseMatrix(shape.w2.rows(), shape.w2.cols());
    p.w3 = DenseMatrix(shape.w3.rows(), shape.w3.cols());
    p.b1.assign(shape.b1.size(), 0.0);
    p.b2.assign(shape.b2.size(), 0.0);
    p.b3.assign(shape.b3.size(), 0.0);
    return p;
}

TrainConfig TrainConfig::resolved(std::size_t num_seen, std::size_t input_dim) const {
    TrainConfig r = *this;
    if (r.k2 == 0) {
        r.k2 = std::min(num_seen / 2, num_seen > 0 ? num_seen - 1 : 0);
    }
    if (r.hidden1 == 0) r.hidden1 = 2 * input_dim;
    if (r.hidden2 == 0) r.hidden2 = 2 * input_dim;
    if (r.k1 < 1) throw ConfigError("k1 must be >= 1");
    if (r.k2 <= r.k1) {
        throw ConfigError("k2=" + std::to_string(r.k2) + " must exceed k1=" +
                          std::to_string(r.k1));
    }
    if (num_seen < r.k2 + 1) {
        throw ConfigError("need at least k2+1=" + std::to_string(r.k2 + 1) +
                          " seen classes, got " + std::to_string(num_seen));
    }
    if (!(r.alpha > 0.0)) throw ConfigError("alpha must be > 0");
    if (!(r.lr > 0.0)) throw ConfigError("lr must be > 0");
    if (r.lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (r.out_dim < 2) throw ConfigError("out_dim must be >= 2");
    if (r.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (r.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (!(r.norm_eps > 0.0)) throw ConfigError("norm_eps must be > 0");
    if (r.momentum < 0.0 || r.momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
    return r;
}

ForwardCache forward(const MlpParams& params, std::span<const double> input, double eps) {
    if (input.size() != params.input_dim()) {
        throw ShapeError("forward: input dim " + std::to_string(input.size()) +
                         " vs network input " + std::to_string(params.input_dim()));
    }
    ForwardCache c;
    c.input.assign(input.begin(), input.end());
    affine(params.w1, params.b1, c.input, c.z1);
    relu(c.z1, c.h1);
    affine(params.w2, params.b2, c.h1, c.z2);
    relu(c.z2, c.h2);
    affine(params.w3, params.b3, c.h2, c.z3);
    c.prenorm = norm2(c.z3);
    c.scale = c.prenorm < eps ? eps : c.prenorm;
    c.y.resize(c.z3.size());
    for (std::size_t i = 0; i < c.z3.size(); ++i) c.y[i] = c.z3[i] / c.scale;
    return c;
}

double triplet_loss(std::span<const double> ya, std::span<const double> yp,
                    std::span<const double> yn, double alpha) {
    double margin = squared_distance(ya, yp) - squared_distance(ya, yn) + alpha;
    return margin > 0.0 ? margin : 0.0;
}

double backward_accumulate(const MlpParams& params, const ForwardCache& anchor,
                           const ForwardCache& positive, const ForwardCache& negative,
                           double alpha, double lambda, MlpParams& grads) {
    double margin = squared_distance(anchor.y, positive.y) -
                    squared_distance(anchor.y, negative.y) + alpha;
    if (margin > 0.0) {  // inactive at the boundary
        const std::size_t dout = params.output_dim();
        std::vector<double> dya(dout), dyp(dout), dyn(dout);
        for (std::size_t i = 0; i < dout; ++i) {
            dya[i] = 2.0 * (negative.y[i] - positive.y[i]);
            dyp[i] = -2.0 * (anchor.y[i] - positive.y[i]);
            dyn[i] = 2.0 * (anchor.y[i] - negative.y[i]);
        }
        backprop_branch(params, anchor, dya, grads);
        backprop_branch(params, positive, dyp, grads);
        backprop_branch(params, negative, dyn, grads);
    }
    add_weight_decay(params, lambda, grads);
    return margin > 0.0 ? margin : 0.0;
}

MlpParams backward(const MlpParams& params, const ForwardCache& anchor,
                   const ForwardCache& positive, const ForwardCache& negative,
                   double alpha, double lambda) {
    MlpParams grads = MlpParams::zeros_like(params);
    backward_accumulate(params, anchor, positive, negative, alpha, lambda, grads);
    return grads;
}

ClassEmbeddingTable map_embeddings(const MlpParams& params, const ClassEmbeddingTable& table,
                                   double eps) {
    if (table.dim() != params.input_dim()) {
        throw ShapeError("map_embeddings: table dim " + std::to_string(table.dim()) +
                         " vs network input " + std::to_string(params.input_dim()));
    }
    ClassEmbeddingTable out;
    out.class_names = table.class_names;
    out.vectors = DenseMatrix(table.size(), params.output_dim());
    for (std::size_t i = 0; i < table.size(); ++i) {
        ForwardCache c = forward(params, table.vectors.row(i), eps);
        std::copy(c.y.begin(), c.y.end(), out.vectors.row(i).begin());
    }
    return out;
}

TrainResult train(const ClassEmbeddingTable& semantic_seen,
                  const VisualSignatureTable& signatures_seen, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    if (semantic_seen.class_names != signatures_seen.class_names) {
        throw ProtocolError("train: semantic and signature tables disagree on class order");
    }
    const std::size_t c = semantic_seen.size();
    const TrainConfig rc = cfg.resolved(c, semantic_seen.dim());

    Rng master(rc.seed);
    Rng init_rng = master.split();
    Rng mine_rng = master.split();

    MlpParams params = MlpParams::init(semantic_seen.dim(), rc.hidden1, rc.hidden2,
                                       rc.out_dim, init_rng);

    const DenseMatrix visual_dist = class_distance_matrix(signatures_seen.signatures);
    const NeighborLists nv1 = top_k_neighbors(visual_dist, rc.k1);
    const NeighborLists nv2 = top_k_neighbors(visual_dist, rc.k2);
    const DenseMatrix semantic_dist = class_distance_matrix(semantic_seen.vectors);
    NeighborLists ns1 = top_k_neighbors(semantic_dist, rc.k1);
    NeighborLists ns2 = top_k_neighbors(semantic_dist, rc.k2);

    TrainResult result;
    result.report.config = rc;
    result.report.stop_reason = "max epochs";
    result.report.best_epoch = 0;

    MlpParams best_params = params;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t epochs_without_improvement = 0;
    constexpr double kMinDelta = 1e-6;

    MlpParams velocity = MlpParams::zeros_like(params);
    MlpParams grads = MlpParams::zeros_like(params);

    for (std::size_t epoch = 1; epoch <= rc.max_epochs; ++epoch) {
        ClassEmbeddingTable mapped = map_embeddings(params, semantic_seen, rc.norm_eps);
        HubSet hubs = detect_hubs(mapped, rc.k1, static_cast<std::int64_t>(epoch));

        if (rc.recompute_ns_per_epoch) {
            DenseMatrix mapped_dist = class_distance_matrix(mapped.vectors);
            ns1 = top_k_neighbors(mapped_dist, rc.k1);
            ns2 = top_k_neighbors(mapped_dist, rc.k2);
        }
        double mapped_consistency =
            consistency(top_k_neighbors(class_distance_matrix(mapped.vectors), rc.k1), nv1);

        TripletBatch batch = mine_triplets(nv1, nv2, ns1, ns2, hubs, mine_rng,
                                           static_cast<std::int64_t>(epoch));

        if (batch.empty()) {
            // Every structure constraint is satisfied: the epoch objective is
            // an empty sum, i.e. loss 0.
            result.report.epochs.push_back({static_cast<std::int64_t>(epoch), 0,
                                            hubs.members.size(), 0.0, mapped_consistency});
            if (on_epoch) on_epoch(result.report.epochs.back());
            if (0.0 < best_loss - kMinDelta) {
                best_loss = 0.0;
                best_params = params;
                result.report.best_epoch = static_cast<std::int64_t>(epoch);
            }
            result.report.stop_reason = "structure converged";
            break;
        }

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < batch.size(); start += rc.batch_size) {
            std::size_t stop = std::min(start + rc.batch_size, batch.size());
            const double inv = 1.0 / static_cast<double>(stop - start);

            grads = MlpParams::zeros_like(params);
            for (std::size_t t = start; t < stop; ++t) {
                const Triplet& trip = batch.triplets[t];
                ForwardCache fa = forward(params, semantic_seen.vectors.row(trip.a), rc.norm_eps);
                ForwardCache fp = forward(params, semantic_seen.vectors.row(trip.p), rc.norm_eps);
                ForwardCache fn = forward(params, semantic_seen.vectors.row(trip.n), rc.norm_eps);
                loss_sum += backward_accumulate(params, fa, fp, fn, rc.alpha, rc.lambda, grads);
            }
            if (!std::isfinite(loss_sum)) {
                throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
            }
            if (rc.momentum > 0.0) {
                double mu = rc.momentum, lr = rc.lr;
                for_each_param(velocity, grads,
                               [mu, lr, inv](double& v, double g) { v = mu * v - lr * g * inv; });
                for_each_param(params, velocity, [](double& p, double v) { p += v; });
            } else {
                double lr = rc.lr;
                for_each_param(params, grads,
                               [lr, inv](double& p, double g) { p -= lr * g * inv; });
            }
        }

        double mean_loss = loss_sum / static_cast<double>(batch.size());
        result.report.epochs.push_back({static_cast<std::int64_t>(epoch), batch.size(),
                                        hubs.members.size(), mean_loss, mapped_consistency});
        if (on_epoch) on_epoch(result.report.epochs.back());

        if (mean_loss < best_loss - kMinDelta) {
            best_loss = mean_loss;
            best_params = params;  // end-of-epoch state
            result.report.best_epoch = static_cast<std::int64_t>(epoch);
            epochs_without_improvement = 0;
        } else {
            ++epochs_without_improvement;
            if (epochs_without_improvement >= rc.patience) {
                result.report.stop_reason = "loss plateau";
                break;
            }
        }
    }

    result.report.best_loss = std::isfinite(best_loss) ? best_loss : 0.0;
    result.params = std::move(best_params);
    return result;
}

}  // namespace vawe
