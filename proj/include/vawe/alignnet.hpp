#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vawe/miner.hpp"
#include "vawe/neighborhood.hpp"
#include "vawe/tables.hpp"

namespace vawe {

// Weights of the mapping network: two ReLU hidden layers and a linear
// output layer whose result is L2-normalized onto the unit hypersphere.
// Also used as the gradient carrier (same shapes).
struct MlpParams {
    DenseMatrix w1;  // hidden1 x input
    DenseMatrix w2;  // hidden2 x hidden1
    DenseMatrix w3;  // out x hidden2
    std::vector<double> b1, b2, b3;

    std::size_t input_dim() const { return w1.cols(); }
    std::size_t hidden1() const { return w1.rows(); }
    std::size_t hidden2() const { return w2.rows(); }
    std::size_t output_dim() const { return w3.rows(); }

    // He-style scaled uniform init (variance 2/fan_in), zero biases.
    static MlpParams init(std::size_t input, std::size_t hidden1, std::size_t hidden2,
                          std::size_t output, Rng& rng);

    static MlpParams zeros_like(const MlpParams& shape);

    bool operator==(const MlpParams&) const = default;
};

struct TrainConfig {
    std::size_t k1 = 10;
    std::size_t k2 = 0;  // 0 = auto: floor(num_seen/2), capped at num_seen-1
    double alpha = 1.0;
    double lambda = 1e-4;
    std::size_t out_dim = 128;
    std::size_t hidden1 = 0;  // 0 = auto: 2 * input dim
    std::size_t hidden2 = 0;
    double lr = 0.01;
    double momentum = 0.0;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 250;
    std::size_t patience = 10;
    double norm_eps = 1e-12;
    std::uint64_t seed = 0;
    bool recompute_ns_per_epoch = false;

    // Fills the auto fields from the data dimensions and validates.
    TrainConfig resolved(std::size_t num_seen, std::size_t input_dim) const;

    bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
    std::int64_t epoch;
    std::size_t triplet_count;
    std::size_t hub_count;
    double mean_loss;
    double mapped_consistency;  // mapped vs visual structure at k1, epoch start
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::string stop_reason;  // "structure converged" | "loss plateau" | "max epochs"
    std::int64_t best_epoch = 0;
    double best_loss = 0.0;
    TrainConfig config;  // resolved values actually used
};

struct TrainResult {
    MlpParams params;  // state at the end of the best-loss epoch
    TrainReport report;
};

struct ForwardCache {
    std::vector<double> input;
    std::vector<double> z1, h1;  // pre/post first ReLU
    std::vector<double> z2, h2;
    std::vector<double> z3;  // pre-normalization output
    std::vector<double> y;   // normalized output
    double prenorm = 0.0;    // ||z3||
    double scale = 0.0;      // max(prenorm, eps)
};

// y = l2_normalize(w3 relu(w2 relu(w1 s + b1) + b2) + b3, eps).
ForwardCache forward(const MlpParams& params, std::span<const double> input, double eps);

// max(0, ||ya-yp||^2 - ||ya-yn||^2 + alpha)
double triplet_loss(std::span<const double> ya, std::span<const double> yp,
                    std::span<const double> yn, double alpha);

// Gradient of triplet_loss + lambda * ||params||^2 with respect to every
// weight and bias. The hinge subgradient is zero when the hinge argument
// is <= 0; normalization is backpropagated through its exact Jacobian
// (I - y y^T) / ||z||.
MlpParams backward(const MlpParams& params, const ForwardCache& anchor,
                   const ForwardCache& positive, const ForwardCache& negative,
                   double alpha, double lambda);

// Same, accumulating into `grads`. Returns the triplet loss value.
double backward_accumulate(const MlpParams& params, const ForwardCache& anchor,
                           const ForwardCache& positive, const ForwardCache& negative,
                           double alpha, double lambda, MlpParams& grads);

// Row-wise forward of a whole table; class order preserved.
ClassEmbeddingTable map_embeddings(const MlpParams& params, const ClassEmbeddingTable& table,
                                   double eps = 1e-12);

// SGD over per-epoch re-mined triplets with per-epoch hub refresh. Stops on
// an empty triplet batch ("structure converged"), a patience-long loss
// plateau, or max_epochs. Returns the parameters of the best-mean-loss
// epoch; an empty-batch epoch records mean loss 0 (all structure
// constraints satisfied).
using EpochCallback = std::function<void(const EpochRecord&)>;
TrainResult train(const ClassEmbeddingTable& semantic_seen,
                  const VisualSignatureTable& signatures_seen, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = nullptr);

}  // namespace vawe
