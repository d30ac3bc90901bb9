#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vawe/checkpoint.hpp"
#include "vawe/dataio.hpp"
#include "vawe/miner.hpp"
#include "vawe/zsl.hpp"

namespace py = pybind11;
using namespace vawe;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

DenseMatrix to_matrix(const Array& array) {
    auto buf = array.request();
    if (buf.ndim != 2) throw ShapeError("expected a 2-D float array");
    auto rows = static_cast<std::size_t>(buf.shape[0]);
    auto cols = static_cast<std::size_t>(buf.shape[1]);
    const double* ptr = static_cast<const double*>(buf.ptr);
    return DenseMatrix(rows, cols, std::vector<double>(ptr, ptr + rows * cols));
}

py::array_t<double> to_array(const DenseMatrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

ClassEmbeddingTable to_table(const Array& vectors, const std::vector<std::string>& names) {
    ClassEmbeddingTable t{names, to_matrix(vectors)};
    t.validate();
    return t;
}

NeighborLists lists_for(const Array& points, std::size_t k) {
    return top_k_neighbors(class_distance_matrix(to_matrix(points)), k);
}

py::dict report_to_dict(const TrainReport& report) {
    py::list epochs;
    for (const auto& row : report.epochs) {
        py::dict r;
        r["epoch"] = row.epoch;
        r["triplets"] = row.triplet_count;
        r["hubs"] = row.hub_count;
        r["mean_loss"] = row.mean_loss;
        r["consistency"] = row.mapped_consistency;
        epochs.append(r);
    }
    py::dict out;
    out["epochs"] = epochs;
    out["stop_reason"] = report.stop_reason;
    out["best_epoch"] = report.best_epoch;
    out["best_loss"] = report.best_loss;
    return out;
}

struct Model {
    MlpParams params;
    TrainConfig config;

    py::array_t<double> map(const Array& vectors) const {
        DenseMatrix input = to_matrix(vectors);
        ClassEmbeddingTable table;
        table.vectors = input;
        for (std::size_t i = 0; i < input.rows(); ++i) {
            table.class_names.push_back(std::to_string(i));
        }
        return to_array(map_embeddings(params, table, config.norm_eps).vectors);
    }

    void save(const std::string& path) const { save_checkpoint(params, config, path); }

    static Model load(const std::string& path) {
        auto [params, config] = load_checkpoint(path);
        return Model{std::move(params), config};
    }
};

py::dict eval_to_dict(const EvalReport& report) {
    py::dict out;
    out["mean_per_class_accuracy"] = report.mean_per_class_accuracy;
    out["overall_accuracy"] = report.overall_accuracy;
    out["samples"] = report.sample_count;
    py::dict per;
    for (const auto& [name, acc] : report.per_class_accuracy) per[name.c_str()] = acc;
    out["per_class_accuracy"] = per;
    return out;
}

}  // namespace

PYBIND11_MODULE(_vawe, m) {
    m.doc() = "Visually aligned word embeddings: triplet mining, mapping network, "
              "neighborhood consistency and zero-shot evaluators.";

    py::register_exception<Error>(m, "VaweError");

    py::class_<SynthConfig>(m, "SynthConfig")
        .def(py::init<>())
        .def_readwrite("num_classes", &SynthConfig::num_classes)
        .def_readwrite("images_per_class", &SynthConfig::images_per_class)
        .def_readwrite("visual_dim", &SynthConfig::visual_dim)
        .def_readwrite("semantic_dim", &SynthConfig::semantic_dim)
        .def_readwrite("noise_sigma", &SynthConfig::noise_sigma)
        .def_readwrite("discrepancy_rho", &SynthConfig::discrepancy_rho)
        .def_readwrite("seed", &SynthConfig::seed);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("k1", &TrainConfig::k1)
        .def_readwrite("k2", &TrainConfig::k2)
        .def_readwrite("alpha", &TrainConfig::alpha)
        .def_readwrite("lambda_", &TrainConfig::lambda)
        .def_readwrite("out_dim", &TrainConfig::out_dim)
        .def_readwrite("hidden1", &TrainConfig::hidden1)
        .def_readwrite("hidden2", &TrainConfig::hidden2)
        .def_readwrite("lr", &TrainConfig::lr)
        .def_readwrite("momentum", &TrainConfig::momentum)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("max_epochs", &TrainConfig::max_epochs)
        .def_readwrite("patience", &TrainConfig::patience)
        .def_readwrite("norm_eps", &TrainConfig::norm_eps)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("recompute_ns_per_epoch", &TrainConfig::recompute_ns_per_epoch);

    py::class_<Model>(m, "Model")
        .def("map", &Model::map, py::arg("vectors"),
             "Row-wise forward pass; returns unit-norm mapped vectors.")
        .def("save", &Model::save, py::arg("path"))
        .def_static("load", &Model::load, py::arg("path"));

    m.def(
        "generate_synthetic",
        [](const SynthConfig& cfg) {
            SynthData data = generate_synthetic(cfg);
            py::dict out;
            out["features"] = to_array(data.features.features);
            out["labels"] = data.features.class_labels;
            out["embeddings"] = to_array(data.embeddings.vectors);
            out["class_names"] = data.embeddings.class_names;
            out["signatures"] = to_array(data.signatures.signatures);
            return out;
        },
        py::arg("config"));

    m.def(
        "visual_signatures",
        [](const Array& features, const std::vector<std::string>& labels,
           const std::vector<std::string>& class_order) {
            LabeledFeatureSet set{labels, to_matrix(features)};
            set.validate();
            return to_array(visual_signatures(set, class_order).signatures);
        },
        py::arg("features"), py::arg("labels"), py::arg("class_order"));

    m.def(
        "top_k_neighbors",
        [](const Array& points, std::size_t k) {
            auto lists = lists_for(points, k);
            py::array_t<std::int64_t> out({lists.size(), k});
            auto* ptr = out.mutable_data();
            for (const auto& list : lists.lists) {
                for (std::size_t j : list) *ptr++ = static_cast<std::int64_t>(j);
            }
            return out;
        },
        py::arg("points"), py::arg("k"),
        "Top-k neighbor indices by Euclidean distance, ties toward lower index.");

    m.def(
        "consistency",
        [](const Array& points_a, const Array& points_b, std::size_t k) {
            return consistency(lists_for(points_a, k), lists_for(points_b, k));
        },
        py::arg("points_a"), py::arg("points_b"), py::arg("k"),
        "Average top-k neighborhood overlap between two point sets.");

    m.def(
        "detect_hubs",
        [](const Array& points, std::size_t k1) {
            DenseMatrix mat = to_matrix(points);
            ClassEmbeddingTable table;
            table.vectors = mat;
            for (std::size_t i = 0; i < mat.rows(); ++i) {
                table.class_names.push_back(std::to_string(i));
            }
            return detect_hubs(table, k1).members;
        },
        py::arg("points"), py::arg("k1"));

    m.def(
        "mine_triplets",
        [](const Array& visual_points, const Array& semantic_points, std::size_t k1,
           std::size_t k2, const std::vector<std::size_t>& hubs, std::uint64_t seed) {
            auto dist_v = class_distance_matrix(to_matrix(visual_points));
            auto dist_s = class_distance_matrix(to_matrix(semantic_points));
            HubSet hub_set;
            hub_set.members = hubs;
            std::sort(hub_set.members.begin(), hub_set.members.end());
            Rng rng(seed);
            TripletBatch batch =
                mine_triplets(top_k_neighbors(dist_v, k1), top_k_neighbors(dist_v, k2),
                              top_k_neighbors(dist_s, k1), top_k_neighbors(dist_s, k2),
                              hub_set, rng);
            py::array_t<std::int64_t> out({batch.size(), static_cast<std::size_t>(3)});
            auto* ptr = out.mutable_data();
            for (const auto& t : batch.triplets) {
                *ptr++ = static_cast<std::int64_t>(t.a);
                *ptr++ = static_cast<std::int64_t>(t.p);
                *ptr++ = static_cast<std::int64_t>(t.n);
            }
            return out;
        },
        py::arg("visual_points"), py::arg("semantic_points"), py::arg("k1"), py::arg("k2"),
        py::arg("hubs") = std::vector<std::size_t>{}, py::arg("seed") = 0,
        "One epoch of neighborhood-disagreement triplets, shuffled.");

    m.def(
        "train",
        [](const Array& semantic, const std::vector<std::string>& class_names,
           const Array& signatures, const TrainConfig& cfg) {
            ClassEmbeddingTable semantic_table = to_table(semantic, class_names);
            VisualSignatureTable signature_table{class_names, to_matrix(signatures)};
            TrainResult result = train(semantic_table, signature_table, cfg);
            return py::make_tuple(Model{std::move(result.params), result.report.config},
                                  report_to_dict(result.report));
        },
        py::arg("semantic"), py::arg("class_names"), py::arg("signatures"), py::arg("config"),
        "Train the mapping network on seen classes; returns (model, report).");

    m.def(
        "zsl_evaluate",
        [](const std::string& method, const Array& features_seen,
           const std::vector<std::string>& labels_seen, const Array& emb_seen,
           const std::vector<std::string>& seen_names, const Array& features_unseen,
           const std::vector<std::string>& labels_unseen, const Array& emb_unseen,
           const std::vector<std::string>& unseen_names, double gamma, double lam,
           std::size_t t_top, double temperature) {
            LabeledFeatureSet seen_set{labels_seen, to_matrix(features_seen)};
            seen_set.validate();
            LabeledFeatureSet unseen_set{labels_unseen, to_matrix(features_unseen)};
            unseen_set.validate();
            auto emb_seen_table = to_table(emb_seen, seen_names);
            auto emb_unseen_table = to_table(emb_unseen, unseen_names);

            if (method == "eszsl") {
                EszslModel model = eszsl_fit(seen_set, emb_seen_table, gamma, lam);
                return eval_to_dict(evaluate(model, unseen_set, emb_unseen_table));
            }
            if (method == "conse") {
                auto sigs = visual_signatures(seen_set, seen_names);
                std::size_t top = t_top == 0 ? std::min<std::size_t>(10, seen_names.size()) : t_top;
                ConseModel model(std::move(sigs), emb_seen_table, top, temperature);
                return eval_to_dict(evaluate(model, unseen_set, emb_unseen_table));
            }
            throw UsageError("unknown method '" + method + "'");
        },
        py::arg("method"), py::arg("features_seen"), py::arg("labels_seen"), py::arg("emb_seen"),
        py::arg("seen_names"), py::arg("features_unseen"), py::arg("labels_unseen"),
        py::arg("emb_unseen"), py::arg("unseen_names"), py::arg("gamma") = 1.0,
        py::arg("lam") = 1.0, py::arg("t_top") = 0, py::arg("temperature") = 1.0,
        "Fit a zero-shot scorer on seen classes and report unseen accuracy.");

    m.def(
        "load_embeddings",
        [](const std::string& path) {
            auto table = load_embeddings(path);
            return py::make_tuple(table.class_names, to_array(table.vectors));
        },
        py::arg("path"));

    m.def(
        "save_embeddings",
        [](const std::vector<std::string>& names, const Array& vectors, const std::string& path) {
            save_embeddings(to_table(vectors, names), path);
        },
        py::arg("class_names"), py::arg("vectors"), py::arg("path"));
}
