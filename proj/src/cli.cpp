#include "vawe/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>

#include "vawe/checkpoint.hpp"
#include "vawe/dataio.hpp"
#include "vawe/zsl.hpp"

namespace vawe {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage:
        case ErrorKind::Config:
            return 2;
        case ErrorKind::Parse:
        case ErrorKind::Checkpoint:
        case ErrorKind::Io:
            return 3;
        case ErrorKind::Numeric:
        case ErrorKind::Divergence:
            return 4;
        case ErrorKind::Shape:
        case ErrorKind::Protocol:
            return 5;
    }
    return 1;
}

void emit_report(const json& report, const std::string& out_path) {
    std::string text = report.dump(2);
    text.push_back('\n');
    std::cout << text;
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw IoError("cannot write '" + out_path + "'");
        out << text;
        if (!out) throw IoError("write failed for '" + out_path + "'");
    }
}

// Seen/unseen names in the canonical (embedding-table) row order.
std::vector<std::string> names_in_table_order(const ClassEmbeddingTable& table,
                                              const std::vector<std::string>& members) {
    std::vector<std::string> out;
    for (const auto& name : table.class_names) {
        if (std::find(members.begin(), members.end(), name) != members.end()) {
            out.push_back(name);
        }
    }
    if (out.size() != members.size()) {
        for (const auto& name : members) {
            if (std::find(table.class_names.begin(), table.class_names.end(), name) ==
                table.class_names.end()) {
                throw ProtocolError("split class '" + name + "' not in the embedding table");
            }
        }
    }
    return out;
}

void check_same_class_sets(const ClassEmbeddingTable& embeddings,
                           const LabeledFeatureSet& features) {
    std::set<std::string> emb(embeddings.class_names.begin(), embeddings.class_names.end());
    std::set<std::string> feat(features.class_labels.begin(), features.class_labels.end());
    if (emb != feat) {
        throw ProtocolError("class sets differ between the embedding and feature files");
    }
}

double consistency_between(const ClassEmbeddingTable& embeddings,
                           const VisualSignatureTable& signatures, std::size_t k) {
    if (embeddings.class_names != signatures.class_names) {
        throw ProtocolError("embedding and signature tables disagree on class order");
    }
    auto ns = top_k_neighbors(class_distance_matrix(embeddings.vectors), k);
    auto nv = top_k_neighbors(class_distance_matrix(signatures.signatures), k);
    return consistency(nv, ns);
}

struct TrainFlags {
    TrainConfig cfg;
    void attach(CLI::App* cmd) {
        cmd->add_option("--k1", cfg.k1, "visual/semantic neighborhood size");
        cmd->add_option("--k2", cfg.k2, "relaxed neighborhood size (0 = half the seen classes)");
        cmd->add_option("--alpha", cfg.alpha, "triplet margin");
        cmd->add_option("--lambda", cfg.lambda, "weight decay coefficient");
        cmd->add_option("--out-dim", cfg.out_dim, "mapped embedding dimension");
        cmd->add_option("--hidden1", cfg.hidden1, "first hidden width (0 = 2x input dim)");
        cmd->add_option("--hidden2", cfg.hidden2, "second hidden width (0 = 2x input dim)");
        cmd->add_option("--lr", cfg.lr, "SGD learning rate");
        cmd->add_option("--momentum", cfg.momentum, "SGD momentum (0 = plain SGD)");
        cmd->add_option("--batch-size", cfg.batch_size, "mini-batch size");
        cmd->add_option("--max-epochs", cfg.max_epochs, "epoch cap");
        cmd->add_option("--patience", cfg.patience, "epochs without improvement before stopping");
        cmd->add_option("--norm-eps", cfg.norm_eps, "normalization guard");
        cmd->add_flag("--recompute-ns", cfg.recompute_ns_per_epoch,
                      "re-derive semantic neighborhoods from the mapped embeddings each epoch");
    }
};

json train_config_json(const TrainConfig& c) {
    json j;
    j["k1"] = c.k1;
    j["k2"] = c.k2;
    j["alpha"] = c.alpha;
    j["lambda"] = c.lambda;
    j["out_dim"] = c.out_dim;
    j["hidden1"] = c.hidden1;
    j["hidden2"] = c.hidden2;
    j["lr"] = c.lr;
    j["momentum"] = c.momentum;
    j["batch_size"] = c.batch_size;
    j["max_epochs"] = c.max_epochs;
    j["patience"] = c.patience;
    j["norm_eps"] = c.norm_eps;
    j["seed"] = c.seed;
    j["recompute_ns_per_epoch"] = c.recompute_ns_per_epoch;
    return j;
}

json epoch_json(const EpochRecord& row) {
    json j;
    j["epoch"] = row.epoch;
    j["triplets"] = row.triplet_count;
    j["hubs"] = row.hub_count;
    j["mean_loss"] = row.mean_loss;
    j["consistency"] = row.mapped_consistency;
    return j;
}

json eval_json(const EvalReport& report) {
    json j;
    j["mean_per_class_accuracy"] = report.mean_per_class_accuracy;
    j["overall_accuracy"] = report.overall_accuracy;
    j["samples"] = report.sample_count;
    json per;
    for (const auto& [name, acc] : report.per_class_accuracy) per[name] = acc;
    j["per_class_accuracy"] = per;
    return j;
}

void write_train_report_jsonl(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (const auto& row : report.epochs) out << epoch_json(row).dump() << '\n';
    json summary;
    summary["stop_reason"] = report.stop_reason;
    summary["best_epoch"] = report.best_epoch;
    summary["best_loss"] = report.best_loss;
    summary["config"] = train_config_json(report.config);
    out << summary.dump() << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

struct ZslFlags {
    double gamma = 1.0;
    double lam = 1.0;
    std::string y_encoding = "pm1";
    std::size_t t_top = 0;  // 0 = min(10, #seen)
    double temperature = 1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--gamma", gamma, "ESZSL feature-side regularizer");
        cmd->add_option("--lam", lam, "ESZSL embedding-side regularizer");
        cmd->add_option("--y-encoding", y_encoding, "ESZSL ground-truth encoding: pm1 | 01")
            ->check(CLI::IsMember({"pm1", "01"}));
        cmd->add_option("--t-top", t_top, "ConSE: seen classes in the combination (0 = min(10, seen))");
        cmd->add_option("--temperature", temperature, "ConSE: posterior softmax temperature");
    }

    LabelEncoding encoding() const {
        return y_encoding == "01" ? LabelEncoding::ZeroOne : LabelEncoding::PlusMinusOne;
    }
    std::size_t resolved_t_top(std::size_t num_seen) const {
        return t_top == 0 ? std::min<std::size_t>(10, num_seen) : t_top;
    }

    json to_json() const {
        json j;
        j["gamma"] = gamma;
        j["lam"] = lam;
        j["y_encoding"] = y_encoding;
        j["t_top"] = t_top;
        j["temperature"] = temperature;
        return j;
    }
};

EvalReport run_eval(const std::string& method, const ClassEmbeddingTable& embeddings,
                    const LabeledFeatureSet& features, const ZslSplit& split,
                    const ZslFlags& flags) {
    auto seen_names = names_in_table_order(embeddings, split.seen);
    auto unseen_names = names_in_table_order(embeddings, split.unseen);
    auto emb_seen = embeddings.restricted_to(seen_names);
    auto emb_unseen = embeddings.restricted_to(unseen_names);
    auto feat_seen = features.restricted_to(seen_names);
    auto feat_unseen = features.restricted_to(unseen_names);
    if (feat_unseen.size() == 0) throw ProtocolError("no feature rows for unseen classes");

    if (method == "eszsl") {
        EszslModel model = eszsl_fit(feat_seen, emb_seen, flags.gamma, flags.lam, flags.encoding());
        return evaluate(model, feat_unseen, emb_unseen);
    }
    if (method == "conse") {
        auto sigs = visual_signatures(feat_seen, seen_names);
        ConseModel model(std::move(sigs), emb_seen, flags.resolved_t_top(seen_names.size()),
                         flags.temperature);
        return evaluate(model, feat_unseen, emb_unseen);
    }
    throw UsageError("unknown method '" + method + "' (expected eszsl or conse)");
}

// ---- subcommand bodies -----------------------------------------------------

struct SynthArgs {
    SynthConfig cfg;
    std::size_t num_unseen = 0;  // 0 = num_classes / 4
    std::string out_dir = ".";
};

void attach_synth_flags(CLI::App* cmd, SynthArgs& args) {
    cmd->add_option("--num-classes", args.cfg.num_classes, "number of classes (>= 4)");
    cmd->add_option("--images-per-class", args.cfg.images_per_class, "feature rows per class");
    cmd->add_option("--visual-dim", args.cfg.visual_dim, "visual feature dimension");
    cmd->add_option("--semantic-dim", args.cfg.semantic_dim, "semantic embedding dimension");
    cmd->add_option("--noise-sigma", args.cfg.noise_sigma, "within-class visual spread");
    cmd->add_option("--discrepancy-rho", args.cfg.discrepancy_rho,
                    "weight of the random semantic component");
    cmd->add_option("--num-unseen", args.num_unseen, "unseen classes (0 = quarter of the classes)");
}

ZslSplit make_synth_split(const SynthData& data, std::size_t num_unseen) {
    std::size_t c = data.embeddings.size();
    if (num_unseen == 0) num_unseen = std::max<std::size_t>(1, c / 4);
    if (num_unseen >= c) throw ConfigError("num_unseen must leave at least one seen class");
    ZslSplit split;
    for (std::size_t i = 0; i < c - num_unseen; ++i) {
        split.seen.push_back(data.embeddings.class_names[i]);
    }
    for (std::size_t i = c - num_unseen; i < c; ++i) {
        split.unseen.push_back(data.embeddings.class_names[i]);
    }
    return split;
}

void write_synth(const SynthData& data, const ZslSplit& split, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    save_features(data.features, dir / "features.txt");
    save_embeddings(data.embeddings, dir / "embeddings.txt");
    save_signatures(data.signatures, dir / "signatures.txt");
    save_split(split, dir / "split.txt");
}

int cmd_synth(const SynthArgs& args) {
    SynthData data = generate_synthetic(args.cfg);
    ZslSplit split = make_synth_split(data, args.num_unseen);
    write_synth(data, split, args.out_dir);
    json report;
    report["schema_version"] = kSchemaVersion;
    report["command"] = "synth";
    report["out_dir"] = args.out_dir;
    report["config"] = {{"num_classes", args.cfg.num_classes},
                        {"images_per_class", args.cfg.images_per_class},
                        {"visual_dim", args.cfg.visual_dim},
                        {"semantic_dim", args.cfg.semantic_dim},
                        {"noise_sigma", args.cfg.noise_sigma},
                        {"discrepancy_rho", args.cfg.discrepancy_rho},
                        {"num_unseen", split.unseen.size()},
                        {"seed", args.cfg.seed}};
    emit_report(report, "");
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Visually aligned word embeddings: mine neighborhood-disagreement "
                 "triplets, train the mapping network, and evaluate zero-shot transfer"};
    app.require_subcommand(1);
    std::uint64_t seed = 1;
    app.add_option("--seed", seed, "seed for every random draw")->capture_default_str();

    // synth
    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    attach_synth_flags(synth, synth_args);
    synth->add_option("--out-dir", synth_args.out_dir, "output directory");

    // consistency
    std::string emb_path, feat_path, split_path, checkpoint_path, out_path, report_path;
    std::size_t k = 10;
    auto* cons = app.add_subcommand("consistency",
                                    "neighborhood overlap between semantic and visual spaces");
    cons->add_option("--embeddings", emb_path, "embedding file")->required();
    cons->add_option("--features", feat_path, "feature file")->required();
    cons->add_option("--k", k, "neighborhood size");
    cons->add_option("--report-out", report_path, "also write the JSON report here");

    // mine
    TrainFlags mine_train;
    auto* mine = app.add_subcommand("mine", "dump one epoch of selected triplets");
    mine->add_option("--embeddings", emb_path, "embedding file")->required();
    mine->add_option("--features", feat_path, "feature file")->required();
    mine->add_option("--split", split_path, "restrict to the split's seen classes");
    mine->add_option("--checkpoint", checkpoint_path,
                     "derive the hub set from this checkpoint's mapped embeddings");
    mine_train.attach(mine);

    // train
    TrainFlags train_flags;
    bool verbose = false;
    auto* train_cmd = app.add_subcommand("train", "train the mapping network on seen classes");
    train_cmd->add_option("--embeddings", emb_path, "embedding file")->required();
    train_cmd->add_option("--features", feat_path, "feature file")->required();
    train_cmd->add_option("--split", split_path, "split file")->required();
    train_cmd->add_option("--checkpoint-out", checkpoint_path, "checkpoint output path")->required();
    train_cmd->add_option("--report-out", report_path, "JSON-lines report output path");
    train_cmd->add_flag("--verbose", verbose, "stream per-epoch rows to stderr");
    train_flags.attach(train_cmd);

    // map
    auto* map_cmd = app.add_subcommand("map", "map an embedding table through a checkpoint");
    map_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    map_cmd->add_option("--embeddings", emb_path, "embedding file")->required();
    map_cmd->add_option("--out", out_path, "mapped embedding output path")->required();

    // zsl-eval
    std::string method;
    ZslFlags zsl_flags;
    auto* eval_cmd = app.add_subcommand("zsl-eval", "fit on seen classes, evaluate on unseen");
    eval_cmd->add_option("--method", method, "eszsl | conse")->required();
    eval_cmd->add_option("--embeddings", emb_path, "embedding file")->required();
    eval_cmd->add_option("--features", feat_path, "feature file")->required();
    eval_cmd->add_option("--split", split_path, "split file")->required();
    eval_cmd->add_option("--report-out", report_path, "also write the JSON report here");
    zsl_flags.attach(eval_cmd);

    // pipeline
    SynthArgs pipe_synth;
    TrainFlags pipe_train;
    ZslFlags pipe_zsl;
    std::string workdir;
    auto* pipe = app.add_subcommand(
        "pipeline", "synth -> consistency -> train -> map -> consistency -> zsl-eval");
    pipe->add_option("--workdir", workdir, "directory for intermediate files")->required();
    pipe->add_option("--embeddings", emb_path, "use this embedding file instead of synth");
    pipe->add_option("--features", feat_path, "use this feature file instead of synth");
    pipe->add_option("--split", split_path, "use this split file instead of synth");
    pipe->add_option("--report-out", report_path, "also write the combined report here");
    pipe->add_option("--k", k, "neighborhood size for the consistency stages");
    attach_synth_flags(pipe, pipe_synth);
    pipe_train.attach(pipe);
    pipe_zsl.attach(pipe);

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            throw UsageError(e.what());
        }

        if (synth->parsed()) {
            synth_args.cfg.seed = seed;
            return cmd_synth(synth_args);
        }

        if (cons->parsed()) {
            auto embeddings = load_embeddings(emb_path);
            auto features = load_features(feat_path);
            check_same_class_sets(embeddings, features);
            auto signatures = visual_signatures(features, embeddings.class_names);
            double value = consistency_between(embeddings, signatures, k);
            json report;
            report["schema_version"] = kSchemaVersion;
            report["command"] = "consistency";
            report["config"] = {{"embeddings", emb_path}, {"features", feat_path}, {"k", k}};
            report["consistency"] = value;
            emit_report(report, report_path);
            return 0;
        }

        if (mine->parsed()) {
            auto embeddings = load_embeddings(emb_path);
            auto features = load_features(feat_path);
            if (!split_path.empty()) {
                auto split = load_split(split_path);
                auto seen_names = names_in_table_order(embeddings, split.seen);
                embeddings = embeddings.restricted_to(seen_names);
            }
            auto signatures = visual_signatures(features, embeddings.class_names);
            TrainConfig rc = mine_train.cfg;
            rc.seed = seed;
            rc = rc.resolved(embeddings.size(), embeddings.dim());

            auto visual_dist = class_distance_matrix(signatures.signatures);
            auto nv1 = top_k_neighbors(visual_dist, rc.k1);
            auto nv2 = top_k_neighbors(visual_dist, rc.k2);
            auto semantic_dist = class_distance_matrix(embeddings.vectors);
            auto ns1 = top_k_neighbors(semantic_dist, rc.k1);
            auto ns2 = top_k_neighbors(semantic_dist, rc.k2);

            HubSet hubs;
            if (!checkpoint_path.empty()) {
                auto [params, ckpt_cfg] = load_checkpoint(checkpoint_path);
                auto mapped = map_embeddings(params, embeddings, ckpt_cfg.norm_eps);
                hubs = detect_hubs(mapped, rc.k1);
            }
            Rng rng(seed);
            TripletBatch batch = mine_triplets(nv1, nv2, ns1, ns2, hubs, rng);
            for (const Triplet& t : batch.triplets) {
                std::cout << t.a << ' ' << t.p << ' ' << t.n << '\n';
            }
            return 0;
        }

        if (train_cmd->parsed()) {
            auto embeddings = load_embeddings(emb_path);
            auto features = load_features(feat_path);
            auto split = load_split(split_path);
            auto seen_names = names_in_table_order(embeddings, split.seen);
            auto semantic_seen = embeddings.restricted_to(seen_names);
            auto signatures_seen = visual_signatures(features, seen_names);

            TrainConfig cfg = train_flags.cfg;
            cfg.seed = seed;
            EpochCallback on_epoch = nullptr;
            if (verbose) {
                on_epoch = [](const EpochRecord& row) {
                    std::cerr << epoch_json(row).dump() << '\n';
                };
            }
            TrainResult result = train(semantic_seen, signatures_seen, cfg, on_epoch);
            save_checkpoint(result.params, result.report.config, checkpoint_path);
            if (!report_path.empty()) write_train_report_jsonl(result.report, report_path);

            json report;
            report["schema_version"] = kSchemaVersion;
            report["command"] = "train";
            report["stop_reason"] = result.report.stop_reason;
            report["epochs"] = result.report.epochs.size();
            report["best_epoch"] = result.report.best_epoch;
            report["best_loss"] = result.report.best_loss;
            report["checkpoint"] = checkpoint_path;
            report["config"] = train_config_json(result.report.config);
            emit_report(report, "");
            return 0;
        }

        if (map_cmd->parsed()) {
            auto [params, ckpt_cfg] = load_checkpoint(checkpoint_path);
            auto embeddings = load_embeddings(emb_path);
            auto mapped = map_embeddings(params, embeddings, ckpt_cfg.norm_eps);
            save_embeddings(mapped, out_path);
            return 0;
        }

        if (eval_cmd->parsed()) {
            auto embeddings = load_embeddings(emb_path);
            auto features = load_features(feat_path);
            auto split = load_split(split_path);
            EvalReport eval = run_eval(method, embeddings, features, split, zsl_flags);
            json report;
            report["schema_version"] = kSchemaVersion;
            report["command"] = "zsl-eval";
            report["method"] = method;
            report["config"] = zsl_flags.to_json();
            report["config"]["embeddings"] = emb_path;
            report["config"]["features"] = feat_path;
            report["config"]["split"] = split_path;
            report["metrics"] = eval_json(eval);
            emit_report(report, report_path);
            return 0;
        }

        if (pipe->parsed()) {
            fs::path dir(workdir);
            std::error_code ec;
            fs::create_directories(dir, ec);

            ClassEmbeddingTable embeddings;
            LabeledFeatureSet features;
            ZslSplit split;
            if (!emb_path.empty() || !feat_path.empty() || !split_path.empty()) {
                if (emb_path.empty() || feat_path.empty() || split_path.empty()) {
                    throw UsageError("pipeline needs all of --embeddings/--features/--split "
                                     "or none of them");
                }
                embeddings = load_embeddings(emb_path);
                features = load_features(feat_path);
                split = load_split(split_path);
            } else {
                pipe_synth.cfg.seed = seed;
                SynthData data = generate_synthetic(pipe_synth.cfg);
                split = make_synth_split(data, pipe_synth.num_unseen);
                write_synth(data, split, dir);
                embeddings = std::move(data.embeddings);
                features = std::move(data.features);
            }

            auto signatures = visual_signatures(features, embeddings.class_names);
            double consistency_raw = consistency_between(embeddings, signatures, k);

            auto seen_names = names_in_table_order(embeddings, split.seen);
            auto semantic_seen = embeddings.restricted_to(seen_names);
            auto signatures_seen = signatures.restricted_to(seen_names);
            TrainConfig cfg = pipe_train.cfg;
            cfg.seed = seed;
            TrainResult result = train(semantic_seen, signatures_seen, cfg);
            save_checkpoint(result.params, result.report.config, (dir / "checkpoint.bin").string());
            write_train_report_jsonl(result.report, (dir / "train_report.jsonl").string());

            auto mapped = map_embeddings(result.params, embeddings, result.report.config.norm_eps);
            save_embeddings(mapped, (dir / "vawe_embeddings.txt").string());
            double consistency_vawe = consistency_between(mapped, signatures, k);

            json accuracy;
            for (const std::string& m : {std::string("eszsl"), std::string("conse")}) {
                EvalReport raw = run_eval(m, embeddings, features, split, pipe_zsl);
                EvalReport vawe = run_eval(m, mapped, features, split, pipe_zsl);
                accuracy[m] = {{"raw", eval_json(raw)}, {"vawe", eval_json(vawe)}};
            }

            json report;
            report["schema_version"] = kSchemaVersion;
            report["command"] = "pipeline";
            json config;
            config["seed"] = seed;
            config["k"] = k;
            config["synth"] = {{"num_classes", pipe_synth.cfg.num_classes},
                               {"images_per_class", pipe_synth.cfg.images_per_class},
                               {"visual_dim", pipe_synth.cfg.visual_dim},
                               {"semantic_dim", pipe_synth.cfg.semantic_dim},
                               {"noise_sigma", pipe_synth.cfg.noise_sigma},
                               {"discrepancy_rho", pipe_synth.cfg.discrepancy_rho},
                               {"num_unseen", pipe_synth.num_unseen}};
            config["train"] = train_config_json(result.report.config);
            config["zsl"] = pipe_zsl.to_json();
            config["inputs"] = {{"embeddings", emb_path}, {"features", feat_path},
                                {"split", split_path}, {"workdir", workdir}};
            report["config"] = config;
            report["consistency"] = {{"raw", consistency_raw}, {"vawe", consistency_vawe}};
            report["train"] = {{"stop_reason", result.report.stop_reason},
                               {"epochs", result.report.epochs.size()},
                               {"best_epoch", result.report.best_epoch},
                               {"best_loss", result.report.best_loss}};
            report["accuracy"] = accuracy;
            emit_report(report, report_path);
            return 0;
        }

        throw UsageError("no subcommand given");
    } catch (const Error& e) {
        json err;
        err["error"] = error_category(e.kind());
        err["message"] = e.what();
        std::cerr << err.dump() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        json err;
        err["error"] = "internal";
        err["message"] = e.what();
        std::cerr << err.dump() << '\n';
        return 1;
    }
}

}  // namespace vawe
