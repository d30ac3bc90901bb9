// Acceptance gate: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Runs against the library directly except where the CLI
// binary itself is the contract (determinism).

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "test_util.hpp"
#include "vawe/checkpoint.hpp"
#include "vawe/dataio.hpp"
#include "vawe/miner.hpp"
#include "vawe/zsl.hpp"

using namespace vawe;
namespace tu = vawe::testutil;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int precision = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness
Outcome criterion_gradients() {
    auto start = std::chrono::steady_clock::now();
    Rng rng(2024);
    double worst = 0.0;
    const int draws = 24;
    for (int i = 0; i < draws; ++i) {
        tu::TripletDraw d = tu::draw_checkable(rng, 1.0, 1e-12);
        double lambda = (i % 2 == 0) ? 0.0 : rng.uniform(1e-5, 1e-2);
        auto r = tu::gradient_check(d.params, d.a, d.p, d.n, 1.0, lambda, 1e-12);
        worst = std::max({worst, r.max_component_rel, r.normwise_rel});
    }
    double elapsed = seconds_since(start);
    bool pass = worst < 1e-6 && elapsed < 5.0;
    std::ostringstream detail;
    detail << draws << " active-hinge draws, max rel err " << worst << ", " << fmt(elapsed, 2)
           << "s";
    return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// 2. Miner oracle equivalence
Outcome criterion_miner() {
    auto start = std::chrono::steady_clock::now();
    Rng rng(7);
    int instances = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t c = 8 + rng.uniform_int(13);           // 8..20
        std::size_t k1 = 1 + rng.uniform_int(4);           // 1..4
        std::size_t k2 = k1 + 1 + rng.uniform_int(5);      // k1+1..k1+5 (<= 9)
        if (k2 > std::min<std::size_t>(9, c - 1)) k2 = std::min<std::size_t>(9, c - 1);
        if (k2 <= k1) {
            --trial;
            continue;
        }
        DenseMatrix vis = tu::random_gaussian(c, 5, rng);
        DenseMatrix sem = tu::random_gaussian(c, 4, rng);
        auto dist_v = class_distance_matrix(vis);
        auto dist_s = class_distance_matrix(sem);

        HubSet hubs;
        std::set<std::size_t> hub_set;
        if (trial % 3 == 1) {
            // two forced hubs
            hubs.members = {0, c / 2};
            hub_set = {0, c / 2};
        } else if (trial % 3 == 2) {
            for (std::size_t j = 0; j < c; ++j) {
                if (rng.uniform() < 0.2) {
                    hubs.members.push_back(j);
                    hub_set.insert(j);
                }
            }
        }
        auto batch = mine_triplets(top_k_neighbors(dist_v, k1), top_k_neighbors(dist_v, k2),
                                   top_k_neighbors(dist_s, k1), top_k_neighbors(dist_s, k2),
                                   hubs, rng);
        tu::TripletSet got;
        for (const auto& t : batch.triplets) got.insert({t.a, t.p, t.n});
        if (got != tu::mine_oracle(dist_v, dist_s, k1, k2, hub_set)) {
            return {false, "mismatch at instance " + std::to_string(trial)};
        }
        ++instances;
    }
    double elapsed = seconds_since(start);
    bool pass = instances == 100 && elapsed < 10.0;
    return {pass, "100 random instances (hub paths included), " + fmt(elapsed, 2) + "s"};
}

// ---------------------------------------------------------------------------
// 3. Consistency metric exactness
Outcome criterion_consistency() {
    Rng rng(5);
    DenseMatrix rows = tu::random_gaussian(12, 6, rng);
    auto lists = top_k_neighbors(class_distance_matrix(rows), 10);
    double self = consistency(lists, lists);
    if (self != 10.0) return {false, "identical spaces gave " + fmt(self, 6)};

    NeighborLists nv, ns;
    nv.k = ns.k = 3;
    for (std::size_t i = 0; i < 8; ++i) {
        // indices over 20 imaginary classes; per class the two sides disjoint
        nv.lists.push_back({8, 9, 10});
        ns.lists.push_back({11, 12, 13});
    }
    double disjoint = consistency(nv, ns);
    if (disjoint != 0.0) return {false, "disjoint construction gave " + fmt(disjoint, 6)};
    return {true, "identical spaces = 10.00 at K=10, disjoint = 0"};
}

// ---------------------------------------------------------------------------
// 4. Hub detection
Outcome criterion_hubs() {
    DenseMatrix pts(6, 2, {0, 0, 10, 0, 10, 1, -10, 0.5, -10, 1.5, -4, -9});
    ClassEmbeddingTable table;
    table.vectors = pts;
    for (int i = 0; i < 6; ++i) table.class_names.push_back("c" + std::to_string(i));
    auto hubs = detect_hubs(table, 2);
    if (hubs.members != std::vector<std::size_t>{0}) {
        return {false, "star instance flagged " + std::to_string(hubs.members.size()) + " hubs"};
    }

    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t c = 5 + rng.uniform_int(12);
        std::size_t k1 = 1 + rng.uniform_int(c - 1);
        auto lists = top_k_neighbors(class_distance_matrix(tu::random_gaussian(c, 4, rng)), k1);
        std::size_t total = 0;
        for (auto v : hub_counts(lists)) total += v;
        if (total != c * k1) {
            return {false, "hub count mass " + std::to_string(total) + " != C*k1"};
        }
    }
    return {true, "star center flagged exactly; count mass C*k1 on 25 random instances"};
}

// ---------------------------------------------------------------------------
// 5. ESZSL stationarity
Outcome criterion_eszsl() {
    Rng rng(3);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t z = 5 + rng.uniform_int(11);        // <= 15
        std::size_t dv = 8 + rng.uniform_int(25);       // <= 32
        std::size_t m = std::min<std::size_t>(200, z * (3 + rng.uniform_int(10)));
        double gamma = rng.uniform(0.5, 2.0);
        double lam = rng.uniform(0.5, 2.0);

        ClassEmbeddingTable emb;
        emb.vectors = tu::random_gaussian(z, 6, rng);
        for (std::size_t i = 0; i < z; ++i) emb.class_names.push_back("c" + std::to_string(i));
        LabeledFeatureSet feats;
        feats.features = tu::random_gaussian(m, dv, rng);
        for (std::size_t r = 0; r < m; ++r) {
            feats.class_labels.push_back("c" + std::to_string(r % z));
        }
        EszslModel model = eszsl_fit(feats, emb, gamma, lam);
        worst = std::max(worst, tu::eszsl_stationarity_residual(feats, emb, model.v(), gamma, lam));
    }
    return {worst < 1e-8, "20 instances (m<=200, d_v<=32, z<=15), max gradient norm " +
                               fmt(worst, 12)};
}

// ---------------------------------------------------------------------------
// 6. End-to-end desk-scale reproduction
struct SeedRun {
    double rho, craw, cvawe;
    double eszsl_raw, eszsl_vawe, conse_raw, conse_vawe;
    std::string stop;
    std::size_t epochs;
};

double raw_consistency_at(const SynthConfig& cfg, std::size_t k) {
    auto data = generate_synthetic(cfg);
    auto nv = top_k_neighbors(class_distance_matrix(data.signatures.signatures), k);
    auto ns = top_k_neighbors(class_distance_matrix(data.embeddings.vectors), k);
    return consistency(nv, ns);
}

SeedRun run_seed(std::uint64_t seed) {
    const std::size_t k = 10;
    SynthConfig cfg;
    cfg.num_classes = 40;
    cfg.images_per_class = 25;
    cfg.visual_dim = 32;
    cfg.semantic_dim = 24;
    cfg.noise_sigma = 0.3;
    cfg.seed = seed;

    // Tune rho per seed until the raw consistency sits inside [2.5, 3.5];
    // aim near the bottom of the band.
    double lo = 0.0, hi = 16.0, rho = hi;
    double craw = 0.0;
    for (int iter = 0; iter < 48; ++iter) {
        double mid = 0.5 * (lo + hi);
        cfg.discrepancy_rho = mid;
        double c = raw_consistency_at(cfg, k);
        rho = mid;
        craw = c;
        if (c >= 2.52 && c <= 2.64) break;
        if (c > 2.58) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    cfg.discrepancy_rho = rho;
    auto data = generate_synthetic(cfg);

    std::vector<std::string> seen(data.embeddings.class_names.begin(),
                                  data.embeddings.class_names.end() - 10);
    std::vector<std::string> unseen(data.embeddings.class_names.end() - 10,
                                    data.embeddings.class_names.end());
    auto semantic_seen = data.embeddings.restricted_to(seen);
    auto signatures_seen = data.signatures.restricted_to(seen);

    TrainConfig tc;
    tc.k1 = 10;
    tc.k2 = 11;
    tc.hidden1 = 96;
    tc.hidden2 = 96;
    tc.out_dim = 128;
    tc.lr = 0.1;
    tc.batch_size = 64;
    tc.alpha = 1.0;
    tc.lambda = 1e-4;
    tc.max_epochs = 300;
    tc.patience = 300;
    tc.recompute_ns_per_epoch = true;
    tc.seed = seed;

    TrainResult result = train(semantic_seen, signatures_seen, tc);
    auto mapped = map_embeddings(result.params, data.embeddings);

    auto nv = top_k_neighbors(class_distance_matrix(data.signatures.signatures), k);
    auto ns_mapped = top_k_neighbors(class_distance_matrix(mapped.vectors), k);

    SeedRun run;
    run.rho = rho;
    run.craw = craw;
    run.cvawe = consistency(nv, ns_mapped);
    run.stop = result.report.stop_reason;
    run.epochs = result.report.epochs.size();

    auto feat_seen = data.features.restricted_to(seen);
    auto feat_unseen = data.features.restricted_to(unseen);
    auto emb_unseen_raw = data.embeddings.restricted_to(unseen);
    auto mapped_seen = mapped.restricted_to(seen);
    auto mapped_unseen = mapped.restricted_to(unseen);

    EszslModel eszsl_raw = eszsl_fit(feat_seen, semantic_seen, 1.0, 1.0);
    EszslModel eszsl_vawe = eszsl_fit(feat_seen, mapped_seen, 1.0, 1.0);
    run.eszsl_raw = evaluate(eszsl_raw, feat_unseen, emb_unseen_raw).mean_per_class_accuracy;
    run.eszsl_vawe = evaluate(eszsl_vawe, feat_unseen, mapped_unseen).mean_per_class_accuracy;

    ConseModel conse_raw(signatures_seen, semantic_seen, 10, 1.0);
    ConseModel conse_vawe(signatures_seen, mapped_seen, 10, 1.0);
    run.conse_raw = evaluate(conse_raw, feat_unseen, emb_unseen_raw).mean_per_class_accuracy;
    run.conse_vawe = evaluate(conse_vawe, feat_unseen, mapped_unseen).mean_per_class_accuracy;
    return run;
}

Outcome criterion_end_to_end() {
    auto start = std::chrono::steady_clock::now();
    std::vector<double> ratios, eszsl_deltas, conse_deltas;
    bool every_seed_improved = true;
    bool eszsl_floor = true, conse_floor = true;  // strict improvement per seed
    std::ostringstream rows;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SeedRun r = run_seed(seed);
        ratios.push_back(r.cvawe / r.craw);
        eszsl_deltas.push_back(r.eszsl_vawe - r.eszsl_raw);
        conse_deltas.push_back(r.conse_vawe - r.conse_raw);
        every_seed_improved = every_seed_improved && r.cvawe > r.craw;
        eszsl_floor = eszsl_floor && r.eszsl_vawe > r.eszsl_raw;
        conse_floor = conse_floor && r.conse_vawe > r.conse_raw;
        rows << "      seed " << seed << ": rho=" << fmt(r.rho, 2) << " craw=" << fmt(r.craw, 2)
             << " cvawe=" << fmt(r.cvawe, 2) << " ratio=" << fmt(r.cvawe / r.craw, 2)
             << " eszsl " << fmt(r.eszsl_raw, 3) << "->" << fmt(r.eszsl_vawe, 3) << " conse "
             << fmt(r.conse_raw, 3) << "->" << fmt(r.conse_vawe, 3) << " (" << r.epochs
             << " epochs, " << r.stop << ")\n";
    }
    double med_ratio = median(ratios);
    double med_eszsl = median(eszsl_deltas);
    double med_conse = median(conse_deltas);
    double elapsed = seconds_since(start);

    bool pass_a = med_ratio >= 2.0 && every_seed_improved;
    bool pass_b = med_eszsl >= 0.10 && med_conse >= 0.10;
    std::ostringstream detail;
    detail << "median ratio " << fmt(med_ratio, 2) << " (target >= 2.0, every seed improved: "
           << (every_seed_improved ? "yes" : "no") << "); median accuracy delta eszsl "
           << fmt(med_eszsl, 3) << ", conse " << fmt(med_conse, 3)
           << " (target >= 0.10 both; per-seed improvement eszsl: "
           << (eszsl_floor ? "yes" : "no") << ", conse: " << (conse_floor ? "yes" : "no")
           << "); " << fmt(elapsed, 1) << "s\n"
           << rows.str() << "      (a) " << (pass_a ? "pass" : "FAIL") << "  (b) "
           << (pass_b ? "pass" : "FAIL");
    return {pass_a && pass_b, detail.str()};
}

// ---------------------------------------------------------------------------
// 7. Convergence guard
Outcome criterion_convergence_guard() {
    SynthConfig cfg;
    cfg.num_classes = 24;
    cfg.images_per_class = 1;
    cfg.visual_dim = 16;
    cfg.semantic_dim = 16;
    cfg.noise_sigma = 0.0;
    cfg.discrepancy_rho = 0.0;
    cfg.seed = 1;
    auto data = generate_synthetic(cfg);

    auto nv = top_k_neighbors(class_distance_matrix(data.signatures.signatures), 10);
    auto ns = top_k_neighbors(class_distance_matrix(data.embeddings.vectors), 10);
    double craw = consistency(nv, ns);
    if (craw != 10.0) return {false, "raw consistency " + fmt(craw, 6) + " != K"};

    TrainConfig tc;
    tc.k1 = 10;
    tc.k2 = 12;
    tc.out_dim = 16;
    tc.max_epochs = 50;
    tc.seed = 1;
    TrainResult result = train(data.embeddings, data.signatures, tc);
    if (result.report.stop_reason != "structure converged") {
        return {false, "stop reason was '" + result.report.stop_reason + "'"};
    }
    if (result.report.epochs.size() != 1 || result.report.epochs[0].triplet_count != 0) {
        return {false, "did not stop at epoch 1 with an empty batch"};
    }
    return {true, "epoch-1 empty batch, stop reason 'structure converged', consistency(raw) == 10"};
}

// ---------------------------------------------------------------------------
// 8. Determinism of the CLI pipeline
std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome criterion_determinism() {
    tu::TempDir dir("acceptance_determinism");
    std::string cmd = std::string(VAWE_BINARY) + " --seed 17 pipeline --workdir " +
                      (dir.path() / "w").string() + " --report-out " +
                      (dir.path() / "w" / "report.json").string() +
                      " --num-classes 16 --images-per-class 3 --visual-dim 6"
                      " --semantic-dim 8 --noise-sigma 0.2 --discrepancy-rho 2"
                      " --num-unseen 4 --k 3 --k1 3 --k2 6 --out-dim 16 --hidden1 12"
                      " --hidden2 12 --lr 0.05 --max-epochs 6 --patience 6 >/dev/null 2>&1";
    const char* files[] = {"report.json", "checkpoint.bin", "vawe_embeddings.txt",
                           "train_report.jsonl"};
    if (std::system(cmd.c_str()) != 0) return {false, "first pipeline run failed"};
    std::vector<std::string> first;
    for (const char* name : files) first.push_back(slurp(dir.path() / "w" / name));
    if (std::system(cmd.c_str()) != 0) return {false, "second pipeline run failed"};
    for (std::size_t i = 0; i < first.size(); ++i) {
        if (first[i].empty()) return {false, std::string(files[i]) + " is empty"};
        if (slurp(dir.path() / "w" / files[i]) != first[i]) {
            return {false, std::string(files[i]) + " differs between identical runs"};
        }
    }
    return {true, "two identical-flag runs: report, checkpoint, mapped table byte-identical"};
}

// ---------------------------------------------------------------------------
// 9. Format round-trips
Outcome criterion_round_trips() {
    tu::TempDir dir("acceptance_roundtrip");
    Rng rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t c = 2 + rng.uniform_int(8);
        std::size_t d = 1 + rng.uniform_int(6);
        auto scale = [&rng]() { return std::pow(10.0, rng.uniform(-8.0, 8.0)); };

        ClassEmbeddingTable emb;
        emb.vectors = DenseMatrix(c, d);
        for (double& v : emb.vectors.data()) v = rng.normal() * scale();
        for (std::size_t i = 0; i < c; ++i) emb.class_names.push_back("c" + std::to_string(i));
        auto p1 = dir.path() / "emb1.txt";
        auto p2 = dir.path() / "emb2.txt";
        save_embeddings(emb, p1);
        save_embeddings(load_embeddings(p1), p2);
        if (slurp(p1) != slurp(p2)) return {false, "embedding bytes differ at " + std::to_string(trial)};

        LabeledFeatureSet feats;
        feats.features = DenseMatrix(c * 2, d);
        for (double& v : feats.features.data()) v = rng.normal() * scale();
        for (std::size_t i = 0; i < c * 2; ++i) {
            feats.class_labels.push_back("c" + std::to_string(i % c));
        }
        auto f1 = dir.path() / "feat1.txt";
        auto f2 = dir.path() / "feat2.txt";
        save_features(feats, f1);
        save_features(load_features(f1), f2);
        if (slurp(f1) != slurp(f2)) return {false, "feature bytes differ at " + std::to_string(trial)};

        MlpParams params = MlpParams::init(1 + rng.uniform_int(6), 2 + rng.uniform_int(6),
                                           2 + rng.uniform_int(6), 2 + rng.uniform_int(6), rng);
        TrainConfig cfg;
        cfg.seed = rng.next_u64();
        cfg.lambda = rng.uniform(0.0, 1e-3);
        auto c1 = dir.path() / "m1.ckpt";
        auto c2 = dir.path() / "m2.ckpt";
        save_checkpoint(params, cfg, c1);
        auto [lp, lc] = load_checkpoint(c1);
        save_checkpoint(lp, lc, c2);
        if (slurp(c1) != slurp(c2)) return {false, "checkpoint bytes differ at " + std::to_string(trial)};
    }
    return {true, "50 random instances: embeddings, features, checkpoints byte-identical"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*fn)();
    };
    const std::vector<Criterion> criteria = {
        {"1 gradient correctness (rel err < 1e-6, < 5s)", criterion_gradients},
        {"2 miner oracle equivalence (100 instances, < 10s)", criterion_miner},
        {"3 consistency metric exactness", criterion_consistency},
        {"4 hub detection", criterion_hubs},
        {"5 eszsl stationarity (grad norm < 1e-8)", criterion_eszsl},
        {"6 end-to-end desk-scale reproduction", criterion_end_to_end},
        {"7 convergence guard on aligned input", criterion_convergence_guard},
        {"8 pipeline determinism", criterion_determinism},
        {"9 format round-trips", criterion_round_trips},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        Outcome outcome;
        try {
            outcome = criterion.fn();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (outcome.pass ? "[PASS] " : "[FAIL] ") << criterion.name << " — "
                  << outcome.detail << "\n";
        if (!outcome.pass) ++failures;
    }
    if (failures) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
