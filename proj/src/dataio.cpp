#include "vawe/dataio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace vawe {

namespace {

std::vector<std::string> split_tokens(const std::string& line, std::size_t line_no) {
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start <= line.size()) {
        std::size_t end = line.find(' ', start);
        if (end == std::string::npos) end = line.size();
        if (end == start) {
            throw ParseError("line " + std::to_string(line_no) + ": empty token");
        }
        tokens.push_back(line.substr(start, end - start));
        start = end + 1;
        if (start == line.size() + 1) break;
    }
    return tokens;
}

double parse_double(const std::string& token, std::size_t line_no) {
    double value = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError("line " + std::to_string(line_no) + ": non-numeric token '" +
                         token + "'");
    }
    if (!std::isfinite(value)) {
        throw ParseError("line " + std::to_string(line_no) + ": non-finite value '" +
                         token + "'");
    }
    return value;
}

std::size_t parse_count(const std::string& token, std::size_t line_no) {
    std::size_t value = 0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError("line " + std::to_string(line_no) + ": bad count '" + token + "'");
    }
    return value;
}

struct RowFile {
    std::vector<std::string> names;
    DenseMatrix values;
};

// Shared reader for the embedding/feature layout: "N D" header then N rows
// of "name v1 ... vD".
RowFile load_rows(const std::filesystem::path& path, bool unique_names) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("line 1: missing header");
    auto header = split_tokens(line, 1);
    if (header.size() != 2) {
        throw ParseError("line 1: header must be two counts, got " +
                         std::to_string(header.size()) + " tokens");
    }
    std::size_t n = parse_count(header[0], 1);
    std::size_t d = parse_count(header[1], 1);
    if (n == 0) throw ParseError("line 1: no rows");
    if (d == 0) throw ParseError("line 1: zero dimension");

    RowFile out;
    out.names.reserve(n);
    std::vector<double> data;
    data.reserve(n * d);
    std::unordered_set<std::string> seen;

    for (std::size_t r = 0; r < n; ++r) {
        std::size_t line_no = r + 2;
        if (!std::getline(in, line)) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(n) + " rows, file ended early");
        }
        auto tokens = split_tokens(line, line_no);
        if (tokens.size() != d + 1) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(d + 1) + " tokens, got " +
                             std::to_string(tokens.size()));
        }
        if (unique_names && !seen.insert(tokens[0]).second) {
            throw ParseError("line " + std::to_string(line_no) + ": duplicate class name '" +
                             tokens[0] + "'");
        }
        out.names.push_back(tokens[0]);
        for (std::size_t j = 0; j < d; ++j) {
            data.push_back(parse_double(tokens[j + 1], line_no));
        }
    }
    while (std::getline(in, line)) {
        if (!line.empty()) {
            throw ParseError("line " + std::to_string(n + 2) + ": trailing content");
        }
    }
    out.values = DenseMatrix(n, d, std::move(data));
    return out;
}

void save_rows(const std::vector<std::string>& names, const DenseMatrix& values,
               const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << values.rows() << ' ' << values.cols() << '\n';
    for (std::size_t i = 0; i < values.rows(); ++i) {
        out << names[i];
        for (double v : values.row(i)) out << ' ' << format_double(v);
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

void SynthConfig::validate() const {
    if (num_classes < 4) throw ConfigError("num_classes must be >= 4");
    if (images_per_class < 1) throw ConfigError("images_per_class must be >= 1");
    if (visual_dim < 2 || semantic_dim < 2) throw ConfigError("dims must be >= 2");
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    if (discrepancy_rho < 0.0) throw ConfigError("discrepancy_rho must be >= 0");
}

SynthData generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t c = cfg.num_classes;
    const std::size_t dv = cfg.visual_dim;
    const std::size_t ds = cfg.semantic_dim;

    // One stream per purpose so discrepancy_rho scales the same draws
    // instead of shifting them.
    Rng master(cfg.seed);
    Rng centers_rng = master.split();
    Rng q_rng = master.split();
    Rng noise_rng = master.split();
    Rng g_rng = master.split();

    DenseMatrix centers(c, dv);
    for (double& v : centers.data()) v = centers_rng.normal();

    // Semantic map: isometric when it can be (ds >= dv), otherwise a scaled
    // Gaussian projection. Isometry makes rho the only source of
    // visual-semantic disagreement.
    DenseMatrix q(ds, dv);
    for (double& v : q.data()) v = q_rng.normal();
    if (ds >= dv) {
        // Modified Gram-Schmidt on the dv columns.
        for (std::size_t j = 0; j < dv; ++j) {
            for (std::size_t k = 0; k < j; ++k) {
                double proj = 0.0;
                for (std::size_t i = 0; i < ds; ++i) proj += q.at(i, k) * q.at(i, j);
                for (std::size_t i = 0; i < ds; ++i) q.at(i, j) -= proj * q.at(i, k);
            }
            double nrm = 0.0;
            for (std::size_t i = 0; i < ds; ++i) nrm += q.at(i, j) * q.at(i, j);
            nrm = std::sqrt(nrm);
            for (std::size_t i = 0; i < ds; ++i) q.at(i, j) /= nrm;
        }
    } else {
        double scale = 1.0 / std::sqrt(static_cast<double>(ds));
        for (double& v : q.data()) v *= scale;
    }

    SynthData out;
    out.features.features = DenseMatrix(c * cfg.images_per_class, dv);
    out.features.class_labels.reserve(c * cfg.images_per_class);
    out.signatures.signatures = DenseMatrix(c, dv);
    for (std::size_t i = 0; i < c; ++i) {
        std::string name = "class_" + std::to_string(i);
        for (std::size_t img = 0; img < cfg.images_per_class; ++img) {
            std::size_t r = i * cfg.images_per_class + img;
            out.features.class_labels.push_back(name);
            auto row = out.features.features.row(r);
            for (std::size_t j = 0; j < dv; ++j) {
                row[j] = centers.at(i, j) + cfg.noise_sigma * noise_rng.normal();
                out.signatures.signatures.at(i, j) += row[j];
            }
        }
        for (std::size_t j = 0; j < dv; ++j) {
            out.signatures.signatures.at(i, j) /= static_cast<double>(cfg.images_per_class);
        }
        out.signatures.class_names.push_back(name);
        out.embeddings.class_names.push_back(std::move(name));
    }

    const double rescale = 1.0 / std::sqrt(1.0 + cfg.discrepancy_rho * cfg.discrepancy_rho);
    out.embeddings.vectors = DenseMatrix(c, ds);
    for (std::size_t i = 0; i < c; ++i) {
        auto srow = out.embeddings.vectors.row(i);
        for (std::size_t k = 0; k < ds; ++k) {
            double qm = 0.0;
            for (std::size_t j = 0; j < dv; ++j) qm += q.at(k, j) * centers.at(i, j);
            srow[k] = (qm + cfg.discrepancy_rho * g_rng.normal()) * rescale;
        }
    }
    return out;
}

ClassEmbeddingTable load_embeddings(const std::filesystem::path& path) {
    auto rows = load_rows(path, /*unique_names=*/true);
    ClassEmbeddingTable table{std::move(rows.names), std::move(rows.values)};
    table.validate();
    return table;
}

void save_embeddings(const ClassEmbeddingTable& table, const std::filesystem::path& path) {
    save_rows(table.class_names, table.vectors, path);
}

LabeledFeatureSet load_features(const std::filesystem::path& path) {
    auto rows = load_rows(path, /*unique_names=*/false);
    LabeledFeatureSet set{std::move(rows.names), std::move(rows.values)};
    set.validate();
    return set;
}

void save_features(const LabeledFeatureSet& set, const std::filesystem::path& path) {
    save_rows(set.class_labels, set.features, path);
}

ZslSplit load_split(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    ZslSplit split;
    std::string line;
    std::size_t line_no = 0;
    std::unordered_set<std::string> assigned;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tokens = split_tokens(line, line_no);
        if (tokens.size() != 2) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected 'seen|unseen class_name'");
        }
        if (!assigned.insert(tokens[1]).second) {
            throw ParseError("line " + std::to_string(line_no) + ": class '" + tokens[1] +
                             "' listed twice");
        }
        if (tokens[0] == "seen") {
            split.seen.push_back(tokens[1]);
        } else if (tokens[0] == "unseen") {
            split.unseen.push_back(tokens[1]);
        } else {
            throw ParseError("line " + std::to_string(line_no) + ": bad tag '" + tokens[0] +
                             "'");
        }
    }
    split.validate();
    return split;
}

void save_split(const ZslSplit& split, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const auto& name : split.seen) out << "seen " << name << '\n';
    for (const auto& name : split.unseen) out << "unseen " << name << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

VisualSignatureTable load_signatures(const std::filesystem::path& path) {
    auto rows = load_rows(path, /*unique_names=*/true);
    return VisualSignatureTable{std::move(rows.names), std::move(rows.values)};
}

void save_signatures(const VisualSignatureTable& table, const std::filesystem::path& path) {
    save_rows(table.class_names, table.signatures, path);
}

}  // namespace vawe
