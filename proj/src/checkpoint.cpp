#include "vawe/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "vawe/dataio.hpp"

namespace vawe {

namespace {

constexpr char kMagic[4] = {'V', 'A', 'W', 'E'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Reader {
  public:
    Reader(const std::string& buf) : buf_(buf) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return std::bit_cast<double>(v);
    }

    std::string bytes(std::size_t n) {
        need(n);
        std::string out = buf_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    bool at_end() const { return pos_ == buf_.size(); }

  private:
    void need(std::size_t n) {
        if (pos_ + n > buf_.size()) throw CheckpointError("truncated checkpoint");
    }
    const std::string& buf_;
    std::size_t pos_ = 0;
};

std::string config_text(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "k1=" << cfg.k1 << '\n';
    out << "k2=" << cfg.k2 << '\n';
    out << "alpha=" << format_double(cfg.alpha) << '\n';
    out << "lambda=" << format_double(cfg.lambda) << '\n';
    out << "out_dim=" << cfg.out_dim << '\n';
    out << "hidden1=" << cfg.hidden1 << '\n';
    out << "hidden2=" << cfg.hidden2 << '\n';
    out << "lr=" << format_double(cfg.lr) << '\n';
    out << "momentum=" << format_double(cfg.momentum) << '\n';
    out << "batch_size=" << cfg.batch_size << '\n';
    out << "max_epochs=" << cfg.max_epochs << '\n';
    out << "patience=" << cfg.patience << '\n';
    out << "norm_eps=" << format_double(cfg.norm_eps) << '\n';
    out << "seed=" << cfg.seed << '\n';
    out << "recompute_ns_per_epoch=" << (cfg.recompute_ns_per_epoch ? 1 : 0) << '\n';
    return out.str();
}

template <typename T>
T parse_value(const std::string& text) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw CheckpointError("bad config value '" + text + "'");
    }
    return value;
}

TrainConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw CheckpointError("bad config line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&kv](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw CheckpointError(std::string("missing config key '") + key + "'");
        return it->second;
    };
    TrainConfig cfg;
    cfg.k1 = parse_value<std::size_t>(get("k1"));
    cfg.k2 = parse_value<std::size_t>(get("k2"));
    cfg.alpha = parse_value<double>(get("alpha"));
    cfg.lambda = parse_value<double>(get("lambda"));
    cfg.out_dim = parse_value<std::size_t>(get("out_dim"));
    cfg.hidden1 = parse_value<std::size_t>(get("hidden1"));
    cfg.hidden2 = parse_value<std::size_t>(get("hidden2"));
    cfg.lr = parse_value<double>(get("lr"));
    cfg.momentum = parse_value<double>(get("momentum"));
    cfg.batch_size = parse_value<std::size_t>(get("batch_size"));
    cfg.max_epochs = parse_value<std::size_t>(get("max_epochs"));
    cfg.patience = parse_value<std::size_t>(get("patience"));
    cfg.norm_eps = parse_value<double>(get("norm_eps"));
    cfg.seed = parse_value<std::uint64_t>(get("seed"));
    cfg.recompute_ns_per_epoch = parse_value<int>(get("recompute_ns_per_epoch")) != 0;
    return cfg;
}

}  // namespace

void save_checkpoint(const MlpParams& params, const TrainConfig& cfg,
                     const std::filesystem::path& path) {
    std::string buf;
    buf.append(kMagic, sizeof(kMagic));
    put_u32(buf, kFormatVersion);
    put_u32(buf, static_cast<std::uint32_t>(params.input_dim()));
    put_u32(buf, static_cast<std::uint32_t>(params.hidden1()));
    put_u32(buf, static_cast<std::uint32_t>(params.hidden2()));
    put_u32(buf, static_cast<std::uint32_t>(params.output_dim()));
    for (const auto* block : {&params.w1.data(), &params.w2.data(), &params.w3.data(),
                              &params.b1, &params.b2, &params.b3}) {
        for (double v : *block) put_f64(buf, v);
    }
    std::string cfg_text = config_text(cfg);
    put_u32(buf, static_cast<std::uint32_t>(cfg_text.size()));
    buf += cfg_text;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::pair<MlpParams, TrainConfig> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string buf = ss.str();

    Reader r(buf);
    if (r.bytes(4) != std::string(kMagic, sizeof(kMagic))) {
        throw CheckpointError("bad magic: not a checkpoint file");
    }
    std::uint32_t version = r.u32();
    if (version != kFormatVersion) {
        throw CheckpointError("unsupported checkpoint format version " +
                              std::to_string(version));
    }
    std::size_t input = r.u32();
    std::size_t h1 = r.u32();
    std::size_t h2 = r.u32();
    std::size_t output = r.u32();
    if (input == 0 || h1 == 0 || h2 == 0 || output == 0) {
        throw CheckpointError("zero dimension in checkpoint header");
    }

    MlpParams p;
    p.w1 = DenseMatrix(h1, input);
    p.w2 = DenseMatrix(h2, h1);
    p.w3 = DenseMatrix(output, h2);
    p.b1.resize(h1);
    p.b2.resize(h2);
    p.b3.resize(output);
    for (auto* block : {&p.w1.data(), &p.w2.data(), &p.w3.data(), &p.b1, &p.b2, &p.b3}) {
        for (double& v : *block) v = r.f64();
    }
    std::size_t cfg_len = r.u32();
    TrainConfig cfg = parse_config(r.bytes(cfg_len));
    if (!r.at_end()) throw CheckpointError("trailing bytes after checkpoint payload");
    return {std::move(p), cfg};
}

}  // namespace vawe
