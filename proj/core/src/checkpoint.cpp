#include "mbsc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mbsc {

namespace {

const char* mode_name(SnakeMode m) {
    switch (m) {
        case SnakeMode::vanilla: return "vanilla";
        case SnakeMode::amplitude: return "amplitude";
        case SnakeMode::amplitude_bias: return "amplitude_bias";
    }
    throw CheckpointError("unknown activation mode");
}

SnakeMode mode_from_name(const std::string& s) {
    if (s == "vanilla") return SnakeMode::vanilla;
    if (s == "amplitude") return SnakeMode::amplitude;
    if (s == "amplitude_bias") return SnakeMode::amplitude_bias;
    throw CheckpointError("config: unknown activation '" + s + "'");
}

std::string join_ints(const std::vector<int>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << v[i];
    }
    return os.str();
}

std::vector<int> split_ints(const std::string& s, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            int v = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw CheckpointError("config: bad integer list for " + key);
        }
    }
    if (out.empty()) throw CheckpointError("config: empty list for " + key);
    return out;
}

int parse_int(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw CheckpointError("config: bad integer for " + key);
    }
}

// Little-endian primitive writers/readers over a byte buffer.
struct Writer {
    std::vector<uint8_t> out;

    void u8(uint8_t v) { out.push_back(v); }
    void u16(uint16_t v) {
        for (int i = 0; i < 2; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
    }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
    }
    void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
    void bytes(const void* p, std::size_t n) {
        const uint8_t* b = static_cast<const uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
};

struct Reader {
    const std::vector<uint8_t>& in;
    std::size_t at = 0;

    void need(std::size_t n) const {
        if (at + n > in.size()) throw CheckpointError("file truncated");
    }
    uint8_t u8() {
        need(1);
        return in[at++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(in[at] | (in[at + 1] << 8));
        at += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in[at + static_cast<std::size_t>(i)]) << (8 * i);
        at += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in[at + static_cast<std::size_t>(i)]) << (8 * i);
        at += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(in.data() + at), n);
        at += n;
        return s;
    }
    std::vector<uint8_t> blob(std::size_t n) {
        need(n);
        std::vector<uint8_t> b(in.begin() + static_cast<std::ptrdiff_t>(at),
                               in.begin() + static_cast<std::ptrdiff_t>(at + n));
        at += n;
        return b;
    }
};

void expect_magic(Reader& r, const char (&magic)[5], const char* what) {
    std::string m = r.text(4);
    if (m != magic) throw CheckpointError(std::string("bad magic, not a ") + what + " file");
}

} // namespace

std::string config_to_text(const ModelConfig& cfg) {
    std::ostringstream os;
    os << "strides=" << join_ints(cfg.strides) << "\n";
    os << "base_channels=" << cfg.base_channels << "\n";
    os << "latent_dim=" << cfg.latent_dim << "\n";
    os << "mrf_kernels=" << join_ints(cfg.mrf_kernels) << "\n";
    os << "mrf_dilations=" << join_ints(cfg.mrf_dilations) << "\n";
    os << "bottleneck_expansion=" << cfg.bottleneck_expansion << "\n";
    os << "conv_groups=" << cfg.conv_groups << "\n";
    os << "sample_rate=" << cfg.sample_rate << "\n";
    os << "activation=" << mode_name(cfg.activation) << "\n";
    return os.str();
}

ModelConfig parse_config(const std::string& text) {
    ModelConfig cfg;
    std::istringstream is(text);
    std::string line;
    std::vector<std::string> seen;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw CheckpointError("config: line without '=': " + line);
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        if (key == "strides") cfg.strides = split_ints(val, key);
        else if (key == "base_channels") cfg.base_channels = parse_int(val, key);
        else if (key == "latent_dim") cfg.latent_dim = parse_int(val, key);
        else if (key == "mrf_kernels") cfg.mrf_kernels = split_ints(val, key);
        else if (key == "mrf_dilations") cfg.mrf_dilations = split_ints(val, key);
        else if (key == "bottleneck_expansion") cfg.bottleneck_expansion = parse_int(val, key);
        else if (key == "conv_groups") cfg.conv_groups = parse_int(val, key);
        else if (key == "sample_rate") cfg.sample_rate = parse_int(val, key);
        else if (key == "activation") cfg.activation = mode_from_name(val);
        else throw CheckpointError("config: unknown key '" + key + "'");
        seen.push_back(key);
    }
    const char* required[] = {"strides", "base_channels", "latent_dim", "mrf_kernels",
                              "mrf_dilations", "bottleneck_expansion", "conv_groups",
                              "sample_rate", "activation"};
    for (const char* k : required) {
        bool found = false;
        for (const std::string& s : seen) found = found || s == k;
        if (!found) throw CheckpointError(std::string("config: missing key '") + k + "'");
    }
    cfg.validate();
    return cfg;
}

std::vector<uint8_t> quantizer_to_bytes(const QuantizerStack& q) {
    if (q.codebooks.empty()) throw std::invalid_argument("quantizer_to_bytes: empty stack");
    Writer w;
    w.bytes("MBSQ", 4);
    w.u16(kQuantizerVersion);
    w.u8(static_cast<uint8_t>(q.mode));
    w.u8(static_cast<uint8_t>(q.bits()));
    w.u16(static_cast<uint16_t>(q.dim()));
    w.u8(static_cast<uint8_t>(q.plan.bands.size()));
    w.u8(static_cast<uint8_t>(q.plan.residual_stages));
    w.f64(q.plan.latent_rate);
    for (const BandRange& b : q.plan.bands) {
        w.f64(b.f_min);
        w.f64(b.f_max);
        w.u32(b.scale_factor);
        w.u8(b.include_nyquist ? 1 : 0);
    }
    if (q.commit_weights.size() != q.n_stages())
        throw std::invalid_argument("quantizer_to_bytes: commitment weight count mismatch");
    for (double cw : q.commit_weights) w.f64(cw);
    for (const Codebook& cb : q.codebooks) {
        if (cb.dim() != q.dim() || cb.bits() != q.bits())
            throw std::invalid_argument("quantizer_to_bytes: inconsistent codebook shapes");
        w.f64(cb.decay);
        w.f64(cb.smoothing_eps);
        for (double v : cb.vectors.v) w.f32(static_cast<float>(v));
        for (double c : cb.ema_counts) w.f64(c);
        for (double s : cb.ema_sums.v) w.f64(s);
    }
    return w.out;
}

QuantizerStack quantizer_from_bytes(const std::vector<uint8_t>& bytes) {
    Reader r{bytes};
    expect_magic(r, "MBSQ", "quantizer");
    uint16_t version = r.u16();
    if (version != kQuantizerVersion) throw CheckpointError("quantizer: unsupported version");
    uint8_t mode = r.u8();
    if (mode > 1) throw CheckpointError("quantizer: unknown mode byte");
    int bits = r.u8();
    int dim = r.u16();
    int n_bands = r.u8();
    unsigned residual = r.u8();
    if (bits < 1 || bits > 16) throw CheckpointError("quantizer: bits out of [1, 16]");
    if (dim < 1) throw CheckpointError("quantizer: nonpositive dimension");

    QuantizerStack q;
    q.mode = static_cast<QuantizerMode>(mode);
    q.plan.latent_rate = r.f64();
    q.plan.residual_stages = residual;
    q.plan.bands.resize(static_cast<std::size_t>(n_bands));
    for (BandRange& b : q.plan.bands) {
        b.f_min = r.f64();
        b.f_max = r.f64();
        b.scale_factor = r.u32();
        b.include_nyquist = r.u8() != 0;
    }
    std::size_t stages = q.plan.n_stages();
    if (stages == 0) throw CheckpointError("quantizer: zero stages");
    q.commit_weights.resize(stages);
    for (double& cw : q.commit_weights) cw = r.f64();

    const int entries = 1 << bits;
    q.codebooks.reserve(stages);
    for (std::size_t k = 0; k < stages; ++k) {
        Codebook cb;
        cb.decay = r.f64();
        cb.smoothing_eps = r.f64();
        cb.vectors = Tensor(entries, dim);
        for (double& v : cb.vectors.v) v = r.f32();
        cb.ema_counts.resize(static_cast<std::size_t>(entries));
        for (double& c : cb.ema_counts) c = r.f64();
        cb.ema_sums = Tensor(entries, dim);
        for (double& s : cb.ema_sums.v) s = r.f64();
        q.codebooks.push_back(std::move(cb));
    }
    if (r.at != bytes.size()) throw CheckpointError("quantizer: trailing bytes");
    return q;
}

void save_quantizer(const std::string& path, const QuantizerStack& q) {
    write_file_bytes(path, quantizer_to_bytes(q));
}

QuantizerStack load_quantizer(const std::string& path) {
    return quantizer_from_bytes(read_file_bytes(path));
}

void save_checkpoint(const std::string& path, Model& model, const QuantizerStack& q) {
    Writer w;
    w.bytes("MFAE", 4);
    w.u16(kCheckpointVersion);
    std::string cfg_text = config_to_text(model.cfg);
    w.u32(static_cast<uint32_t>(cfg_text.size()));
    w.bytes(cfg_text.data(), cfg_text.size());

    ParamList params = model.parameters();
    w.u32(static_cast<uint32_t>(params.size()));
    for (const ParamRef& p : params) {
        w.u32(static_cast<uint32_t>(p.value->size()));
        for (double v : p.value->v) w.f32(static_cast<float>(v));
    }

    std::vector<uint8_t> blob = quantizer_to_bytes(q);
    w.u32(static_cast<uint32_t>(blob.size()));
    w.bytes(blob.data(), blob.size());
    write_file_bytes(path, w.out);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::vector<uint8_t> bytes = read_file_bytes(path);
    Reader r{bytes};
    expect_magic(r, "MFAE", "checkpoint");
    uint16_t version = r.u16();
    if (version != kCheckpointVersion) throw CheckpointError("checkpoint: unsupported version");
    uint32_t cfg_len = r.u32();
    ModelConfig cfg = parse_config(r.text(cfg_len));

    Checkpoint ck{cfg, Model(cfg), QuantizerStack{}};
    ParamList params = ck.model.parameters();
    uint32_t n_tensors = r.u32();
    if (n_tensors != params.size())
        throw CheckpointError("checkpoint: tensor count does not match configuration");
    for (const ParamRef& p : params) {
        uint32_t n = r.u32();
        if (n != p.value->size())
            throw CheckpointError("checkpoint: tensor size mismatch at " + p.name);
        for (double& v : p.value->v) v = r.f32();
    }

    uint32_t blob_len = r.u32();
    ck.stack = quantizer_from_bytes(r.blob(blob_len));
    if (r.at != bytes.size()) throw CheckpointError("checkpoint: trailing bytes");
    if (ck.stack.dim() != cfg.latent_dim)
        throw CheckpointError("checkpoint: quantizer dimension does not match latent dimension");
    return ck;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot open file for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

} // namespace mbsc
