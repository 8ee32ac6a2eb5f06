#include "mbsc/bitstream.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace mbsc {

namespace {

constexpr std::array<uint8_t, 4> kMagic = {'M', 'B', 'S', 'T'};
constexpr std::size_t kHeaderSize = 32;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

uint16_t get_u16(const std::vector<uint8_t>& in, std::size_t at) {
    return static_cast<uint16_t>(in[at] | (in[at + 1] << 8));
}

uint32_t get_u32(const std::vector<uint8_t>& in, std::size_t at) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in[at + i]) << (8 * i);
    return v;
}

std::size_t payload_size(const StreamHeader& h) {
    std::size_t total_bits = static_cast<std::size_t>(h.frame_count) * h.n_stages * h.bits_per_code;
    return (total_bits + 7) / 8;
}

} // namespace

uint32_t fnv1a32(const std::string& text) {
    uint32_t h = 2166136261u;
    for (unsigned char c : text) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

std::array<uint8_t, 8> make_config_hash(uint32_t config_fnv, uint32_t original_samples) {
    std::array<uint8_t, 8> out{};
    for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(i)] = static_cast<uint8_t>((config_fnv >> (8 * i)) & 0xFF);
    for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(4 + i)] = static_cast<uint8_t>((original_samples >> (8 * i)) & 0xFF);
    return out;
}

uint32_t config_hash_fnv(const std::array<uint8_t, 8>& hash) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(hash[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

uint32_t config_hash_samples(const std::array<uint8_t, 8>& hash) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(hash[static_cast<std::size_t>(4 + i)]) << (8 * i);
    return v;
}

std::vector<uint8_t> serialize(const TokenStream& tokens, const StreamHeader& header) {
    if (header.version != kStreamVersion)
        throw std::invalid_argument("serialize: unsupported stream version");
    if (header.bits_per_code < 1 || header.bits_per_code > 16)
        throw std::invalid_argument("serialize: bits per code must be in [1, 16]");
    if (header.n_stages == 0) throw std::invalid_argument("serialize: zero stages");
    if (header.frame_rate_den == 0) throw std::invalid_argument("serialize: zero frame rate denominator");
    if (tokens.n_stages != header.n_stages || tokens.frames != static_cast<int>(header.frame_count) ||
        tokens.bits != header.bits_per_code)
        throw std::invalid_argument("serialize: header disagrees with token stream");
    const uint32_t limit = 1u << header.bits_per_code;
    for (uint16_t idx : tokens.indices)
        if (static_cast<uint32_t>(idx) >= limit)
            throw std::invalid_argument("serialize: token index exceeds bit width");

    std::vector<uint8_t> out;
    out.reserve(kHeaderSize + payload_size(header));
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    put_u16(out, header.version);
    put_u32(out, header.sample_rate);
    put_u32(out, header.frame_rate_num);
    put_u32(out, header.frame_rate_den);
    out.push_back(header.n_stages);
    out.push_back(header.bits_per_code);
    put_u32(out, header.frame_count);
    out.insert(out.end(), header.config_hash.begin(), header.config_hash.end());

    uint8_t cur = 0;
    int filled = 0;
    for (int t = 0; t < tokens.frames; ++t) {
        for (int k = 0; k < tokens.n_stages; ++k) {
            uint16_t idx = tokens.index(t, k);
            for (int b = header.bits_per_code - 1; b >= 0; --b) {
                cur = static_cast<uint8_t>((cur << 1) | ((idx >> b) & 1));
                if (++filled == 8) {
                    out.push_back(cur);
                    cur = 0;
                    filled = 0;
                }
            }
        }
    }
    if (filled > 0) out.push_back(static_cast<uint8_t>(cur << (8 - filled)));
    return out;
}

std::pair<TokenStream, StreamHeader> deserialize(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < kMagic.size() ||
        !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
        throw BadMagicError("deserialize: bad magic, not a token stream");
    if (bytes.size() < kHeaderSize) {
        std::ostringstream os;
        os << "deserialize: truncated header, expected at least " << kHeaderSize
           << " bytes, got " << bytes.size();
        throw TruncatedStreamError(os.str());
    }

    StreamHeader h;
    h.version = get_u16(bytes, 4);
    if (h.version != kStreamVersion) {
        std::ostringstream os;
        os << "deserialize: version mismatch, expected " << kStreamVersion << ", got " << h.version;
        throw VersionMismatchError(os.str());
    }
    h.sample_rate = get_u32(bytes, 6);
    h.frame_rate_num = get_u32(bytes, 10);
    h.frame_rate_den = get_u32(bytes, 14);
    h.n_stages = bytes[18];
    h.bits_per_code = bytes[19];
    h.frame_count = get_u32(bytes, 20);
    for (std::size_t i = 0; i < 8; ++i) h.config_hash[i] = bytes[24 + i];

    if (h.bits_per_code < 1 || h.bits_per_code > 16)
        throw BitstreamError("deserialize: bits per code out of [1, 16]");
    if (h.n_stages == 0) throw BitstreamError("deserialize: zero stages");
    if (h.frame_rate_den == 0) throw BitstreamError("deserialize: zero frame rate denominator");

    const std::size_t expected = kHeaderSize + payload_size(h);
    if (bytes.size() != expected) {
        std::ostringstream os;
        os << "deserialize: " << (bytes.size() < expected ? "truncated payload" : "trailing bytes")
           << ", expected " << expected << " bytes, got " << bytes.size();
        throw TruncatedStreamError(os.str());
    }

    TokenStream tokens;
    tokens.n_stages = h.n_stages;
    tokens.bits = h.bits_per_code;
    tokens.frames = static_cast<int>(h.frame_count);
    tokens.frame_rate = h.frame_rate_den == 0
                            ? 0.0
                            : static_cast<double>(h.frame_rate_num) / h.frame_rate_den;
    tokens.indices.resize(static_cast<std::size_t>(tokens.frames) * static_cast<std::size_t>(tokens.n_stages));

    std::size_t at = kHeaderSize;
    uint8_t cur = 0;
    int avail = 0;
    for (std::size_t i = 0; i < tokens.indices.size(); ++i) {
        uint32_t v = 0;
        for (int b = 0; b < h.bits_per_code; ++b) {
            if (avail == 0) {
                cur = bytes[at++];
                avail = 8;
            }
            v = (v << 1) | ((cur >> 7) & 1);
            cur = static_cast<uint8_t>(cur << 1);
            --avail;
        }
        tokens.indices[i] = static_cast<uint16_t>(v);
    }
    if (avail > 0 && cur != 0)
        throw BitstreamError("deserialize: nonzero padding bits at end of payload");
    return {std::move(tokens), h};
}

BitrateInfo bitrate(const ModelConfig& cfg, int n_stages, int bits) {
    cfg.validate();
    if (n_stages < 1) throw std::invalid_argument("bitrate: need at least one stage");
    if (bits < 1 || bits > 16) throw std::invalid_argument("bitrate: bits must be in [1, 16]");
    BitrateInfo info;
    uint32_t num = static_cast<uint32_t>(cfg.sample_rate);
    uint32_t den = static_cast<uint32_t>(cfg.downsampling());
    uint32_t g = std::gcd(num, den);
    info.frame_rate_num = num / g;
    info.frame_rate_den = den / g;
    info.frame_rate = static_cast<double>(cfg.sample_rate) / cfg.downsampling();
    info.tokens_per_second = info.frame_rate * n_stages;
    info.bits_per_second = info.tokens_per_second * bits;
    return info;
}

} // namespace mbsc
