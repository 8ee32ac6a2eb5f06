#ifndef MBSC_BITSTREAM_HPP
#define MBSC_BITSTREAM_HPP

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mbsc/model.hpp"
#include "mbsc/quantizer.hpp"

namespace mbsc {

// Errors raised by deserialize(). Distinct types so callers can tell a
// wrong file apart from a damaged one.
struct BitstreamError : std::runtime_error {
    explicit BitstreamError(const std::string& what) : std::runtime_error(what) {}
};
struct BadMagicError : BitstreamError {
    explicit BadMagicError(const std::string& what) : BitstreamError(what) {}
};
struct VersionMismatchError : BitstreamError {
    explicit VersionMismatchError(const std::string& what) : BitstreamError(what) {}
};
struct TruncatedStreamError : BitstreamError {
    explicit TruncatedStreamError(const std::string& what) : BitstreamError(what) {}
};

inline constexpr uint16_t kStreamVersion = 1;

struct StreamHeader {
    uint16_t version = kStreamVersion;
    uint32_t sample_rate = 0;
    uint32_t frame_rate_num = 0; // frame rate as exact rational num/den
    uint32_t frame_rate_den = 1;
    uint8_t n_stages = 0;
    uint8_t bits_per_code = 0;
    uint32_t frame_count = 0;
    std::array<uint8_t, 8> config_hash{}; // fnv1a32(config text) || original sample count

    bool operator==(const StreamHeader&) const = default;
};

// 32-bit FNV-1a over a byte string.
uint32_t fnv1a32(const std::string& text);

// First four bytes: FNV-1a of the canonical config text; last four: the
// source sample count. Both little-endian.
std::array<uint8_t, 8> make_config_hash(uint32_t config_fnv, uint32_t original_samples);
uint32_t config_hash_samples(const std::array<uint8_t, 8>& hash);
uint32_t config_hash_fnv(const std::array<uint8_t, 8>& hash);

// Fixed 32-byte header ("MBST", little-endian fields) followed by the token
// payload: indices packed MSB-first, stage-major within each frame, zero
// padding only in the final byte.
std::vector<uint8_t> serialize(const TokenStream& tokens, const StreamHeader& header);
std::pair<TokenStream, StreamHeader> deserialize(const std::vector<uint8_t>& bytes);

struct BitrateInfo {
    uint32_t frame_rate_num = 0;
    uint32_t frame_rate_den = 1;
    double frame_rate = 0.0;    // Hz
    double tokens_per_second = 0.0;
    double bits_per_second = 0.0;
};

// Exact rate accounting for a model configuration quantized with n_stages
// codebooks of 2^bits entries.
BitrateInfo bitrate(const ModelConfig& cfg, int n_stages, int bits);

} // namespace mbsc

#endif
