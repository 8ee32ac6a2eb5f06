#ifndef MBSC_CHECKPOINT_HPP
#define MBSC_CHECKPOINT_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbsc/model.hpp"
#include "mbsc/quantizer.hpp"

namespace mbsc {

struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr uint16_t kCheckpointVersion = 1;
inline constexpr uint16_t kQuantizerVersion = 1;

// Canonical key=value serialization of a configuration. Every field is
// always written, in a fixed order, so equal configs produce identical
// text (the bitstream config hash is FNV-1a over exactly this string).
std::string config_to_text(const ModelConfig& cfg);

// Inverse of config_to_text. All keys must be present; unknown keys and
// malformed values are errors.
ModelConfig parse_config(const std::string& text);

// Quantizer state blob ("MBSQ"): header with mode/bits/dim and the band
// plan as f64 edges, then per stage the commitment weight, EMA decay and
// smoothing, little-endian f32 code vectors, and f64 EMA counts and sums.
std::vector<uint8_t> quantizer_to_bytes(const QuantizerStack& q);
QuantizerStack quantizer_from_bytes(const std::vector<uint8_t>& bytes);

void save_quantizer(const std::string& path, const QuantizerStack& q);
QuantizerStack load_quantizer(const std::string& path);

struct Checkpoint {
    ModelConfig config;
    Model model;
    QuantizerStack stack;
};

// Model checkpoint ("MFAE"): length-prefixed config text, every model
// tensor as little-endian f32 in parameter declaration order, then the
// embedded quantizer blob. Weights round to f32 on save.
void save_checkpoint(const std::string& path, Model& model, const QuantizerStack& q);
Checkpoint load_checkpoint(const std::string& path);

// Whole-file helpers shared by the checkpoint and token stream paths.
std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes);

} // namespace mbsc

#endif
