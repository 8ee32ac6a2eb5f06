#include "mbsc/wav.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

namespace mbsc {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;

uint32_t rd_u32(const std::vector<uint8_t>& b, std::size_t at) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[at + static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

uint16_t rd_u16(const std::vector<uint8_t>& b, std::size_t at) {
    return static_cast<uint16_t>(b[at] | (b[at + 1] << 8));
}

void wr_u32(std::vector<uint8_t>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void wr_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(static_cast<uint8_t>(v & 0xFF));
    b.push_back(static_cast<uint8_t>(v >> 8));
}

void wr_tag(std::vector<uint8_t>& b, const char* tag) {
    b.insert(b.end(), tag, tag + 4);
}

bool tag_is(const std::vector<uint8_t>& b, std::size_t at, const char* tag) {
    for (int i = 0; i < 4; ++i)
        if (b[at + static_cast<std::size_t>(i)] != static_cast<uint8_t>(tag[i])) return false;
    return true;
}

} // namespace

AudioBuffer read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw WavError("cannot open wav file: " + path);
    std::vector<uint8_t> b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (b.size() < 12 || !tag_is(b, 0, "RIFF") || !tag_is(b, 8, "WAVE"))
        throw WavError("not a RIFF/WAVE file: " + path);

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t sample_rate = 0;
    bool have_fmt = false;
    std::size_t data_at = 0, data_len = 0;

    std::size_t at = 12;
    while (at + 8 <= b.size()) {
        uint32_t chunk_len = rd_u32(b, at + 4);
        std::size_t body = at + 8;
        if (body + chunk_len > b.size()) throw WavError("truncated chunk in wav file");
        if (tag_is(b, at, "fmt ")) {
            if (chunk_len < 16) throw WavError("short fmt chunk");
            format = rd_u16(b, body);
            channels = rd_u16(b, body + 2);
            sample_rate = rd_u32(b, body + 4);
            bits = rd_u16(b, body + 14);
            have_fmt = true;
        } else if (tag_is(b, at, "data")) {
            data_at = body;
            data_len = chunk_len;
        }
        at = body + chunk_len + (chunk_len & 1); // chunks are word-aligned
    }

    if (!have_fmt) throw WavError("missing fmt chunk");
    if (data_at == 0) throw WavError("missing data chunk");
    if (channels != 1)
        throw WavError("only mono input is supported, file has " + std::to_string(channels) +
                       " channels");

    AudioBuffer audio;
    audio.sample_rate = static_cast<int>(sample_rate);

    if (format == kFormatPcm && bits == 16) {
        std::size_t n = data_len / 2;
        audio.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            int16_t s = static_cast<int16_t>(rd_u16(b, data_at + 2 * i));
            audio.samples[i] = s / 32768.0;
        }
    } else if (format == kFormatFloat && bits == 32) {
        std::size_t n = data_len / 4;
        audio.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            audio.samples[i] = std::bit_cast<float>(rd_u32(b, data_at + 4 * i));
    } else {
        throw WavError("unsupported sample format (want pcm16 or float32), got format tag " +
                       std::to_string(format) + " with " + std::to_string(bits) + " bits");
    }
    return audio;
}

void write_wav(const std::string& path, const AudioBuffer& audio, WavFormat format) {
    if (audio.sample_rate <= 0) throw WavError("write_wav: nonpositive sample rate");

    const bool pcm = format == WavFormat::pcm16;
    const uint16_t bytes_per = pcm ? 2 : 4;
    const uint32_t data_len = static_cast<uint32_t>(audio.samples.size() * bytes_per);

    std::vector<uint8_t> b;
    b.reserve(44 + data_len);
    wr_tag(b, "RIFF");
    wr_u32(b, 36 + data_len);
    wr_tag(b, "WAVE");
    wr_tag(b, "fmt ");
    wr_u32(b, 16);
    wr_u16(b, pcm ? kFormatPcm : kFormatFloat);
    wr_u16(b, 1); // mono
    wr_u32(b, static_cast<uint32_t>(audio.sample_rate));
    wr_u32(b, static_cast<uint32_t>(audio.sample_rate) * bytes_per);
    wr_u16(b, bytes_per);
    wr_u16(b, pcm ? 16 : 32);
    wr_tag(b, "data");
    wr_u32(b, data_len);

    if (pcm) {
        for (double v : audio.samples) {
            double c = std::max(-1.0, std::min(1.0, v));
            int s = static_cast<int>(std::lrint(c * 32767.0));
            wr_u16(b, static_cast<uint16_t>(static_cast<int16_t>(s)));
        }
    } else {
        for (double v : audio.samples) wr_u32(b, std::bit_cast<uint32_t>(static_cast<float>(v)));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw WavError("cannot open wav file for writing: " + path);
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!f) throw WavError("wav write failed: " + path);
}

} // namespace mbsc
