#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "anomarank/audio.hpp"
#include "anomarank/common.hpp"

namespace anomarank {

// RIFF/WAVE, PCM 16-bit little-endian, mono. No resampling, no multichannel,
// no compressed codecs.

namespace wav_detail {

inline std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

}  // namespace wav_detail

inline AudioClip read_wav(const std::filesystem::path& path) {
    using namespace wav_detail;

    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("read_wav: cannot open " + path.string());

    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw DataError("read_wav: not a RIFF/WAVE file: " + path.string());
    }

    bool have_fmt = false;
    std::uint16_t format_tag = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    const unsigned char* data = nullptr;
    std::uint32_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        const std::uint32_t chunk_size = read_u32(hdr + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_size > bytes.size()) throw DataError("read_wav: truncated chunk in " + path.string());

        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_size < 16) throw DataError("read_wav: malformed fmt chunk in " + path.string());
            format_tag = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            sample_rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = chunk_size;
        }
        pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr) throw DataError("read_wav: missing fmt/data chunk in " + path.string());
    if (format_tag != 1) throw DataError("read_wav: unsupported encoding (PCM required): " + path.string());
    if (channels != 1) {
        throw DataError("read_wav: unsupported channel count " + std::to_string(channels) +
                        " (mono required): " + path.string());
    }
    if (bits != 16) throw DataError("read_wav: unsupported bit depth (16-bit required): " + path.string());
    if (sample_rate == 0) throw DataError("read_wav: zero sample rate: " + path.string());

    AudioClip clip;
    clip.sample_rate = static_cast<int>(sample_rate);
    const std::size_t n = data_size / 2;
    if (n == 0) throw DataError("read_wav: empty data chunk: " + path.string());
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::int16_t s = static_cast<std::int16_t>(read_u16(data + 2 * i));
        clip.samples[i] = static_cast<float>(s) / 32768.0f;
    }
    return clip;
}

// Quantization: round-half-away of sample * 32768, saturated to int16.
// This is the exact inverse of the read-side /32768 scaling, so
// write(read(f)) reproduces f's sample data bit-exactly.
inline std::int16_t quantize_sample(float s) {
    const double v = static_cast<double>(s) * 32768.0;
    double r = v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5);
    if (r > 32767.0) r = 32767.0;
    if (r < -32768.0) r = -32768.0;
    return static_cast<std::int16_t>(r);
}

inline void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
    using namespace wav_detail;
    clip.validate();

    const std::uint32_t data_size = static_cast<std::uint32_t>(clip.samples.size() * 2);
    std::vector<unsigned char> out;
    out.reserve(44 + data_size);

    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_size);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});

    out.insert(out.end(), {'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
    put_u16(out, 2);   // block align
    put_u16(out, 16);  // bits per sample

    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_size);
    for (float s : clip.samples) {
        put_u16(out, static_cast<std::uint16_t>(quantize_sample(s)));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("write_wav: cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("write_wav: write failed for " + path.string());
}

}  // namespace anomarank
