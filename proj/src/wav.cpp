#include "samgcnn/wav.hpp"

#include <cstring>
#include <fstream>

namespace samgcnn {

namespace {

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("unexpected end of WAV file");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    if (!in) throw FormatError("unexpected end of WAV file");
    return uint16_t(b[0]) | uint16_t(b[1]) << 8;
}

void write_u32(std::ostream& out, uint32_t v) {
    char b[4] = {char(v & 0xff), char(v >> 8 & 0xff), char(v >> 16 & 0xff), char(v >> 24 & 0xff)};
    out.write(b, 4);
}

void write_u16(std::ostream& out, uint16_t v) {
    char b[2] = {char(v & 0xff), char(v >> 8 & 0xff)};
    out.write(b, 2);
}

}  // namespace

AudioClip load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open WAV file: " + path);

    char tag[4];
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw FormatError("not a RIFF file: " + path);
    read_u32(in);  // riff size
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw FormatError("not a WAVE file: " + path);

    uint16_t num_channels = 0;
    uint16_t bits = 0;
    uint32_t sample_rate = 0;
    bool have_fmt = false;
    std::vector<int16_t> pcm;

    while (in.read(tag, 4)) {
        uint32_t chunk_size = read_u32(in);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            uint16_t format = read_u16(in);
            num_channels = read_u16(in);
            sample_rate = read_u32(in);
            read_u32(in);  // byte rate
            read_u16(in);  // block align
            bits = read_u16(in);
            if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
            if (format != 1) throw FormatError("unsupported WAV encoding (expected PCM): " + path);
            if (bits != 16)
                throw FormatError("unsupported bit depth " + std::to_string(bits) +
                                  " (expected 16): " + path);
            if (num_channels < 1 || num_channels > 4)
                throw FormatError("unsupported channel count " + std::to_string(num_channels) +
                                  ": " + path);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw FormatError("WAV data chunk before fmt chunk: " + path);
            size_t n = chunk_size / 2;
            pcm.resize(n);
            in.read(reinterpret_cast<char*>(pcm.data()), static_cast<std::streamsize>(n * 2));
            if (!in) throw FormatError("truncated WAV data chunk: " + path);
            break;
        } else {
            in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
        }
    }
    if (!have_fmt || pcm.empty()) throw FormatError("missing fmt or data chunk: " + path);

    AudioClip clip;
    clip.sample_rate = static_cast<int>(sample_rate);
    Eigen::Index frames = static_cast<Eigen::Index>(pcm.size() / num_channels);
    clip.samples.assign(num_channels, Eigen::VectorXd(frames));
    for (Eigen::Index i = 0; i < frames; ++i)
        for (int c = 0; c < num_channels; ++c)
            clip.samples[c][i] = static_cast<double>(pcm[i * num_channels + c]) / 32768.0;
    return clip;
}

void save_wav(const std::string& path, const AudioClip& clip) {
    if (clip.samples.empty()) throw DegenerateInputError("cannot write WAV with no channels");
    int channels = clip.num_channels();
    Eigen::Index frames = clip.num_samples();
    for (const auto& ch : clip.samples)
        if (ch.size() != frames) throw ShapeError("channel lengths differ");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);

    uint32_t data_bytes = static_cast<uint32_t>(frames) * channels * 2;
    out.write("RIFF", 4);
    write_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 16);
    write_u16(out, 1);  // PCM
    write_u16(out, static_cast<uint16_t>(channels));
    write_u32(out, static_cast<uint32_t>(clip.sample_rate));
    write_u32(out, static_cast<uint32_t>(clip.sample_rate) * channels * 2);
    write_u16(out, static_cast<uint16_t>(channels * 2));
    write_u16(out, 16);
    out.write("data", 4);
    write_u32(out, data_bytes);

    for (Eigen::Index i = 0; i < frames; ++i) {
        for (int c = 0; c < channels; ++c) {
            double v = std::max(-1.0, std::min(1.0, clip.samples[c][i]));
            auto s = static_cast<int16_t>(std::lrint(v * 32767.0));
            write_u16(out, static_cast<uint16_t>(s));
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace samgcnn
