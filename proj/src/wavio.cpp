#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "unitok/error.h"
#include "unitok/wavio.h"

namespace unitok {

namespace {

struct RiffChunk {
    char id[4];
    uint32_t size;
};

struct FmtInfo {
    uint16_t format = 0;
    uint16_t channels = 0;
    uint32_t sample_rate = 0;
    uint16_t bits = 0;
};

// Walks RIFF chunks; returns fmt plus the data chunk location.
void parse_header(std::ifstream& f, const std::string& path, FmtInfo& fmt,
                  std::streampos& data_pos, uint32_t& data_size) {
    char riff[12];
    if (!f.read(riff, 12) || std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0)
        throw DataError(path + ": not a RIFF/WAVE file");
    bool have_fmt = false, have_data = false;
    while (!have_data || !have_fmt) {
        RiffChunk ch;
        if (!f.read(reinterpret_cast<char*>(&ch), 8)) break;
        if (std::memcmp(ch.id, "fmt ", 4) == 0) {
            std::vector<char> body(ch.size);
            if (!f.read(body.data(), ch.size) || ch.size < 16)
                throw DataError(path + ": truncated fmt chunk");
            std::memcpy(&fmt.format, body.data(), 2);
            std::memcpy(&fmt.channels, body.data() + 2, 2);
            std::memcpy(&fmt.sample_rate, body.data() + 4, 4);
            std::memcpy(&fmt.bits, body.data() + 14, 2);
            if (fmt.format == 0xFFFE && ch.size >= 40)  // WAVE_FORMAT_EXTENSIBLE
                std::memcpy(&fmt.format, body.data() + 24, 2);
            have_fmt = true;
        } else if (std::memcmp(ch.id, "data", 4) == 0) {
            data_pos = f.tellg();
            data_size = ch.size;
            have_data = true;
            f.seekg(ch.size + (ch.size & 1), std::ios::cur);
        } else {
            f.seekg(ch.size + (ch.size & 1), std::ios::cur);
        }
        if (!f) break;
    }
    if (!have_fmt || !have_data) throw DataError(path + ": missing fmt or data chunk");
    if (fmt.channels == 0 || fmt.sample_rate == 0) throw DataError(path + ": bad fmt fields");
    if (!(fmt.format == 1 && fmt.bits == 16) && !(fmt.format == 3 && fmt.bits == 32))
        throw DataError(path + ": unsupported format (want PCM16 or float32)");
}

}  // namespace

WavInfo read_wav_info(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(path + ": cannot open");
    FmtInfo fmt;
    std::streampos data_pos{};
    uint32_t data_size = 0;
    parse_header(f, path, fmt, data_pos, data_size);
    WavInfo info;
    info.sample_rate = int(fmt.sample_rate);
    info.channels = int(fmt.channels);
    info.bits = int(fmt.bits);
    info.frames = (long long)(data_size) / (fmt.channels * (fmt.bits / 8));
    if (info.frames <= 0) throw DataError(path + ": empty data chunk");
    return info;
}

Waveform read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(path + ": cannot open");
    FmtInfo fmt;
    std::streampos data_pos{};
    uint32_t data_size = 0;
    parse_header(f, path, fmt, data_pos, data_size);
    f.clear();
    f.seekg(data_pos);
    const int ch = fmt.channels;
    const long long frames = (long long)(data_size) / (ch * (fmt.bits / 8));
    if (frames <= 0) throw DataError(path + ": empty data chunk");
    Waveform w;
    w.sample_rate = int(fmt.sample_rate);
    w.samples.resize(std::size_t(frames));
    if (fmt.format == 1) {
        std::vector<int16_t> raw(std::size_t(frames) * ch);
        if (!f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * 2)))
            throw DataError(path + ": truncated data chunk");
        for (long long i = 0; i < frames; ++i) {
            double acc = 0;
            for (int c = 0; c < ch; ++c) acc += raw[std::size_t(i * ch + c)] / 32768.0;
            w.samples[std::size_t(i)] = float(acc / ch);
        }
    } else {
        std::vector<float> raw(std::size_t(frames) * ch);
        if (!f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * 4)))
            throw DataError(path + ": truncated data chunk");
        for (long long i = 0; i < frames; ++i) {
            double acc = 0;
            for (int c = 0; c < ch; ++c) acc += raw[std::size_t(i * ch + c)];
            w.samples[std::size_t(i)] = float(acc / ch);
        }
    }
    validate(w);
    return w;
}

void write_wav16(const std::string& path, const Waveform& w) {
    validate(w);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError(path + ": cannot open for write");
    const uint32_t data_size = uint32_t(w.samples.size() * 2);
    const uint32_t riff_size = 36 + data_size;
    uint16_t u16;
    uint32_t u32;
    f.write("RIFF", 4);
    u32 = riff_size;
    f.write(reinterpret_cast<char*>(&u32), 4);
    f.write("WAVEfmt ", 8);
    u32 = 16;
    f.write(reinterpret_cast<char*>(&u32), 4);
    u16 = 1;  // PCM
    f.write(reinterpret_cast<char*>(&u16), 2);
    u16 = 1;  // mono
    f.write(reinterpret_cast<char*>(&u16), 2);
    u32 = uint32_t(w.sample_rate);
    f.write(reinterpret_cast<char*>(&u32), 4);
    u32 = uint32_t(w.sample_rate) * 2;
    f.write(reinterpret_cast<char*>(&u32), 4);
    u16 = 2;
    f.write(reinterpret_cast<char*>(&u16), 2);
    u16 = 16;
    f.write(reinterpret_cast<char*>(&u16), 2);
    f.write("data", 4);
    u32 = data_size;
    f.write(reinterpret_cast<char*>(&u32), 4);
    for (float v : w.samples) {
        const float c = std::max(-1.0f, std::min(1.0f, v));
        const int16_t s = int16_t(std::lround(c * 32767.0f));
        f.write(reinterpret_cast<const char*>(&s), 2);
    }
    if (!f) throw DataError(path + ": write failed");
}

}  // namespace unitok
