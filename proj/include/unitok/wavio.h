#pragma once

#include <string>

#include "unitok/dsp.h"

namespace unitok {

// PCM WAV reader: 16-bit integer and 32-bit float, mono or downmixed to mono.
Waveform read_wav(const std::string& path);

// Basic header probe without decoding samples (used by ingest).
struct WavInfo {
    int sample_rate = 0;
    int channels = 0;
    int bits = 0;
    long long frames = 0;
    double duration_s() const { return sample_rate > 0 ? double(frames) / sample_rate : 0.0; }
};
WavInfo read_wav_info(const std::string& path);

void write_wav16(const std::string& path, const Waveform& w);

}  // namespace unitok
