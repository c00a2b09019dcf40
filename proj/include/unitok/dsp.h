#pragma once

#include <string>
#include <vector>

#include "unitok/tensor.h"

namespace unitok {

struct Waveform {
    std::vector<float> samples;
    int sample_rate = 0;

    double duration_s() const {
        return sample_rate > 0 ? double(samples.size()) / sample_rate : 0.0;
    }
};

// Raises DataError when samples are empty/non-finite or the rate is invalid.
void validate(const Waveform& w);

// Band-limited (windowed-sinc, Kaiser) polyphase resampling. Identity rates
// return a bitwise copy. Output length is ceil(len * target / source).
Waveform resample(const Waveform& w, int target_sr);

// Scales down iff peak exceeds 1 so that |sample| <= 1 afterwards.
Waveform normalize_peak(const Waveform& w);

struct ComplexSpectrogram {
    Tensor re, im;  // (t_frames, fft_size/2 + 1)
    int fft_size = 0;
    int hop = 0;
    std::string window = "hann";
    int sample_rate = 0;
    int orig_len = 0;  // pre-padding sample count; istft crops back to it

    int frames() const { return re.ndim() ? re.dim(0) : 0; }
    int bins() const { return re.ndim() ? re.dim(1) : 0; }
};

// Center-padded (reflect) STFT: t = floor(len/hop) + 1. Windows: "hann", "rect".
ComplexSpectrogram stft(const Waveform& w, int fft_size, int hop,
                        const std::string& window = "hann");

// Weighted overlap-add inverse; errors when the window/hop pair does not
// satisfy the nonzero overlap-add condition over the output region.
Waveform istft(const ComplexSpectrogram& s);

struct MelConfig {
    std::string name = "ac128";
    int bins = 128;
    int fft_size = 1024;
    double hop_ms = 10.0;
    double fmin = 0.0;
    double fmax = 8000.0;
    int sample_rate = 16000;
    float log_floor = 1e-5f;

    int hop_samples() const;
};

// The two shipped presets: 64-bin (semantic frontend) and 128-bin / 10 ms
// (acoustic frontend). fft 1024, Hann, fmin 0, fmax Nyquist, floor 1e-5.
MelConfig mel_preset_sem64(int sample_rate = 16000);
MelConfig mel_preset_ac128(int sample_rate = 16000);
MelConfig mel_preset(const std::string& name, int sample_rate = 16000);

struct MelSpectrogram {
    Tensor frames;  // (t, bins), natural-log magnitude-mel
    MelConfig cfg;

    int t() const { return frames.ndim() ? frames.dim(0) : 0; }
};

// log(max(fbank * |STFT|, floor)); t = ceil(len / hop).
MelSpectrogram melspec(const Waveform& w, const MelConfig& cfg);

int mel_frames_for(int n_samples, const MelConfig& cfg);

// Slaney-scale triangular filterbank, (bins x (fft/2+1)), and band centers.
Tensor mel_filterbank(const MelConfig& cfg);
std::vector<double> mel_center_freqs(const MelConfig& cfg);

std::vector<float> make_window(const std::string& name, int n);  // periodic

// Shared synthesis core: per-frame inverse rFFT, window, overlap-add with
// window-square normalization, then crop [crop_start, crop_start + out_len).
std::vector<float> istft_ola(const float* re, const float* im, int frames, int fft_size, int hop,
                             const std::vector<float>& window, int crop_start, int out_len);

// Magnitude spectrogram frames of a padded signal laid out as (t, bins);
// shared by melspec, the discriminator frontend and the distance metrics.
Tensor stft_magnitude(const std::vector<float>& padded, int fft_size, int hop, int frames,
                      const std::vector<float>& window);

// Reflect padding helper (librosa-style, no edge duplication).
std::vector<float> pad_reflect(const std::vector<float>& x, int left, int right);
// Source index per padded position (adjoint scatter uses the same map).
std::vector<int> reflect_index_map(int n, int left, int right);

}  // namespace unitok
