#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "unitok/dsp.h"
#include "unitok/error.h"
#include "unitok/fft.h"
#include "unitok/kernels.h"

namespace unitok {

namespace {

double bessel_i0(double x) {
    // power series; converges quickly for the beta values used here
    double sum = 1.0, term = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= (x / (2.0 * k)) * (x / (2.0 * k));
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::fabs(x) < 1e-12) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

long long gcd_ll(long long a, long long b) { return b ? gcd_ll(b, a % b) : a; }

}  // namespace

void validate(const Waveform& w) {
    if (w.samples.empty()) throw DataError("waveform: empty");
    if (w.sample_rate <= 0) throw DataError("waveform: non-positive sample rate");
    for (float v : w.samples)
        if (!std::isfinite(v)) throw DataError("waveform: non-finite sample");
}

Waveform normalize_peak(const Waveform& w) {
    validate(w);
    float peak = 0.0f;
    for (float v : w.samples) peak = std::max(peak, std::fabs(v));
    if (peak <= 1.0f) return w;
    Waveform out = w;
    const float s = 1.0f / peak;
    for (auto& v : out.samples) v *= s;
    return out;
}

Waveform resample(const Waveform& w, int target_sr) {
    if (target_sr <= 0) throw ConfigError("resample: target rate must be positive");
    validate(w);
    if (target_sr == w.sample_rate) return w;

    const long long g = gcd_ll(w.sample_rate, target_sr);
    const long long up = target_sr / g, down = w.sample_rate / g;
    const long long in_len = (long long)w.samples.size();
    const long long out_len = (in_len * up + down - 1) / down;

    // cutoff as a fraction of the input Nyquist
    const double c = std::min(1.0, double(up) / double(down));
    const double zero_crossings = 24.0;
    const double half_width = zero_crossings / c;
    const double beta = 9.0;
    const double i0b = bessel_i0(beta);

    Waveform out;
    out.sample_rate = target_sr;
    out.samples.resize(std::size_t(out_len));
    const float* x = w.samples.data();
    for (long long n = 0; n < out_len; ++n) {
        const long long num = n * down;
        const double tau = double(num) / double(up);  // center in input coordinates
        const long long j0 = (long long)std::ceil(tau - half_width);
        const long long j1 = (long long)std::floor(tau + half_width);
        double acc = 0.0;
        for (long long j = std::max(j0, 0LL); j <= std::min(j1, in_len - 1); ++j) {
            const double t = double(j) - tau;
            const double u = t / half_width;
            const double win = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0b;
            acc += double(x[j]) * c * sinc(c * t) * win;
        }
        out.samples[std::size_t(n)] = float(acc);
    }
    return out;
}

std::vector<float> make_window(const std::string& name, int n) {
    std::vector<float> win(static_cast<std::size_t>(n));
    if (name == "hann") {
        for (int i = 0; i < n; ++i)
            win[std::size_t(i)] = float(0.5 - 0.5 * std::cos(2.0 * M_PI * i / n));
    } else if (name == "rect") {
        std::fill(win.begin(), win.end(), 1.0f);
    } else {
        throw ConfigError("unknown window: " + name);
    }
    return win;
}

std::vector<int> reflect_index_map(int n, int left, int right) {
    std::vector<int> map(std::size_t(n + left + right));
    for (int i = 0; i < n + left + right; ++i) {
        const long long pos = (long long)i - left;
        long long m;
        if (n == 1) {
            m = 0;
        } else {
            const long long period = 2LL * (n - 1);
            m = ((pos % period) + period) % period;
            if (m >= n) m = period - m;
        }
        map[std::size_t(i)] = int(m);
    }
    return map;
}

std::vector<float> pad_reflect(const std::vector<float>& x, int left, int right) {
    const auto map = reflect_index_map(int(x.size()), left, right);
    std::vector<float> out(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = x[std::size_t(map[i])];
    return out;
}

Tensor stft_magnitude(const std::vector<float>& padded, int fft_size, int hop, int frames,
                      const std::vector<float>& window) {
    const int bins = fft_size / 2 + 1;
    Tensor mag({frames, bins});
    std::vector<float> buf(std::size_t(fft_size) * 2);
    for (int f = 0; f < frames; ++f) {
        const float* src = padded.data() + std::size_t(f) * hop;
        for (int i = 0; i < fft_size; ++i) {
            buf[2 * std::size_t(i)] = src[i] * window[std::size_t(i)];
            buf[2 * std::size_t(i) + 1] = 0.0f;
        }
        fft::transform(buf.data(), fft_size, false);
        float* m = mag.ptr() + std::size_t(f) * bins;
        for (int k = 0; k < bins; ++k)
            m[k] = std::hypot(buf[2 * std::size_t(k)], buf[2 * std::size_t(k) + 1]);
    }
    return mag;
}

ComplexSpectrogram stft(const Waveform& w, int fft_size, int hop, const std::string& window) {
    validate(w);
    if (!fft::is_pow2(fft_size)) throw ConfigError("stft: fft size must be a power of two");
    if (hop <= 0 || hop > fft_size) throw ConfigError("stft: need 0 < hop <= fft size");
    const int len = int(w.samples.size());
    const auto win = make_window(window, fft_size);
    const auto padded = pad_reflect(w.samples, fft_size / 2, fft_size / 2);
    const int frames = len / hop + 1;

    ComplexSpectrogram s;
    s.fft_size = fft_size;
    s.hop = hop;
    s.window = window;
    s.sample_rate = w.sample_rate;
    s.orig_len = len;
    const int bins = fft_size / 2 + 1;
    s.re = Tensor({frames, bins});
    s.im = Tensor({frames, bins});
    std::vector<float> buf(std::size_t(fft_size) * 2);
    for (int f = 0; f < frames; ++f) {
        const float* src = padded.data() + std::size_t(f) * hop;
        for (int i = 0; i < fft_size; ++i) {
            buf[2 * std::size_t(i)] = src[i] * win[std::size_t(i)];
            buf[2 * std::size_t(i) + 1] = 0.0f;
        }
        fft::transform(buf.data(), fft_size, false);
        float* rr = s.re.ptr() + std::size_t(f) * bins;
        float* ii = s.im.ptr() + std::size_t(f) * bins;
        for (int k = 0; k < bins; ++k) {
            rr[k] = buf[2 * std::size_t(k)];
            ii[k] = buf[2 * std::size_t(k) + 1];
        }
    }
    return s;
}

std::vector<float> istft_ola(const float* re, const float* im, int frames, int fft_size, int hop,
                             const std::vector<float>& window, int crop_start, int out_len) {
    const int bins = fft_size / 2 + 1;
    const long long buf_len = (long long)(frames - 1) * hop + fft_size;
    std::vector<double> acc(std::size_t(buf_len), 0.0);
    std::vector<double> wsum(std::size_t(buf_len), 0.0);
    std::vector<float> spec(std::size_t(fft_size) * 2);
    for (int f = 0; f < frames; ++f) {
        const float* rr = re + std::size_t(f) * bins;
        const float* ii = im + std::size_t(f) * bins;
        // hermitian extension
        for (int k = 0; k < bins; ++k) {
            spec[2 * std::size_t(k)] = rr[k];
            spec[2 * std::size_t(k) + 1] = ii[k];
        }
        for (int k = bins; k < fft_size; ++k) {
            spec[2 * std::size_t(k)] = rr[fft_size - k];
            spec[2 * std::size_t(k) + 1] = -ii[fft_size - k];
        }
        fft::transform(spec.data(), fft_size, true);
        const long long base = (long long)f * hop;
        for (int i = 0; i < fft_size; ++i) {
            const double v = double(spec[2 * std::size_t(i)]) / fft_size;
            const double wv = window[std::size_t(i)];
            acc[std::size_t(base + i)] += v * wv;
            wsum[std::size_t(base + i)] += wv * wv;
        }
    }
    if (crop_start < 0 || (long long)crop_start + out_len > buf_len)
        throw DataError("istft: crop out of range");
    std::vector<float> out(static_cast<std::size_t>(out_len));
    for (int i = 0; i < out_len; ++i) {
        const double den = wsum[std::size_t(crop_start + i)];
        if (den < 1e-8)
            throw DataError("istft: window/hop pair violates nonzero overlap-add (COLA) condition");
        out[std::size_t(i)] = float(acc[std::size_t(crop_start + i)] / den);
    }
    return out;
}

Waveform istft(const ComplexSpectrogram& s) {
    if (s.frames() <= 0) throw DataError("istft: empty spectrogram");
    const auto win = make_window(s.window, s.fft_size);
    const int out_len = s.orig_len > 0 ? s.orig_len : (s.frames() - 1) * s.hop;
    Waveform w;
    w.sample_rate = s.sample_rate;
    w.samples = istft_ola(s.re.ptr(), s.im.ptr(), s.frames(), s.fft_size, s.hop, win,
                          s.fft_size / 2, out_len);
    return w;
}

int MelConfig::hop_samples() const {
    const double h = hop_ms * sample_rate / 1000.0;
    const int hi = int(std::lround(h));
    if (hi <= 0 || std::fabs(h - hi) > 1e-9)
        throw ConfigError("mel: hop_ms does not map to integer samples");
    return hi;
}

MelConfig mel_preset_sem64(int sample_rate) {
    MelConfig c;
    c.name = "sem64";
    c.bins = 64;
    c.fft_size = 1024;
    c.hop_ms = 10.0;
    c.fmin = 0.0;
    c.fmax = sample_rate / 2.0;
    c.sample_rate = sample_rate;
    c.log_floor = 1e-5f;
    return c;
}

MelConfig mel_preset_ac128(int sample_rate) {
    MelConfig c = mel_preset_sem64(sample_rate);
    c.name = "ac128";
    c.bins = 128;
    return c;
}

MelConfig mel_preset(const std::string& name, int sample_rate) {
    if (name == "sem64") return mel_preset_sem64(sample_rate);
    if (name == "ac128") return mel_preset_ac128(sample_rate);
    throw ConfigError("unknown mel preset: " + name);
}

namespace {

// Slaney mel scale (linear below 1 kHz, log above).
double hz_to_mel(double f) {
    const double f_sp = 200.0 / 3.0;
    const double min_log_hz = 1000.0;
    const double min_log_mel = min_log_hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    return f < min_log_hz ? f / f_sp : min_log_mel + std::log(f / min_log_hz) / logstep;
}

double mel_to_hz(double m) {
    const double f_sp = 200.0 / 3.0;
    const double min_log_hz = 1000.0;
    const double min_log_mel = min_log_hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    return m < min_log_mel ? m * f_sp : min_log_hz * std::exp(logstep * (m - min_log_mel));
}

std::vector<double> mel_band_edges(const MelConfig& cfg) {
    std::vector<double> hz(std::size_t(cfg.bins) + 2);
    const double m_lo = hz_to_mel(cfg.fmin), m_hi = hz_to_mel(cfg.fmax);
    for (int i = 0; i < cfg.bins + 2; ++i)
        hz[std::size_t(i)] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (cfg.bins + 1));
    return hz;
}

}  // namespace

std::vector<double> mel_center_freqs(const MelConfig& cfg) {
    auto hz = mel_band_edges(cfg);
    return std::vector<double>(hz.begin() + 1, hz.end() - 1);
}

Tensor mel_filterbank(const MelConfig& cfg) {
    if (cfg.fmax > cfg.sample_rate / 2.0 + 1e-9)
        throw ConfigError("mel: fmax above Nyquist");
    const int nbins = cfg.fft_size / 2 + 1;
    const auto hz = mel_band_edges(cfg);
    Tensor fb({cfg.bins, nbins});
    for (int m = 0; m < cfg.bins; ++m) {
        const double left = hz[std::size_t(m)], center = hz[std::size_t(m) + 1],
                     right = hz[std::size_t(m) + 2];
        const double norm = 2.0 / (right - left);  // Slaney area normalization
        for (int k = 0; k < nbins; ++k) {
            const double f = double(k) * cfg.sample_rate / cfg.fft_size;
            double v = 0.0;
            if (f >= left && f <= center && center > left)
                v = (f - left) / (center - left);
            else if (f > center && f <= right && right > center)
                v = (right - f) / (right - center);
            fb.data[std::size_t(m) * nbins + std::size_t(k)] = float(v * norm);
        }
    }
    return fb;
}

int mel_frames_for(int n_samples, const MelConfig& cfg) {
    const int hop = cfg.hop_samples();
    return (n_samples + hop - 1) / hop;
}

MelSpectrogram melspec(const Waveform& w, const MelConfig& cfg) {
    validate(w);
    if (w.sample_rate != cfg.sample_rate)
        throw DataError("melspec: waveform rate does not match mel config");
    if (cfg.fmax > cfg.sample_rate / 2.0 + 1e-9) throw ConfigError("melspec: fmax above Nyquist");
    const int hop = cfg.hop_samples();
    const int t = mel_frames_for(int(w.samples.size()), cfg);

    // reflect-pad: center by (fft-hop)/2 plus right extension to a hop
    // multiple, so t = ceil(len/hop)
    const int side = (cfg.fft_size - hop) / 2;
    const int right_extra = t * hop - int(w.samples.size());
    auto padded =
        pad_reflect(w.samples, side, right_extra + (cfg.fft_size - hop - side));

    const auto win = make_window("hann", cfg.fft_size);
    Tensor mag = stft_magnitude(padded, cfg.fft_size, hop, t, win);

    const Tensor fb = mel_filterbank(cfg);
    const int nbins = cfg.fft_size / 2 + 1;
    MelSpectrogram out;
    out.cfg = cfg;
    out.frames = Tensor({t, cfg.bins});
    // mel = mag * fb^T
    kern::ops().gemm_nt(t, cfg.bins, nbins, 1.0f, mag.ptr(), nbins, fb.ptr(), nbins, 0.0f,
                        out.frames.ptr(), cfg.bins);
    for (auto& v : out.frames.data) v = std::log(std::max(v, cfg.log_floor));
    return out;
}

}  // namespace unitok
