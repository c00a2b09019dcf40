#include <cmath>
#include <filesystem>

#include "unitok/error.h"
#include "unitok/synth.h"
#include "unitok/wavio.h"

namespace fs = std::filesystem;

namespace unitok {

namespace {

std::vector<float> white(Rng& rng, std::size_t n) {
    std::vector<float> x(n);
    for (auto& v : x) v = float(rng.uniform(-1, 1));
    return x;
}

// Paul Kellet style pink approximation.
std::vector<float> pink(Rng& rng, std::size_t n) {
    std::vector<float> x(n);
    double b0 = 0, b1 = 0, b2 = 0;
    for (auto& v : x) {
        const double w = rng.uniform(-1, 1);
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
        v = float((b0 + b1 + b2 + w * 0.1848) * 0.2);
    }
    return x;
}

std::vector<float> brown(Rng& rng, std::size_t n) {
    std::vector<float> x(n);
    double acc = 0;
    for (auto& v : x) {
        acc = 0.995 * acc + rng.uniform(-1, 1) * 0.1;
        v = float(acc);
    }
    float peak = 1e-6f;
    for (float v : x) peak = std::max(peak, std::fabs(v));
    for (auto& v : x) v /= peak;
    return x;
}

std::vector<float> colored_noise(Rng& rng, std::size_t n, int color) {
    switch (color) {
        case 0: return white(rng, n);
        case 1: return pink(rng, n);
        default: return brown(rng, n);
    }
}

}  // namespace

Waveform synth_probe_clip(Rng& rng, int sr, double dur_s, std::string* label_out) {
    const std::size_t n = std::size_t(std::lround(dur_s * sr));
    const int pitch = int(rng.below(8));
    const int env = int(rng.below(4));
    const int color = int(rng.below(3));
    const int count = 1 + int(rng.below(4));
    const double f = 200.0 * std::pow(2.0, pitch / 4.0);

    Waveform w;
    w.sample_rate = sr;
    w.samples.resize(n);
    const auto nz = colored_noise(rng, n, color);
    const double phase0 = rng.uniform(0, 2 * M_PI);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = double(i) / sr;
        double e = 1.0;
        if (env == 1) e = t / dur_s;
        else if (env == 2) e = std::exp(-3.0 * t / dur_s);
        else if (env == 3) e = (1.0 + 0.8 * std::sin(2 * M_PI * 5.0 * t)) / 1.8;
        const double tone = 0.45 * e * std::sin(2 * M_PI * f * t + phase0);
        w.samples[i] = float(tone + 0.12 * nz[i]);
    }
    // click events: 10 ms noise bursts, deterministic positions
    for (int k = 0; k < count; ++k) {
        const std::size_t pos = 800 + rng.below(uint64_t(n > 2400 ? n - 2400 : 1));
        const std::size_t len = std::size_t(sr / 100);
        for (std::size_t i = 0; i < len && pos + i < n; ++i) {
            const double fade = std::sin(M_PI * double(i) / double(len));
            w.samples[pos + i] += float(0.8 * fade * rng.uniform(-1, 1));
        }
    }
    w = normalize_peak(w);
    if (label_out)
        *label_out = "pitch:" + std::to_string(pitch) + "|env:" + std::to_string(env) +
                     "|color:" + std::to_string(color) + "|count:" + std::to_string(count - 1);
    return w;
}

Waveform synth_flow4_clip(Rng& rng, int sr, double dur_s, int cls) {
    const std::size_t n = std::size_t(std::lround(dur_s * sr));
    Waveform w;
    w.sample_rate = sr;
    w.samples.assign(n, 0.0f);
    if (cls == 0 || cls == 1) {
        const double base = cls == 0 ? 220.0 : 1500.0;
        const double f = base * (1.0 + rng.uniform(-0.03, 0.03));
        const double phase = rng.uniform(0, 2 * M_PI);
        for (std::size_t i = 0; i < n; ++i)
            w.samples[i] = float(0.5 * std::sin(2 * M_PI * f * double(i) / sr + phase));
    } else if (cls == 2) {
        auto nz = pink(rng, n);
        for (std::size_t i = 0; i < n; ++i) w.samples[i] = 0.5f * nz[i];
    } else {
        const double rate = 10.0;
        const std::size_t period = std::size_t(sr / rate);
        const std::size_t offset = rng.below(period / 2);
        for (std::size_t p = offset; p + 64 < n; p += period)
            for (std::size_t i = 0; i < 64; ++i)
                w.samples[p + i] = float(0.9 * std::exp(-double(i) / 12.0) *
                                         (i % 2 == 0 ? 1.0 : -1.0));
    }
    return w;
}

Waveform synth_speechlike(Rng& rng, int sr, double dur_s) {
    const std::size_t n = std::size_t(std::lround(dur_s * sr));
    const double f0 = rng.uniform(110, 170);
    const double f1 = rng.uniform(420, 700);
    const double f2 = rng.uniform(1200, 1900);
    const double syllable_rate = rng.uniform(2.2, 3.2);
    const double syl_phase = rng.uniform(0, 2 * M_PI);
    const int harmonics = int(3500.0 / f0);

    std::vector<double> amp(std::size_t(harmonics) + 1, 0.0);
    for (int h = 1; h <= harmonics; ++h) {
        const double fh = h * f0;
        amp[std::size_t(h)] = std::exp(-(fh - f1) * (fh - f1) / (2 * 130.0 * 130.0)) +
                              0.7 * std::exp(-(fh - f2) * (fh - f2) / (2 * 180.0 * 180.0)) + 0.06;
    }
    Waveform w;
    w.sample_rate = sr;
    w.samples.resize(n);
    std::vector<double> phases(std::size_t(harmonics) + 1);
    for (auto& p : phases) p = rng.uniform(0, 2 * M_PI);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = double(i) / sr;
        const double vib = 1.0 + 0.02 * std::sin(2 * M_PI * 5.0 * t);
        double s = 0;
        for (int h = 1; h <= harmonics; ++h)
            s += amp[std::size_t(h)] * std::sin(2 * M_PI * h * f0 * vib * t + phases[std::size_t(h)]);
        const double syl = std::pow(std::fabs(std::sin(M_PI * syllable_rate * t + syl_phase)), 0.7);
        w.samples[i] = float(s * syl);
    }
    // one short pause to mimic word boundaries
    const std::size_t pause = n / 3 + rng.below(n / 3);
    const std::size_t plen = std::size_t(0.12 * sr);
    for (std::size_t i = pause; i < std::min(n, pause + plen); ++i) {
        const double fade = 0.5 - 0.5 * std::cos(2 * M_PI * double(i - pause) / double(plen));
        w.samples[i] *= float(1.0 - fade);
    }
    float peak = 1e-6f;
    for (float v : w.samples) peak = std::max(peak, std::fabs(v));
    for (auto& v : w.samples) v *= 0.6f / peak;
    return w;
}

Waveform synth_noise_clip(Rng& rng, int sr, double dur_s, int color) {
    const std::size_t n = std::size_t(std::lround(dur_s * sr));
    auto nz = colored_noise(rng, n, color);
    Waveform w;
    w.sample_rate = sr;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) w.samples[i] = 0.5f * nz[i];
    return w;
}

Manifest generate_corpus(const std::string& out_dir, const SynthOptions& opt) {
    fs::create_directories(out_dir);
    Manifest m;
    Rng rng(opt.seed, "synth-" + opt.kind);
    for (int i = 0; i < opt.count; ++i) {
        Rng clip_rng = rng.fork(uint64_t(i));
        std::string label;
        Waveform w;
        if (opt.kind == "probe") {
            w = synth_probe_clip(clip_rng, opt.sample_rate, opt.dur_s, &label);
        } else if (opt.kind == "flow4") {
            const int cls = i % 4;
            w = synth_flow4_clip(clip_rng, opt.sample_rate, opt.dur_s, cls);
            label = "class:" + std::to_string(cls);
        } else if (opt.kind == "speech") {
            w = synth_speechlike(clip_rng, opt.sample_rate, opt.dur_s);
        } else if (opt.kind == "noise") {
            const int color = i % 3;
            w = synth_noise_clip(clip_rng, opt.sample_rate, opt.dur_s, color);
            label = "color:" + std::to_string(color);
        } else {
            throw ConfigError("unknown synth kind: " + opt.kind);
        }
        char name[64];
        std::snprintf(name, sizeof name, "%s_%04d.wav", opt.kind.c_str(), i);
        const std::string path = (fs::path(out_dir) / name).string();
        write_wav16(path, w);
        ManifestRecord rec;
        rec.path = path;
        rec.duration_s = w.duration_s();
        rec.sample_rate = w.sample_rate;
        rec.label = label;
        rec.split = (i % 5 == 4) ? "test" : "train";
        m.records.push_back(std::move(rec));
    }
    return m;
}

}  // namespace unitok
