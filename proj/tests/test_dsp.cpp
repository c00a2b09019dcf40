#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "testutil.h"
#include "unitok/dsp.h"
#include "unitok/error.h"
#include "unitok/fft.h"

using namespace unitok;

namespace {

Waveform sine(double freq, double dur_s, int sr, double amp = 0.5) {
    Waveform w;
    w.sample_rate = sr;
    w.samples.resize(std::size_t(std::lround(dur_s * sr)));
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        w.samples[i] = float(amp * std::sin(2.0 * M_PI * freq * double(i) / sr));
    return w;
}

Waveform noise(double dur_s, int sr, uint64_t seed, double amp = 0.3) {
    Rng rng(seed, "test-noise");
    Waveform w;
    w.sample_rate = sr;
    w.samples.resize(std::size_t(std::lround(dur_s * sr)));
    for (auto& v : w.samples) v = float(amp * rng.uniform(-1, 1));
    return w;
}

// oracle: O(n^2) DFT magnitude at one bin
double dft_mag(const std::vector<float>& x, int k) {
    std::complex<double> acc(0, 0);
    const int n = int(x.size());
    for (int i = 0; i < n; ++i)
        acc += double(x[std::size_t(i)]) *
               std::exp(std::complex<double>(0, -2.0 * M_PI * k * i / n));
    return std::abs(acc);
}

}  // namespace

TEST_CASE("fft matches direct DFT oracle") {
    Rng rng(21, "fft");
    const int n = 64;
    std::vector<float> buf(2 * n);
    std::vector<std::complex<double>> x(n);
    for (int i = 0; i < n; ++i) {
        buf[2 * std::size_t(i)] = float(rng.uniform(-1, 1));
        buf[2 * std::size_t(i) + 1] = float(rng.uniform(-1, 1));
        x[std::size_t(i)] = {double(buf[2 * std::size_t(i)]), double(buf[2 * std::size_t(i) + 1])};
    }
    auto ref = buf;
    fft::transform(buf.data(), n, false);
    for (int k = 0; k < n; ++k) {
        std::complex<double> acc(0, 0);
        for (int i = 0; i < n; ++i)
            acc += x[std::size_t(i)] * std::exp(std::complex<double>(0, -2.0 * M_PI * k * i / n));
        REQUIRE(buf[2 * std::size_t(k)] == doctest::Approx(acc.real()).epsilon(1e-3));
        REQUIRE(buf[2 * std::size_t(k) + 1] == doctest::Approx(acc.imag()).epsilon(1e-3));
    }
    // inverse round trip (unnormalized inverse)
    fft::transform(buf.data(), n, true);
    for (int i = 0; i < 2 * n; ++i)
        REQUIRE(buf[std::size_t(i)] / n == doctest::Approx(ref[std::size_t(i)]).epsilon(1e-4));
}

TEST_CASE("resample: identity rate is bitwise-identical") {
    auto w = sine(440, 1.0, 16000);
    auto out = resample(w, 16000);
    REQUIRE(out.samples == w.samples);
    REQUIRE(out.sample_rate == 16000);
}

TEST_CASE("resample: 32k->16k keeps the 440 Hz peak") {
    auto w = sine(440, 1.0, 32000);
    auto out = resample(w, 16000);
    REQUIRE(out.samples.size() == 16000);
    // oracle: DFT peak of the resampled signal
    int best = 0;
    double best_mag = -1;
    for (int k = 1; k < 8000; ++k) {
        const double m = dft_mag(out.samples, k);
        if (m > best_mag) {
            best_mag = m;
            best = k;
        }
    }
    REQUIRE(best == 440);  // 1 s of audio: bin == Hz
}

TEST_CASE("resample: 16k->48k length ratio") {
    auto w = sine(440, 1.0, 16000);
    REQUIRE(w.samples.size() == 16000);
    auto out = resample(w, 48000);
    REQUIRE(out.samples.size() == 48000);
}

TEST_CASE("resample: error cases") {
    Waveform empty;
    empty.sample_rate = 16000;
    REQUIRE_THROWS_AS((void)resample(empty, 8000), DataError);
    auto w = sine(440, 0.1, 16000);
    REQUIRE_THROWS_AS((void)resample(w, 0), ConfigError);
    REQUIRE_THROWS_AS((void)resample(w, -5), ConfigError);
}

TEST_CASE("stft: zero signal -> zero spectrogram") {
    Waveform w;
    w.sample_rate = 16000;
    w.samples.assign(4000, 0.0f);
    auto s = stft(w, 512, 128);
    for (float v : s.re.data) REQUIRE(v == 0.0f);
    for (float v : s.im.data) REQUIRE(v == 0.0f);
}

TEST_CASE("stft: unit impulse magnitudes equal window at impulse position") {
    Waveform w;
    w.sample_rate = 16000;
    w.samples.assign(2048, 0.0f);
    w.samples[0] = 1.0f;
    auto s = stft(w, 512, 128);
    // oracle: direct DFT of the windowed frame 0 (impulse lands at pad = 256)
    const auto win = make_window("hann", 512);
    const float expected = win[256];
    for (int k = 0; k < s.bins(); ++k) {
        const double mag = std::hypot(double(s.re.data[std::size_t(k)]),
                                      double(s.im.data[std::size_t(k)]));
        REQUIRE(mag == doctest::Approx(double(expected)).epsilon(1e-4));
    }
}

TEST_CASE("stft: frame count formula") {
    auto w = sine(300, 1.0, 16000);
    auto s = stft(w, 1024, 256);
    // oracle: floor((len + pad_total - fft)/hop) + 1 with pad_total = fft
    const int expected = (16000 + 1024 - 1024) / 256 + 1;
    REQUIRE(expected == 63);
    REQUIRE(s.frames() == 63);
}

TEST_CASE("stft: parseval energy consistency for hann") {
    auto w = noise(0.25, 16000, 99);
    const int n = 1024;
    auto s = stft(w, n, n);  // hop == fft keeps frames window-disjoint in time
    // check frame 1 (fully inside the signal)
    const auto win = make_window("hann", n);
    const auto padded = pad_reflect(w.samples, n / 2, n / 2);
    double time_energy = 0;
    for (int i = 0; i < n; ++i) {
        const double v = double(padded[std::size_t(n + i)]) * win[std::size_t(i)];
        time_energy += v * v;
    }
    double spec_energy = 0;
    const int bins = s.bins();
    for (int k = 0; k < bins; ++k) {
        const double m2 = double(s.re.data[std::size_t(bins + k)]) * s.re.data[std::size_t(bins + k)] +
                          double(s.im.data[std::size_t(bins + k)]) * s.im.data[std::size_t(bins + k)];
        spec_energy += (k == 0 || k == n / 2) ? m2 : 2.0 * m2;
    }
    spec_energy /= n;
    REQUIRE(std::fabs(spec_energy - time_energy) / time_energy < 1e-4);
}

TEST_CASE("stft: hop > fft raises") {
    auto w = sine(440, 0.5, 16000);
    REQUIRE_THROWS_AS((void)stft(w, 512, 513), ConfigError);
    REQUIRE_THROWS_AS((void)stft(w, 500, 100), ConfigError);  // not a power of two
}

TEST_CASE("stft linearity: stft(a*x) == a*stft(x)") {
    auto w = noise(0.3, 16000, 5);
    auto w2 = w;
    for (auto& v : w2.samples) v *= 3.0f;
    auto s1 = stft(w, 512, 128);
    auto s2 = stft(w2, 512, 128);
    for (std::size_t i = 0; i < s1.re.numel(); ++i) {
        REQUIRE(s2.re.data[i] == doctest::Approx(3.0 * s1.re.data[i]).epsilon(1e-5));
        REQUIRE(s2.im.data[i] == doctest::Approx(3.0 * s1.im.data[i]).epsilon(1e-5));
    }
}

TEST_CASE("istft: round trip on white noise") {
    for (int hop : {128, 256}) {
        auto w = noise(1.0, 16000, 42);
        auto rec = istft(stft(w, 1024, hop));
        REQUIRE(rec.samples.size() == w.samples.size());
        float max_err = 0;
        for (std::size_t i = 0; i < w.samples.size(); ++i)
            max_err = std::max(max_err, std::fabs(rec.samples[i] - w.samples[i]));
        REQUIRE(max_err < 1e-5f);
    }
}

TEST_CASE("istft: all-zero spectrogram -> all-zero waveform") {
    auto w = noise(0.5, 16000, 1);
    auto s = stft(w, 512, 128);
    s.re.fill(0.0f);
    s.im.fill(0.0f);
    auto rec = istft(s);
    for (float v : rec.samples) REQUIRE(v == 0.0f);
}

TEST_CASE("istft: non-COLA window/hop raises") {
    auto w = noise(0.5, 16000, 2);
    auto s = stft(w, 512, 512);  // hann at hop == fft has zero overlap-add points
    REQUIRE_THROWS_AS((void)istft(s), DataError);
}

TEST_CASE("melspec: 1 s at 16 kHz with 10 ms hop gives (100, 128)") {
    auto w = sine(440, 1.0, 16000);
    auto m = melspec(w, mel_preset_ac128(16000));
    REQUIRE(m.frames.shape == std::vector<int>({100, 128}));
}

TEST_CASE("melspec: silence hits the log floor everywhere") {
    Waveform w;
    w.sample_rate = 16000;
    w.samples.assign(8000, 0.0f);
    auto cfg = mel_preset_ac128(16000);
    auto m = melspec(w, cfg);
    const float expected = std::log(cfg.log_floor);
    for (float v : m.frames.data) REQUIRE(v == doctest::Approx(expected));
}

TEST_CASE("melspec: 1 kHz sine peaks at the nearest-center mel bin") {
    auto w = sine(1000, 1.0, 16000);
    auto cfg = mel_preset_ac128(16000);
    auto m = melspec(w, cfg);
    // oracle: mel filterbank center frequency table
    const auto centers = mel_center_freqs(cfg);
    int oracle_bin = 0;
    for (int i = 1; i < int(centers.size()); ++i)
        if (std::fabs(centers[std::size_t(i)] - 1000.0) <
            std::fabs(centers[std::size_t(oracle_bin)] - 1000.0))
            oracle_bin = i;
    // argmax of a mid frame
    const int t = m.t() / 2;
    int arg = 0;
    for (int b = 1; b < cfg.bins; ++b)
        if (m.frames.data[std::size_t(t) * cfg.bins + std::size_t(b)] >
            m.frames.data[std::size_t(t) * cfg.bins + std::size_t(arg)])
            arg = b;
    REQUIRE(arg == oracle_bin);
}

TEST_CASE("melspec: fmax above Nyquist raises") {
    auto w = sine(440, 0.5, 16000);
    auto cfg = mel_preset_ac128(16000);
    cfg.fmax = 9000.0;
    REQUIRE_THROWS_AS((void)melspec(w, cfg), ConfigError);
}

TEST_CASE("melspec monotonicity: louder never decreases any log-mel value") {
    Rng rng(77, "mono");
    for (int trial = 0; trial < 5; ++trial) {
        auto w = noise(0.3, 16000, 100 + uint64_t(trial));
        auto w2 = w;
        const float c = float(rng.uniform(1.5, 4.0));
        for (auto& v : w2.samples) v *= c;
        auto cfg = mel_preset_sem64(16000);
        auto m1 = melspec(w, cfg);
        auto m2 = melspec(w2, cfg);
        for (std::size_t i = 0; i < m1.frames.numel(); ++i)
            REQUIRE(m2.frames.data[i] >= m1.frames.data[i] - 1e-6f);
    }
}

TEST_CASE("frame-count determinism across random lengths") {
    Rng rng(31, "framecount");
    auto cfg = mel_preset_ac128(16000);
    for (int i = 0; i < 50; ++i) {
        const int len = int(rng.uniform(1600, 160000));
        const int hop = cfg.hop_samples();
        REQUIRE(mel_frames_for(len, cfg) == (len + hop - 1) / hop);
        Waveform w;
        w.sample_rate = 16000;
        w.samples.assign(std::size_t(len), 0.01f);
        REQUIRE(melspec(w, cfg).t() == mel_frames_for(len, cfg));
    }
}

TEST_CASE("normalize: clamps peaks above one") {
    Waveform w;
    w.sample_rate = 16000;
    w.samples = {0.5f, -2.0f, 1.0f};
    auto out = normalize_peak(w);
    for (float v : out.samples) REQUIRE(std::fabs(v) <= 1.0f);
    REQUIRE(out.samples[1] == doctest::Approx(-1.0));
}

#include "unitok/tapeops.h"

TEST_CASE("log_mel_node forward matches melspec bit-for-bit") {
    auto w = sine(700, 0.53, 16000);
    auto cfg = mel_preset_ac128(16000);
    auto ref = melspec(w, cfg);
    Tape t;
    NodeId node = log_mel_node(t, t.constant(Tensor({int(w.samples.size())}, w.samples)), cfg);
    REQUIRE(t.val(node).shape == ref.frames.shape);
    REQUIRE(t.val(node).data == ref.frames.data);
}

TEST_CASE("log_mel_node gradcheck on a tiny config") {
    Rng rng(15, "mel-fd");
    MelConfig cfg;
    cfg.bins = 8;
    cfg.fft_size = 64;
    cfg.hop_ms = 10.0;
    cfg.sample_rate = 800;  // hop = 8 samples
    cfg.fmin = 0;
    cfg.fmax = 400;
    cfg.log_floor = 1e-5f;
    Tensor wave = testutil::random_tensor(rng, {160}, -0.8, 0.8);
    auto stats = testutil::fd_check(
        [&](Tape& t, const std::vector<NodeId>& in) {
            return t.l1(log_mel_node(t, in[0], cfg),
                        t.constant(Tensor({20, 8}, -1.0f)));
        },
        {wave}, 1e-3);
    CAPTURE(stats.worst);
    REQUIRE(stats.frac_below(1e-3) >= 0.95);
    REQUIRE(stats.worst < 1e-2);
}

TEST_CASE("log_mag_stft_node gradcheck") {
    Rng rng(16, "stft-fd");
    Tensor wave = testutil::random_tensor(rng, {200}, -0.8, 0.8);
    auto stats = testutil::fd_check(
        [&](Tape& t, const std::vector<NodeId>& in) {
            return t.l1(log_mag_stft_node(t, in[0], 64, 16),
                        t.constant(Tensor({13, 33}, -1.0f)));
        },
        {wave}, 1e-3);
    CAPTURE(stats.worst);
    REQUIRE(stats.frac_below(1e-3) >= 0.95);
    REQUIRE(stats.worst < 1e-2);
}

TEST_CASE("log_mag_stft_node rejects too-short input") {
    Tape t;
    NodeId wave = t.constant(Tensor({32}, 0.1f));
    REQUIRE_THROWS_AS((void)log_mag_stft_node(t, wave, 64, 16), DataError);
}

TEST_CASE("istft_synth_node: length contract and gradcheck") {
    Rng rng(17, "istft-fd");
    const int fft = 64, hop = 16, frames = 6;
    const int bins = fft / 2 + 1;
    Tensor re = testutil::random_tensor(rng, {frames, bins});
    Tensor im = testutil::random_tensor(rng, {frames, bins});
    Tape t;
    NodeId y = istft_synth_node(t, t.constant(re), t.constant(im), fft, hop, (fft - hop) / 2,
                                frames * hop);
    REQUIRE(t.val(y).shape == std::vector<int>({frames * hop}));
    auto stats = testutil::fd_check(
        [&](Tape& t2, const std::vector<NodeId>& in) {
            NodeId out = istft_synth_node(t2, in[0], in[1], fft, hop, (fft - hop) / 2, frames * hop);
            return t2.mse(out, t2.constant(Tensor({frames * hop}, 0.02f)));
        },
        {re, im}, 1e-3);
    CAPTURE(stats.worst);
    REQUIRE(stats.frac_below(1e-3) >= 0.95);
    REQUIRE(stats.worst < 1e-2);
}

TEST_CASE("istft_synth_node inverts stft-style analysis through the tape") {
    // build frames with analyze-style stft of a known signal, synthesize, compare mid region
    auto w = noise(0.1, 16000, 55);
    auto s = stft(w, 256, 64);
    Tape t;
    NodeId y = istft_synth_node(t, t.constant(s.re), t.constant(s.im), 256, 64, 128,
                                int(w.samples.size()));
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        REQUIRE(t.val(y).data[i] == doctest::Approx(double(w.samples[i])).epsilon(2e-4));
}
