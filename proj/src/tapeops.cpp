#include <cmath>
#include <cstring>
#include <memory>

#include "unitok/error.h"
#include "unitok/fft.h"
#include "unitok/kernels.h"
#include "unitok/tapeops.h"

namespace unitok {

namespace {

const kern::Ops& K() { return kern::ops(); }

struct SpectralCache {
    Tensor re, im, mag;   // (frames, bins)
    std::vector<int> pad_map;
    int fft_size = 0, hop = 0, frames = 0;
    std::vector<float> window;
};

// Shared analysis: reflect-pad via an index map, frame, window, rFFT.
std::shared_ptr<SpectralCache> analyze(const Tensor& wave, int fft_size, int hop, int frames,
                                       const std::vector<int>& pad_map) {
    auto cache = std::make_shared<SpectralCache>();
    cache->fft_size = fft_size;
    cache->hop = hop;
    cache->frames = frames;
    cache->window = make_window("hann", fft_size);
    cache->pad_map = pad_map;
    const int bins = fft_size / 2 + 1;
    cache->re = Tensor({frames, bins});
    cache->im = Tensor({frames, bins});
    cache->mag = Tensor({frames, bins});
    std::vector<float> padded(pad_map.size());
    for (std::size_t i = 0; i < pad_map.size(); ++i) padded[i] = wave.data[std::size_t(pad_map[i])];
    std::vector<float> buf(std::size_t(fft_size) * 2);
    for (int f = 0; f < frames; ++f) {
        const float* src = padded.data() + std::size_t(f) * hop;
        for (int i = 0; i < fft_size; ++i) {
            buf[2 * std::size_t(i)] = src[i] * cache->window[std::size_t(i)];
            buf[2 * std::size_t(i) + 1] = 0.0f;
        }
        fft::transform(buf.data(), fft_size, false);
        float* rr = cache->re.ptr() + std::size_t(f) * bins;
        float* ii = cache->im.ptr() + std::size_t(f) * bins;
        float* mm = cache->mag.ptr() + std::size_t(f) * bins;
        for (int k = 0; k < bins; ++k) {
            rr[k] = buf[2 * std::size_t(k)];
            ii[k] = buf[2 * std::size_t(k) + 1];
            mm[k] = std::hypot(rr[k], ii[k]);
        }
    }
    return cache;
}

// grad wrt spectrum bins -> grad wrt waveform, through iFFT, window,
// frame scatter and the reflect-pad adjoint.
void spectral_backward(const SpectralCache& c, const Tensor& g_re, const Tensor& g_im,
                       Tensor& g_wave) {
    const int bins = c.fft_size / 2 + 1;
    std::vector<double> g_padded(c.pad_map.size(), 0.0);
    std::vector<float> buf(std::size_t(c.fft_size) * 2);
    for (int f = 0; f < c.frames; ++f) {
        const float* gr = g_re.ptr() + std::size_t(f) * bins;
        const float* gi = g_im.ptr() + std::size_t(f) * bins;
        bool any = false;
        for (int k = 0; k < bins && !any; ++k) any = gr[k] != 0.0f || gi[k] != 0.0f;
        if (!any) continue;
        std::memset(buf.data(), 0, buf.size() * sizeof(float));
        for (int k = 0; k < bins; ++k) {
            buf[2 * std::size_t(k)] = gr[k];
            buf[2 * std::size_t(k) + 1] = gi[k];
        }
        fft::transform(buf.data(), c.fft_size, true);  // unnormalized inverse
        const std::size_t base = std::size_t(f) * c.hop;
        for (int i = 0; i < c.fft_size; ++i)
            g_padded[base + std::size_t(i)] +=
                double(buf[2 * std::size_t(i)]) * c.window[std::size_t(i)];
    }
    for (std::size_t i = 0; i < c.pad_map.size(); ++i)
        g_wave.data[std::size_t(c.pad_map[i])] += float(g_padded[i]);
}

}  // namespace

NodeId log_mel_node(Tape& t, NodeId wave, const MelConfig& cfg) {
    const Tensor& w = t.val(wave);
    const int len = int(w.numel());
    const int hop = cfg.hop_samples();
    const int frames = mel_frames_for(len, cfg);
    const int side = (cfg.fft_size - hop) / 2;
    const int right_extra = frames * hop - len;
    const auto pad_map =
        reflect_index_map(len, side, right_extra + (cfg.fft_size - hop - side));
    auto cache = analyze(w, cfg.fft_size, hop, frames, pad_map);

    const int nbins = cfg.fft_size / 2 + 1;
    auto fb = std::make_shared<Tensor>(mel_filterbank(cfg));
    auto mel_pre = std::make_shared<Tensor>(Tensor({frames, cfg.bins}));
    K().gemm_nt(frames, cfg.bins, nbins, 1.0f, cache->mag.ptr(), nbins, fb->ptr(), nbins, 0.0f,
                mel_pre->ptr(), cfg.bins);
    Tensor out({frames, cfg.bins});
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] = std::log(std::max(mel_pre->data[i], cfg.log_floor));

    const float floor_ = cfg.log_floor;
    const int bins_mel = cfg.bins;
    return t.custom(std::move(out), {wave},
                    [wave, cache, fb, mel_pre, frames, bins_mel, nbins, floor_](Tape& tp,
                                                                                NodeId self) {
                        if (!tp.needs_grad(wave)) return;
                        const Tensor& g = tp.grad_buf(self);
                        Tensor g_mel({frames, bins_mel});
                        for (std::size_t i = 0; i < g_mel.numel(); ++i)
                            g_mel.data[i] =
                                mel_pre->data[i] > floor_ ? g.data[i] / mel_pre->data[i] : 0.0f;
                        Tensor g_mag({frames, nbins});
                        K().gemm_nn(frames, nbins, bins_mel, 1.0f, g_mel.ptr(), bins_mel, fb->ptr(),
                                    nbins, 0.0f, g_mag.ptr(), nbins);
                        Tensor g_re({frames, nbins}), g_im({frames, nbins});
                        for (std::size_t i = 0; i < g_mag.numel(); ++i) {
                            const float m = cache->mag.data[i];
                            if (m > 1e-12f) {
                                g_re.data[i] = g_mag.data[i] * cache->re.data[i] / m;
                                g_im.data[i] = g_mag.data[i] * cache->im.data[i] / m;
                            }
                        }
                        spectral_backward(*cache, g_re, g_im, tp.grad_buf(wave));
                    });
}

NodeId log_mag_stft_node(Tape& t, NodeId wave, int fft_size, int hop, float floor_) {
    if (!fft::is_pow2(fft_size)) throw ConfigError("log_mag_stft: fft size must be a power of two");
    if (hop <= 0 || hop > fft_size) throw ConfigError("log_mag_stft: need 0 < hop <= fft size");
    const Tensor& w = t.val(wave);
    const int len = int(w.numel());
    if (len < fft_size) throw DataError("log_mag_stft: input shorter than fft size");
    const int frames = len / hop + 1;
    const auto pad_map = reflect_index_map(len, fft_size / 2, fft_size / 2);
    auto cache = analyze(w, fft_size, hop, frames, pad_map);
    const int bins = fft_size / 2 + 1;
    Tensor out({frames, bins});
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] = std::log(std::max(cache->mag.data[i], floor_));
    return t.custom(std::move(out), {wave}, [wave, cache, frames, bins, floor_](Tape& tp,
                                                                                NodeId self) {
        if (!tp.needs_grad(wave)) return;
        const Tensor& g = tp.grad_buf(self);
        Tensor g_re({frames, bins}), g_im({frames, bins});
        for (std::size_t i = 0; i < g.numel(); ++i) {
            const float m = cache->mag.data[i];
            if (m > floor_) {
                const float gm = g.data[i] / m;
                g_re.data[i] = gm * cache->re.data[i] / m;
                g_im.data[i] = gm * cache->im.data[i] / m;
            }
        }
        spectral_backward(*cache, g_re, g_im, tp.grad_buf(wave));
    });
}

NodeId istft_synth_node(Tape& t, NodeId re, NodeId im, int fft_size, int hop, int crop_start,
                        int out_len) {
    if (!t.val(re).same_shape(t.val(im))) throw DataError("istft_synth: re/im shape mismatch");
    const int frames = t.val(re).dim(0);
    const int bins = t.val(re).dim(1);
    if (bins != fft_size / 2 + 1) throw DataError("istft_synth: bin count mismatch");
    const auto window = make_window("hann", fft_size);
    std::vector<float> y = istft_ola(t.val(re).ptr(), t.val(im).ptr(), frames, fft_size, hop,
                                     window, crop_start, out_len);
    Tensor out({out_len});
    std::memcpy(out.ptr(), y.data(), sizeof(float) * y.size());

    // window-square normalizer, needed again in the adjoint
    const long long buf_len = (long long)(frames - 1) * hop + fft_size;
    auto wsum = std::make_shared<std::vector<double>>(std::size_t(buf_len), 0.0);
    for (int f = 0; f < frames; ++f)
        for (int i = 0; i < fft_size; ++i)
            (*wsum)[std::size_t((long long)f * hop + i)] +=
                double(window[std::size_t(i)]) * window[std::size_t(i)];
    auto win = std::make_shared<std::vector<float>>(window);

    return t.custom(std::move(out), {re, im},
                    [re, im, fft_size, hop, crop_start, out_len, frames, bins, wsum,
                     win](Tape& tp, NodeId self) {
                        const Tensor& g = tp.grad_buf(self);
                        const long long buf_len = (long long)(frames - 1) * hop + fft_size;
                        std::vector<float> g_buf(std::size_t(buf_len), 0.0f);
                        for (int i = 0; i < out_len; ++i)
                            g_buf[std::size_t(crop_start + i)] =
                                float(double(g.data[std::size_t(i)]) /
                                      (*wsum)[std::size_t(crop_start + i)]);
                        const bool need_re = tp.needs_grad(re);
                        const bool need_im = tp.needs_grad(im);
                        Tensor* g_re = need_re ? &tp.grad_buf(re) : nullptr;
                        Tensor* g_im = need_im ? &tp.grad_buf(im) : nullptr;
                        std::vector<float> buf(std::size_t(fft_size) * 2);
                        for (int f = 0; f < frames; ++f) {
                            const std::size_t base = std::size_t(f) * hop;
                            for (int i = 0; i < fft_size; ++i) {
                                buf[2 * std::size_t(i)] =
                                    g_buf[base + std::size_t(i)] * (*win)[std::size_t(i)];
                                buf[2 * std::size_t(i) + 1] = 0.0f;
                            }
                            fft::transform(buf.data(), fft_size, false);
                            for (int k = 0; k < bins; ++k) {
                                const float ck = (k == 0 || k == fft_size / 2) ? 1.0f : 2.0f;
                                const float scale = ck / float(fft_size);
                                if (need_re)
                                    g_re->data[std::size_t(f) * bins + std::size_t(k)] +=
                                        scale * buf[2 * std::size_t(k)];
                                if (need_im)
                                    g_im->data[std::size_t(f) * bins + std::size_t(k)] +=
                                        scale * buf[2 * std::size_t(k) + 1];
                            }
                        }
                    });
}

}  // namespace unitok
