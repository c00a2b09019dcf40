#include <cmath>
#include <cstdint>
#include <cstring>

#include "unitok/error.h"
#include "unitok/kernels.h"
#include "unitok/nn.h"

namespace unitok::nn {

namespace {
const kern::Ops& K() { return kern::ops(); }
}

// --- Linear ------------------------------------------------------------------

void Linear::init(Rng& rng, const std::string& name, int in, int out, float gain) {
    W.init_shape(name + ".W", {in, out});
    b.init_shape(name + ".b", {out});
    const double s = gain * std::sqrt(6.0 / double(in + out));
    for (auto& v : W.w.data) v = float(rng.uniform(-s, s));
}

void Linear::init_zero(const std::string& name, int in, int out) {
    W.init_shape(name + ".W", {in, out});
    b.init_shape(name + ".b", {out});
}

NodeId Linear::forward(Tape& t, NodeId x) const {
    return t.linear(x, t.leaf(const_cast<Param&>(W)), t.leaf(const_cast<Param&>(b)));
}

NodeId Linear::forward_frozen(Tape& t, NodeId x) const {
    return t.linear(x, t.frozen(W), t.frozen(b));
}

void Linear::collect(std::vector<Param*>& out) {
    out.push_back(&W);
    out.push_back(&b);
}

void Linear::collect_const(std::vector<const Param*>& out) const {
    out.push_back(&W);
    out.push_back(&b);
}

// --- LayerNorm -----------------------------------------------------------------

void LayerNorm::init(const std::string& name, int d) {
    gamma.init_shape(name + ".gamma", {d});
    beta.init_shape(name + ".beta", {d});
    gamma.w.fill(1.0f);
}

NodeId LayerNorm::forward(Tape& t, NodeId x) const {
    return t.layernorm(x, t.leaf(const_cast<Param&>(gamma)), t.leaf(const_cast<Param&>(beta)), eps);
}

NodeId LayerNorm::forward_frozen(Tape& t, NodeId x) const {
    return t.layernorm(x, t.frozen(gamma), t.frozen(beta), eps);
}

void LayerNorm::collect(std::vector<Param*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

void LayerNorm::collect_const(std::vector<const Param*>& out) const {
    out.push_back(&gamma);
    out.push_back(&beta);
}

// --- MultiHeadAttention -----------------------------------------------------------

void MultiHeadAttention::init(Rng& rng, const std::string& name, int d, int h) {
    if (d % h != 0) throw ConfigError("attention: dim not divisible by heads");
    dim = d;
    heads = h;
    qkv.init(rng, name + ".qkv", d, 3 * d);
    proj.init(rng, name + ".proj", d, d);
}

NodeId MultiHeadAttention::forward(Tape& t, NodeId x, bool frozen) const {
    const int dh = dim / heads;
    NodeId qkv_out = frozen ? qkv.forward_frozen(t, x) : qkv.forward(t, x);
    std::vector<NodeId> head_outs;
    head_outs.reserve(std::size_t(heads));
    const float scale = 1.0f / std::sqrt(float(dh));
    for (int h = 0; h < heads; ++h) {
        NodeId q = t.slice_cols(qkv_out, h * dh, dh);
        NodeId k = t.slice_cols(qkv_out, dim + h * dh, dh);
        NodeId v = t.slice_cols(qkv_out, 2 * dim + h * dh, dh);
        NodeId scores = t.scale(t.matmul_nt(q, k), scale);
        NodeId attn = t.softmax_rows(scores);
        head_outs.push_back(t.matmul(attn, v));
    }
    NodeId merged = heads == 1 ? head_outs[0] : t.concat_cols(head_outs);
    return frozen ? proj.forward_frozen(t, merged) : proj.forward(t, merged);
}

void MultiHeadAttention::collect(std::vector<Param*>& out) {
    qkv.collect(out);
    proj.collect(out);
}

void MultiHeadAttention::collect_const(std::vector<const Param*>& out) const {
    qkv.collect_const(out);
    proj.collect_const(out);
}

// --- TransformerBlock ---------------------------------------------------------------

void TransformerBlock::init(Rng& rng, const std::string& name, int d, int heads, float mlp_ratio) {
    ln1.init(name + ".ln1", d);
    ln2.init(name + ".ln2", d);
    attn.init(rng, name + ".attn", d, heads);
    const int hidden = int(std::lround(double(d) * mlp_ratio));
    fc1.init(rng, name + ".fc1", d, hidden);
    fc2.init(rng, name + ".fc2", hidden, d);
}

NodeId TransformerBlock::forward(Tape& t, NodeId x, bool frozen) const {
    NodeId h1 = frozen ? ln1.forward_frozen(t, x) : ln1.forward(t, x);
    NodeId x2 = t.add(x, attn.forward(t, h1, frozen));
    NodeId h2 = frozen ? ln2.forward_frozen(t, x2) : ln2.forward(t, x2);
    NodeId m = t.gelu(frozen ? fc1.forward_frozen(t, h2) : fc1.forward(t, h2));
    NodeId m2 = frozen ? fc2.forward_frozen(t, m) : fc2.forward(t, m);
    return t.add(x2, m2);
}

void TransformerBlock::collect(std::vector<Param*>& out) {
    ln1.collect(out);
    attn.collect(out);
    ln2.collect(out);
    fc1.collect(out);
    fc2.collect(out);
}

void TransformerBlock::collect_const(std::vector<const Param*>& out) const {
    ln1.collect_const(out);
    attn.collect_const(out);
    ln2.collect_const(out);
    fc1.collect_const(out);
    fc2.collect_const(out);
}

// --- Transformer -----------------------------------------------------------------

void Transformer::init(Rng& rng, const std::string& name, int d, int heads, int layers,
                       float mlp_ratio) {
    blocks.resize(std::size_t(layers));
    for (int i = 0; i < layers; ++i)
        blocks[std::size_t(i)].init(rng, name + ".block" + std::to_string(i), d, heads, mlp_ratio);
    final_ln.init(name + ".final_ln", d);
}

NodeId Transformer::forward(Tape& t, NodeId x, bool frozen) const {
    for (const auto& blk : blocks) x = blk.forward(t, x, frozen);
    return frozen ? final_ln.forward_frozen(t, x) : final_ln.forward(t, x);
}

void Transformer::collect(std::vector<Param*>& out) {
    for (auto& b : blocks) b.collect(out);
    final_ln.collect(out);
}

void Transformer::collect_const(std::vector<const Param*>& out) const {
    for (const auto& b : blocks) b.collect_const(out);
    final_ln.collect_const(out);
}

Tensor sinusoidal_positions(int t, int d) {
    Tensor pe({t, d});
    for (int p = 0; p < t; ++p) {
        for (int i = 0; i < d / 2; ++i) {
            const double freq = std::pow(10000.0, -2.0 * i / double(d));
            pe.data[std::size_t(p) * d + 2 * i] = float(std::sin(p * freq));
            pe.data[std::size_t(p) * d + 2 * i + 1] = float(std::cos(p * freq));
        }
    }
    return pe;
}

// --- dwconv1d -----------------------------------------------------------------

NodeId dwconv1d(Tape& t, NodeId x, NodeId w, NodeId b) {
    const int tt = t.val(x).rows(), d = t.val(x).cols();
    const int k = t.val(w).rows();
    if (t.val(w).cols() != d || int(t.val(b).numel()) != d) throw DataError("dwconv1d: dims");
    if (k % 2 == 0) throw DataError("dwconv1d: kernel must be odd");
    const int pad = k / 2;
    Tensor out({tt, d});
    const float* xp = t.val(x).ptr();
    const float* wp = t.val(w).ptr();
    const float* bp = t.val(b).ptr();
    for (int i = 0; i < tt; ++i) {
        float* o = out.ptr() + std::size_t(i) * d;
        std::memcpy(o, bp, sizeof(float) * std::size_t(d));
        for (int kk = 0; kk < k; ++kk) {
            const int src = i + kk - pad;
            if (src < 0 || src >= tt) continue;
            const float* xr = xp + std::size_t(src) * d;
            const float* wr = wp + std::size_t(kk) * d;
            for (int c = 0; c < d; ++c) o[c] += wr[c] * xr[c];
        }
    }
    return t.custom(std::move(out), {x, w, b}, [x, w, b, tt, d, k, pad](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad_buf(self);
        const float* gp = g.ptr();
        const float* xp = tp.val(x).ptr();
        const float* wp = tp.val(w).ptr();
        if (tp.needs_grad(b)) {
            Tensor& gb = tp.grad_buf(b);
            for (int i = 0; i < tt; ++i)
                K().vadd(std::size_t(d), gb.ptr(), gp + std::size_t(i) * d, gb.ptr());
        }
        if (tp.needs_grad(w)) {
            Tensor& gw = tp.grad_buf(w);
            for (int kk = 0; kk < k; ++kk) {
                float* gwr = gw.ptr() + std::size_t(kk) * d;
                for (int i = 0; i < tt; ++i) {
                    const int src = i + kk - pad;
                    if (src < 0 || src >= tt) continue;
                    const float* xr = xp + std::size_t(src) * d;
                    const float* gr = gp + std::size_t(i) * d;
                    for (int c = 0; c < d; ++c) gwr[c] += gr[c] * xr[c];
                }
            }
        }
        if (tp.needs_grad(x)) {
            Tensor& gx = tp.grad_buf(x);
            for (int i = 0; i < tt; ++i) {
                const float* gr = gp + std::size_t(i) * d;
                for (int kk = 0; kk < k; ++kk) {
                    const int src = i + kk - pad;
                    if (src < 0 || src >= tt) continue;
                    float* gxr = gx.ptr() + std::size_t(src) * d;
                    const float* wr = wp + std::size_t(kk) * d;
                    for (int c = 0; c < d; ++c) gxr[c] += gr[c] * wr[c];
                }
            }
        }
    });
}

// --- transposed conv (x2 upsample) ------------------------------------------------

NodeId conv1d_transpose_x2(Tape& t, NodeId x, NodeId w, NodeId b) {
    // even outputs: X*W1 + shift_down(X)*W3 ; odd outputs: X*W2 + shift_up(X)*W0
    const int tt = t.val(x).rows(), ci = t.val(x).cols();
    if (t.val(w).ndim() != 3 || t.val(w).dim(0) != 4 || t.val(w).dim(1) != ci)
        throw DataError("conv1d_transpose_x2: weight shape");
    const int co = t.val(w).dim(2);
    if (int(t.val(b).numel()) != co) throw DataError("conv1d_transpose_x2: bias");
    const float* xp = t.val(x).ptr();
    const float* wp = t.val(w).ptr();
    const std::size_t ph = std::size_t(ci) * co;  // per-phase weight block
    Tensor out({2 * tt, co});
    for (int i = 0; i < 2 * tt; ++i)
        std::memcpy(out.ptr() + std::size_t(i) * co, t.val(b).ptr(), sizeof(float) * std::size_t(co));
    // even rows (stride 2 starting at 0)
    K().gemm_nn(tt, co, ci, 1.0f, xp, ci, wp + 1 * ph, co, 1.0f, out.ptr(), 2 * co);
    if (tt > 1)
        K().gemm_nn(tt - 1, co, ci, 1.0f, xp, ci, wp + 3 * ph, co, 1.0f, out.ptr() + 2 * std::size_t(co),
                    2 * co);
    // odd rows
    K().gemm_nn(tt, co, ci, 1.0f, xp, ci, wp + 2 * ph, co, 1.0f, out.ptr() + co, 2 * co);
    if (tt > 1)
        K().gemm_nn(tt - 1, co, ci, 1.0f, xp + std::size_t(ci), ci, wp + 0 * ph, co, 1.0f,
                    out.ptr() + co, 2 * co);
    return t.custom(std::move(out), {x, w, b}, [x, w, b, tt, ci, co, ph](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad_buf(self);
        const float* gp = g.ptr();
        const float* xp = tp.val(x).ptr();
        const float* wp = tp.val(w).ptr();
        const int ldg = 2 * co;  // stride between same-parity rows
        const float* ge = gp;            // even rows, tt of them
        const float* go = gp + co;       // odd rows
        if (tp.needs_grad(b)) {
            Tensor& gb = tp.grad_buf(b);
            for (int i = 0; i < 2 * tt; ++i)
                K().vadd(std::size_t(co), gb.ptr(), gp + std::size_t(i) * co, gb.ptr());
        }
        if (tp.needs_grad(x)) {
            Tensor& gx = tp.grad_buf(x);
            K().gemm_nt(tt, ci, co, 1.0f, ge, ldg, wp + 1 * ph, co, 1.0f, gx.ptr(), ci);
            if (tt > 1)
                K().gemm_nt(tt - 1, ci, co, 1.0f, ge + std::size_t(ldg), ldg, wp + 3 * ph, co, 1.0f,
                            gx.ptr(), ci);
            K().gemm_nt(tt, ci, co, 1.0f, go, ldg, wp + 2 * ph, co, 1.0f, gx.ptr(), ci);
            if (tt > 1)
                K().gemm_nt(tt - 1, ci, co, 1.0f, go, ldg, wp + 0 * ph, co, 1.0f,
                            gx.ptr() + std::size_t(ci), ci);
        }
        if (tp.needs_grad(w)) {
            Tensor& gw = tp.grad_buf(w);
            K().gemm_tn(ci, co, tt, 1.0f, xp, ci, ge, ldg, 1.0f, gw.ptr() + 1 * ph, co);
            if (tt > 1)
                K().gemm_tn(ci, co, tt - 1, 1.0f, xp, ci, ge + std::size_t(ldg), ldg, 1.0f,
                            gw.ptr() + 3 * ph, co);
            K().gemm_tn(ci, co, tt, 1.0f, xp, ci, go, ldg, 1.0f, gw.ptr() + 2 * ph, co);
            if (tt > 1)
                K().gemm_tn(ci, co, tt - 1, 1.0f, xp + std::size_t(ci), ci, go, ldg, 1.0f,
                            gw.ptr() + 0 * ph, co);
        }
    });
}

// --- im2col / Conv2d ---------------------------------------------------------------

NodeId im2col(Tape& t, NodeId x, int kh, int kw, int sh, int sw, int ph, int pw) {
    if (t.val(x).ndim() != 3) throw DataError("im2col: expected (h,w,c)");
    const int h = t.val(x).dim(0), w = t.val(x).dim(1), c = t.val(x).dim(2);
    const int oh = (h + 2 * ph - kh) / sh + 1;
    const int ow = (w + 2 * pw - kw) / sw + 1;
    if (oh <= 0 || ow <= 0) throw DataError("im2col: output collapsed; input too small");
    const int patch = kh * kw * c;
    Tensor out({oh * ow, patch});
    const float* xp = t.val(x).ptr();
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            float* dst = out.ptr() + std::size_t(oy * ow + ox) * patch;
            for (int ky = 0; ky < kh; ++ky) {
                const int sy = oy * sh + ky - ph;
                for (int kx = 0; kx < kw; ++kx) {
                    const int sx = ox * sw + kx - pw;
                    float* cell = dst + std::size_t(ky * kw + kx) * c;
                    if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
                        std::memset(cell, 0, sizeof(float) * std::size_t(c));
                    } else {
                        std::memcpy(cell, xp + (std::size_t(sy) * w + sx) * c,
                                    sizeof(float) * std::size_t(c));
                    }
                }
            }
        }
    }
    return t.custom(std::move(out), {x}, [x, kh, kw, sh, sw, ph, pw, h, w, c, oh, ow](Tape& tp,
                                                                                      NodeId self) {
        if (!tp.needs_grad(x)) return;
        const Tensor& g = tp.grad_buf(self);
        Tensor& gx = tp.grad_buf(x);
        const int patch = kh * kw * c;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const float* src = g.ptr() + std::size_t(oy * ow + ox) * patch;
                for (int ky = 0; ky < kh; ++ky) {
                    const int sy = oy * sh + ky - ph;
                    if (sy < 0 || sy >= h) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const int sx = ox * sw + kx - pw;
                        if (sx < 0 || sx >= w) continue;
                        float* dst = gx.ptr() + (std::size_t(sy) * w + sx) * c;
                        const float* cell = src + std::size_t(ky * kw + kx) * c;
                        K().vadd(std::size_t(c), dst, cell, dst);
                    }
                }
            }
        }
    });
}

void Conv2d::init(Rng& rng, const std::string& name, int ci_, int co_, int kh_, int kw_, int sh_,
                  int sw_, int ph_, int pw_) {
    ci = ci_; co = co_; kh = kh_; kw = kw_; sh = sh_; sw = sw_; ph = ph_; pw = pw_;
    W.init_shape(name + ".W", {kh * kw * ci, co});
    b.init_shape(name + ".b", {co});
    const double s = std::sqrt(6.0 / double(kh * kw * ci + co));
    for (auto& v : W.w.data) v = float(rng.uniform(-s, s));
}

NodeId Conv2d::forward(Tape& t, NodeId x) const {
    const int h = t.val(x).dim(0), w = t.val(x).dim(1);
    const int oh = (h + 2 * ph - kh) / sh + 1;
    const int ow = (w + 2 * pw - kw) / sw + 1;
    NodeId cols = im2col(t, x, kh, kw, sh, sw, ph, pw);
    NodeId y = t.linear(cols, t.leaf(const_cast<Param&>(W)), t.leaf(const_cast<Param&>(b)));
    return t.reshape(y, {oh, ow, co});
}

NodeId Conv2d::forward_frozen(Tape& t, NodeId x) const {
    const int h = t.val(x).dim(0), w = t.val(x).dim(1);
    const int oh = (h + 2 * ph - kh) / sh + 1;
    const int ow = (w + 2 * pw - kw) / sw + 1;
    NodeId cols = im2col(t, x, kh, kw, sh, sw, ph, pw);
    NodeId y = t.linear(cols, t.frozen(W), t.frozen(b));
    return t.reshape(y, {oh, ow, co});
}

void Conv2d::collect(std::vector<Param*>& out) {
    out.push_back(&W);
    out.push_back(&b);
}

void Conv2d::collect_const(std::vector<const Param*>& out) const {
    out.push_back(&W);
    out.push_back(&b);
}

// --- AdamW ---------------------------------------------------------------------

void AdamW::init(const std::vector<Param*>& params) {
    step = 0;
    m.clear();
    v.clear();
    for (const Param* p : params) {
        m.emplace_back(p->w.shape);
        v.emplace_back(p->w.shape);
    }
}

void AdamW::update(std::vector<Param*>& params, double lr, double grad_scale) {
    if (m.size() != params.size()) throw Error("AdamW: registry size changed");
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, double(step));
    const double bc2 = 1.0 - std::pow(beta2, double(step));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Param& p = *params[pi];
        float* mp = m[pi].ptr();
        float* vp = v[pi].ptr();
        float* wp = p.w.ptr();
        const float* gp = p.g.ptr();
        const std::size_t n = p.w.numel();
        for (std::size_t i = 0; i < n; ++i) {
            const double g = double(gp[i]) * grad_scale;
            const double mi = beta1 * mp[i] + (1.0 - beta1) * g;
            const double vi = beta2 * vp[i] + (1.0 - beta2) * g * g;
            mp[i] = float(mi);
            vp[i] = float(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            double wd = weight_decay;
            wp[i] = float(double(wp[i]) - lr * (mhat / (std::sqrt(vhat) + eps) + wd * wp[i]));
        }
    }
}

void zero_grads(std::vector<Param*>& params) {
    for (Param* p : params) p->zero_grad();
}

double grad_norm(const std::vector<Param*>& params) {
    double acc = 0;
    for (const Param* p : params)
        for (float g : p->g.data) acc += double(g) * g;
    return std::sqrt(acc);
}

std::size_t param_count(const std::vector<const Param*>& params) {
    std::size_t n = 0;
    for (const Param* p : params) n += p->w.numel();
    return n;
}

std::string hash_params(const std::vector<const Param*>& params) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_bytes = [&h](const void* data, std::size_t len) {
        const unsigned char* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const Param* p : params)
        mix_bytes(p->w.data.data(), p->w.data.size() * sizeof(float));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace unitok::nn
