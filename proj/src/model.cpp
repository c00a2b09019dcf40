#include <cmath>
#include <cstring>

#include "unitok/error.h"
#include "unitok/kernels.h"
#include "unitok/model.h"

namespace unitok {

const char* role_name(FeatureRole r) {
    switch (r) {
        case FeatureRole::semantic: return "semantic";
        case FeatureRole::acoustic: return "acoustic";
        default: return "unified";
    }
}

FeatureRole role_from_name(const std::string& s) {
    if (s == "semantic") return FeatureRole::semantic;
    if (s == "acoustic") return FeatureRole::acoustic;
    if (s == "unified") return FeatureRole::unified;
    throw ConfigError("unknown feature role: " + s);
}

Tensor patch_rows(const MelSpectrogram& mel, int patch_frames) {
    const int t_mel = mel.t();
    const int bins = mel.cfg.bins;
    const int tokens = (t_mel + patch_frames - 1) / patch_frames;
    const float pad_value = std::log(mel.cfg.log_floor);
    Tensor out({tokens, patch_frames * bins});
    for (int tok = 0; tok < tokens; ++tok) {
        float* row = out.ptr() + std::size_t(tok) * patch_frames * bins;
        for (int f = 0; f < patch_frames; ++f) {
            const int src = tok * patch_frames + f;
            float* dst = row + std::size_t(f) * bins;
            if (src < t_mel) {
                std::memcpy(dst, mel.frames.ptr() + std::size_t(src) * bins,
                            sizeof(float) * std::size_t(bins));
            } else {
                for (int b = 0; b < bins; ++b) dst[b] = pad_value;
            }
        }
    }
    return out;
}

// --- SemanticEncoder ---------------------------------------------------------

void SemanticEncoder::init(Rng& rng, const RunConfig& cfg) {
    dim = cfg.model.dim;
    patch_frames = cfg.model.patch_frames;
    mel_cfg = mel_preset_sem64(cfg.sample_rate);
    mel_cfg.fft_size = cfg.mel.fft;
    mel_cfg.hop_ms = cfg.mel.hop_ms;
    mel_cfg.fmin = cfg.mel.fmin;
    mel_cfg.fmax = cfg.mel.fmax;
    mel_cfg.log_floor = float(cfg.mel.log_floor);
    patch.init(rng, "sem.patch", patch_frames * mel_cfg.bins, dim);
    trunk.init(rng, "sem.trunk", dim, cfg.model.sem_heads, cfg.model.sem_layers,
               float(cfg.model.sem_mlp_ratio));
}

NodeId SemanticEncoder::forward(Tape& t, const MelSpectrogram& mel, bool trainable) const {
    NodeId rows = t.constant(patch_rows(mel, patch_frames));
    NodeId x = trainable ? patch.forward(t, rows) : patch.forward_frozen(t, rows);
    NodeId pos = t.constant(nn::sinusoidal_positions(t.val(x).dim(0), dim));
    x = t.add(x, pos);
    return trunk.forward(t, x, !trainable);
}

std::string SemanticEncoder::hash() const {
    std::vector<const Param*> ps;
    collect_const(ps);
    return nn::hash_params(ps);
}

void SemanticEncoder::collect(std::vector<Param*>& out) {
    patch.collect(out);
    trunk.collect(out);
}

void SemanticEncoder::collect_const(std::vector<const Param*>& out) const {
    patch.collect_const(out);
    trunk.collect_const(out);
}

// --- AcousticEncoder ---------------------------------------------------------

void AcousticEncoder::init(Rng& rng, const RunConfig& cfg) {
    dim = cfg.model.dim;
    patch_frames = cfg.model.patch_frames;
    mel_cfg = mel_preset_ac128(cfg.sample_rate);
    mel_cfg.fft_size = cfg.mel.fft;
    mel_cfg.hop_ms = cfg.mel.hop_ms;
    mel_cfg.fmin = cfg.mel.fmin;
    mel_cfg.fmax = cfg.mel.fmax;
    mel_cfg.log_floor = float(cfg.mel.log_floor);
    proj.init(rng, "ac.proj", patch_frames * mel_cfg.bins, dim);
    ln.init("ac.ln", dim);  // affine at identity: layernorm stats hold at init
}

NodeId AcousticEncoder::forward(Tape& t, const MelSpectrogram& mel, bool frozen) const {
    NodeId rows = t.constant(patch_rows(mel, patch_frames));
    NodeId x = frozen ? proj.forward_frozen(t, rows) : proj.forward(t, rows);
    return frozen ? ln.forward_frozen(t, x) : ln.forward(t, x);
}

void AcousticEncoder::collect(std::vector<Param*>& out) {
    proj.collect(out);
    ln.collect(out);
}

void AcousticEncoder::collect_const(std::vector<const Param*>& out) const {
    proj.collect_const(out);
    ln.collect_const(out);
}

// --- Decoder ------------------------------------------------------------------

void Decoder::init(Rng& rng, const RunConfig& cfg) {
    dim = cfg.model.dim;
    head_fft = cfg.model.head_fft;
    head_hop = unitok::head_hop(cfg);
    kernel = cfg.model.dec_kernel;
    up_w.init_shape("dec.up.W", {4, dim, dim});
    up_b.init_shape("dec.up.b", {dim});
    {
        const double s = std::sqrt(6.0 / double(4 * dim + dim));
        for (auto& v : up_w.w.data) v = float(rng.uniform(-s, s));
    }
    in_ln.init("dec.in_ln", dim);
    blocks.resize(std::size_t(cfg.model.dec_blocks));
    for (int i = 0; i < cfg.model.dec_blocks; ++i) {
        auto& b = blocks[std::size_t(i)];
        const std::string name = "dec.block" + std::to_string(i);
        b.dw_w.init_shape(name + ".dw.W", {kernel, dim});
        b.dw_b.init_shape(name + ".dw.b", {dim});
        const double s = std::sqrt(6.0 / double(kernel + 1));
        for (auto& v : b.dw_w.w.data) v = float(rng.uniform(-s, s));
        b.ln.init(name + ".ln", dim);
        const int hidden = int(std::lround(dim * cfg.model.dec_mlp_ratio));
        b.pw1.init(rng, name + ".pw1", dim, hidden);
        b.pw2.init(rng, name + ".pw2", hidden, dim);
    }
    final_ln.init("dec.final_ln", dim);
    head.init(rng, "dec.head", dim, 2 * (head_fft / 2 + 1));
}

NodeId Decoder::forward(Tape& t, NodeId z, bool frozen) const {
    if (t.val(z).cols() != dim) throw DataError("decode: latent dim mismatch");
    const int frames50 = 2 * t.val(z).rows();
    auto P = [&](const Param& p) {
        return frozen ? t.frozen(p) : t.leaf(const_cast<Param&>(p));
    };
    NodeId x = nn::conv1d_transpose_x2(t, z, P(up_w), P(up_b));
    x = frozen ? in_ln.forward_frozen(t, x) : in_ln.forward(t, x);
    for (const auto& b : blocks) {
        NodeId h = nn::dwconv1d(t, x, P(b.dw_w), P(b.dw_b));
        h = frozen ? b.ln.forward_frozen(t, h) : b.ln.forward(t, h);
        h = t.gelu(frozen ? b.pw1.forward_frozen(t, h) : b.pw1.forward(t, h));
        h = frozen ? b.pw2.forward_frozen(t, h) : b.pw2.forward(t, h);
        x = t.add(x, h);
    }
    x = frozen ? final_ln.forward_frozen(t, x) : final_ln.forward(t, x);
    NodeId hd = frozen ? head.forward_frozen(t, x) : head.forward(t, x);
    const int bins = head_fft / 2 + 1;
    NodeId m = t.slice_cols(hd, 0, bins);
    NodeId p = t.slice_cols(hd, bins, bins);
    NodeId mag = t.exp_clamped(m, std::log(100.0f));
    NodeId re = t.mul(mag, t.cos_(p));
    NodeId im = t.mul(mag, t.sin_(p));
    const int crop = (head_fft - head_hop) / 2;
    return istft_synth_node(t, re, im, head_fft, head_hop, crop, frames50 * head_hop);
}

void Decoder::collect(std::vector<Param*>& out) {
    out.push_back(&up_w);
    out.push_back(&up_b);
    in_ln.collect(out);
    for (auto& b : blocks) {
        out.push_back(&b.dw_w);
        out.push_back(&b.dw_b);
        b.ln.collect(out);
        b.pw1.collect(out);
        b.pw2.collect(out);
    }
    final_ln.collect(out);
    head.collect(out);
}

void Decoder::collect_const(std::vector<const Param*>& out) const {
    out.push_back(&up_w);
    out.push_back(&up_b);
    in_ln.collect_const(out);
    for (const auto& b : blocks) {
        out.push_back(&b.dw_w);
        out.push_back(&b.dw_b);
        b.ln.collect_const(out);
        b.pw1.collect_const(out);
        b.pw2.collect_const(out);
    }
    final_ln.collect_const(out);
    head.collect_const(out);
}

// --- Tokenizer -----------------------------------------------------------------

Tokenizer Tokenizer::create(const RunConfig& cfg) {
    Tokenizer tok;
    tok.cfg = cfg;
    Rng rng(cfg.seed, "model-init");
    tok.sem.init(rng, cfg);
    tok.ac.init(rng, cfg);
    tok.dec.init(rng, cfg);
    return tok;
}

int Tokenizer::token_frames(int n_samples) const {
    const int t_mel = mel_frames_for(n_samples, ac.mel_cfg);
    return (t_mel + cfg.model.patch_frames - 1) / cfg.model.patch_frames;
}

FeatureTensor Tokenizer::encode_semantic(const Waveform& w) const {
    validate(w);
    if (w.sample_rate != cfg.sample_rate)
        throw DataError("encode_semantic: expected " + std::to_string(cfg.sample_rate) + " Hz input");
    Tape t;
    NodeId out = sem.forward(t, melspec(w, sem.mel_cfg));
    FeatureTensor ft;
    ft.role = FeatureRole::semantic;
    ft.frame_rate = token_rate(cfg);
    ft.data = Tensor({1, t.val(out).dim(0), t.val(out).dim(1)}, t.val(out).data);
    return ft;
}

FeatureTensor Tokenizer::encode_acoustic(const Waveform& w) const {
    validate(w);
    if (w.sample_rate != cfg.sample_rate)
        throw DataError("encode_acoustic: expected " + std::to_string(cfg.sample_rate) + " Hz input");
    Tape t;
    NodeId out = ac.forward(t, melspec(w, ac.mel_cfg), /*frozen=*/true);
    FeatureTensor ft;
    ft.role = FeatureRole::acoustic;
    ft.frame_rate = token_rate(cfg);
    ft.data = Tensor({1, t.val(out).dim(0), t.val(out).dim(1)}, t.val(out).data);
    return ft;
}

FeatureTensor Tokenizer::fuse(const FeatureTensor& z_sem, const FeatureTensor& z_ac) {
    if (!(z_sem.role == FeatureRole::semantic && z_ac.role == FeatureRole::acoustic))
        throw DataError("fuse: expects (semantic, acoustic) roles");
    if (!z_sem.data.same_shape(z_ac.data))
        throw DataError("fuse: shape mismatch " + z_sem.data.shape_str() + " vs " +
                        z_ac.data.shape_str());
    if (z_sem.frame_rate != z_ac.frame_rate) throw DataError("fuse: frame-rate mismatch");
    FeatureTensor out;
    out.role = FeatureRole::unified;
    out.frame_rate = z_sem.frame_rate;
    out.data = Tensor(z_sem.data.shape);
    kern::ops().vadd(out.data.numel(), z_sem.data.ptr(), z_ac.data.ptr(), out.data.ptr());
    return out;
}

Waveform Tokenizer::decode(const FeatureTensor& z) const {
    if (z.batch() != 1) throw DataError("decode: batch must be 1");
    if (z.dim() != cfg.model.dim) throw DataError("decode: latent dim mismatch");
    Tape t;
    NodeId in = t.constant(Tensor({z.frames(), z.dim()}, z.data.data));
    NodeId out = dec.forward(t, in, /*frozen=*/true);
    Waveform w;
    w.sample_rate = cfg.sample_rate;
    w.samples = t.val(out).data;
    for (float v : w.samples)
        if (!std::isfinite(v)) throw NumericError("decode: non-finite output");
    return w;
}

std::tuple<FeatureTensor, FeatureTensor, FeatureTensor> Tokenizer::tokenize(
    const Waveform& w) const {
    FeatureTensor zs = encode_semantic(w);
    FeatureTensor za = encode_acoustic(w);
    FeatureTensor z = fuse(zs, za);
    return {std::move(zs), std::move(za), std::move(z)};
}

NodeId Tokenizer::acoustic_node(Tape& t, const MelSpectrogram& mel) const {
    return ac.forward(t, mel, /*frozen=*/false);
}

NodeId Tokenizer::decode_node(Tape& t, NodeId z) const {
    return dec.forward(t, z, /*frozen=*/false);
}

Tensor Tokenizer::semantic_features(const Waveform& w) const {
    Tape t;
    NodeId out = sem.forward(t, melspec(w, sem.mel_cfg));
    return t.val(out);
}

std::vector<Param*> Tokenizer::generator_params() {
    std::vector<Param*> out;
    ac.collect(out);
    dec.collect(out);
    return out;
}

std::vector<const Param*> Tokenizer::semantic_params() const {
    std::vector<const Param*> out;
    sem.collect_const(out);
    return out;
}

Container Tokenizer::to_container(long long step) const {
    Container c;
    c.kind = "tokenizer";
    c.config_text = serialize_config(cfg);
    c.config_hash = config_hash_hex(cfg);
    c.seed = cfg.seed;
    c.step = step;
    c.semantic_hash = semantic_hash();
    auto put = [&c](const std::vector<const Param*>& ps) {
        for (const Param* p : ps) c.tensors.emplace(p->name, p->w);
    };
    std::vector<const Param*> ps;
    sem.collect_const(ps);
    ac.collect_const(ps);
    dec.collect_const(ps);
    put(ps);
    return c;
}

Tokenizer Tokenizer::from_container(const Container& c) {
    if (c.kind != "tokenizer") throw DataError("checkpoint kind is not 'tokenizer'");
    Tokenizer tok = Tokenizer::create(parse_config(c.config_text));
    std::vector<Param*> ps;
    tok.sem.collect(ps);
    tok.ac.collect(ps);
    tok.dec.collect(ps);
    for (Param* p : ps) {
        auto it = c.tensors.find(p->name);
        if (it == c.tensors.end()) throw DataError("checkpoint missing tensor " + p->name);
        if (it->second.shape != p->w.shape)
            throw DataError("checkpoint tensor shape mismatch for " + p->name);
        p->w = it->second;
    }
    if (tok.semantic_hash() != c.semantic_hash)
        throw DataError("checkpoint rejected: frozen semantic-encoder hash mismatch (stored " +
                        c.semantic_hash + ", loaded " + tok.semantic_hash() + ")");
    return tok;
}

Tokenizer load_tokenizer(const std::string& path) {
    return Tokenizer::from_container(load_container(path));
}

void save_tokenizer(const std::string& path, const Tokenizer& tok, long long step) {
    save_container(path, tok.to_container(step));
}

}  // namespace unitok
