#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "unitok/checkpoint.h"
#include "unitok/config.h"
#include "unitok/dsp.h"
#include "unitok/nn.h"
#include "unitok/tapeops.h"

namespace unitok {

enum class FeatureRole { semantic, acoustic, unified };
const char* role_name(FeatureRole r);
FeatureRole role_from_name(const std::string& s);

struct FeatureTensor {
    Tensor data;  // (b, t, d)
    FeatureRole role = FeatureRole::unified;
    double frame_rate = 25.0;

    int batch() const { return data.ndim() == 3 ? data.dim(0) : 1; }
    int frames() const { return data.ndim() == 3 ? data.dim(1) : data.dim(0); }
    int dim() const { return data.cols(); }
};

// Frozen semantic trunk: 64-bin mel -> 4-frame patch embed -> transformer.
struct SemanticEncoder {
    nn::Linear patch;
    nn::Transformer trunk;
    MelConfig mel_cfg;
    int dim = 0, patch_frames = 4;

    void init(Rng& rng, const RunConfig& cfg);
    // trainable=true is used only by the pretext pretraining phase; after
    // freezing, every forward treats the parameters as constants.
    NodeId forward(Tape& t, const MelSpectrogram& mel, bool trainable = false) const;
    std::string hash() const;
    void collect(std::vector<Param*>& out);
    void collect_const(std::vector<const Param*>& out) const;
};

// Acoustic residual path: 128-bin mel -> non-overlapping 128x4 patches ->
// linear projection -> layernorm (affine, identity init).
struct AcousticEncoder {
    nn::Linear proj;
    nn::LayerNorm ln;
    MelConfig mel_cfg;
    int dim = 0, patch_frames = 4;

    void init(Rng& rng, const RunConfig& cfg);
    NodeId forward(Tape& t, const MelSpectrogram& mel, bool frozen = false) const;
    void collect(std::vector<Param*>& out);
    void collect_const(std::vector<const Param*>& out) const;
};

// 25 Hz latent -> transposed-conv upsample to 50 Hz -> ConvNeXt-style blocks
// -> linear head predicting log-magnitude and phase -> ISTFT.
struct Decoder {
    Param up_w, up_b;  // (4, d, d) transposed conv
    nn::LayerNorm in_ln;
    struct Block {
        Param dw_w, dw_b;  // depthwise conv (k, d)
        nn::LayerNorm ln;
        nn::Linear pw1, pw2;
    };
    std::vector<Block> blocks;
    nn::LayerNorm final_ln;
    nn::Linear head;
    int dim = 0, head_fft = 1024, head_hop = 320, kernel = 7;

    void init(Rng& rng, const RunConfig& cfg);
    // (t, d) latent -> (t * 2 * head_hop) waveform samples.
    NodeId forward(Tape& t, NodeId z, bool frozen = false) const;
    void collect(std::vector<Param*>& out);
    void collect_const(std::vector<const Param*>& out) const;
};

// Mel frames right-padded with log(floor) to a patch multiple, then stacked
// into (t_tokens, patch_frames * bins) patch rows.
Tensor patch_rows(const MelSpectrogram& mel, int patch_frames);

struct Tokenizer {
    RunConfig cfg;
    SemanticEncoder sem;
    AcousticEncoder ac;
    Decoder dec;

    static Tokenizer create(const RunConfig& cfg);

    // ---- inference API (batch dim explicit, b = 1 per waveform) ----
    FeatureTensor encode_semantic(const Waveform& w) const;
    FeatureTensor encode_acoustic(const Waveform& w) const;
    static FeatureTensor fuse(const FeatureTensor& z_sem, const FeatureTensor& z_ac);
    Waveform decode(const FeatureTensor& z) const;
    std::tuple<FeatureTensor, FeatureTensor, FeatureTensor> tokenize(const Waveform& w) const;

    // ---- tape-level builders used by training ----
    NodeId acoustic_node(Tape& t, const MelSpectrogram& mel) const;  // trainable
    NodeId decode_node(Tape& t, NodeId z) const;                     // trainable
    Tensor semantic_features(const Waveform& w) const;               // (t, d), no grads

    // Number of latent frames both encoders yield for a given length.
    int token_frames(int n_samples) const;

    std::string semantic_hash() const { return sem.hash(); }
    std::vector<Param*> generator_params();
    std::vector<const Param*> semantic_params() const;

    Container to_container(long long step) const;
    static Tokenizer from_container(const Container& c);
};

Tokenizer load_tokenizer(const std::string& path);
void save_tokenizer(const std::string& path, const Tokenizer& tok, long long step);

}  // namespace unitok
