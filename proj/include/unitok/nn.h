#pragma once

#include <string>
#include <vector>

#include "unitok/autograd.h"
#include "unitok/rng.h"
#include "unitok/tensor.h"

namespace unitok::nn {

// --- building blocks ---------------------------------------------------------

struct Linear {
    Param W, b;
    void init(Rng& rng, const std::string& name, int in, int out, float gain = 1.0f);
    // Final-layer variant: weights and bias start at zero (identity residual).
    void init_zero(const std::string& name, int in, int out);
    NodeId forward(Tape& t, NodeId x) const;
    NodeId forward_frozen(Tape& t, NodeId x) const;
    void collect(std::vector<Param*>& out);
    void collect_const(std::vector<const Param*>& out) const;
};

struct LayerNorm {
    Param gamma, beta;
    float eps = 1e-5f;
    void init(const std::string& name, int d);
    NodeId forward(Tape& t, NodeId x) const;
    NodeId forward_frozen(Tape& t, NodeId x) const;
    void collect(std::vector<Param*>& out);
    void collect_const(std::vector<const Param*>& out) const;
};

struct MultiHeadAttention {
    Linear qkv, proj;
    int dim = 0, heads = 1;
    void init(Rng& rng, const std::string& name, int d, int heads);
    NodeId forward(Tape& t, NodeId x, bool frozen = false) const;
    void collect(std::vector<Param*>& out);
    void collect_const(std::vector<const Param*>& out) const;
};

// Pre-LN block: x + attn(ln1(x)); x + mlp(ln2(x)), GELU inside the MLP.
struct TransformerBlock {
    LayerNorm ln1, ln2;
    MultiHeadAttention attn;
    Linear fc1, fc2;
    void init(Rng& rng, const std::string& name, int d, int heads, float mlp_ratio);
    NodeId forward(Tape& t, NodeId x, bool frozen = false) const;
    void collect(std::vector<Param*>& out);
    void collect_const(std::vector<const Param*>& out) const;
};

struct Transformer {
    std::vector<TransformerBlock> blocks;
    LayerNorm final_ln;
    void init(Rng& rng, const std::string& name, int d, int heads, int layers, float mlp_ratio);
    NodeId forward(Tape& t, NodeId x, bool frozen = false) const;
    void collect(std::vector<Param*>& out);
    void collect_const(std::vector<const Param*>& out) const;
};

// Deterministic sin/cos positional table, (t x d).
Tensor sinusoidal_positions(int t, int d);

// --- convolution ops ----------------------------------------------------------

// Depthwise 1D conv over (t, d) with 'same' zero padding; w is (k, d), k odd.
NodeId dwconv1d(Tape& t, NodeId x, NodeId w, NodeId b);

// Transposed 1D conv, kernel 4, stride 2, pad 1: (t, ci) -> (2t, co).
// Weight tensor shape (4, ci, co).
NodeId conv1d_transpose_x2(Tape& t, NodeId x, NodeId w, NodeId b);

// Patch extraction for 2D conv on channels-last (h, w, c) tensors:
// output is (oh*ow, kh*kw*c); combine with linear() for the convolution.
NodeId im2col(Tape& t, NodeId x, int kh, int kw, int sh, int sw, int ph, int pw);

struct Conv2d {
    Param W, b;  // W: (kh*kw*ci, co)
    int kh = 3, kw = 3, sh = 1, sw = 1, ph = 1, pw = 1, ci = 0, co = 0;
    void init(Rng& rng, const std::string& name, int ci, int co, int kh, int kw, int sh, int sw,
              int ph, int pw);
    NodeId forward(Tape& t, NodeId x) const;         // (h,w,ci) -> (oh,ow,co)
    NodeId forward_frozen(Tape& t, NodeId x) const;
    void collect(std::vector<Param*>& out);
    void collect_const(std::vector<const Param*>& out) const;
};

// --- optimizer / utilities ------------------------------------------------------

// Adam with decoupled weight decay. Moments are stored per parameter in
// registry order and serialized with checkpoints.
struct AdamW {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8, weight_decay = 0.0;
    long long step = 0;
    std::vector<Tensor> m, v;

    void init(const std::vector<Param*>& params);
    // w -= lr * (mhat/(sqrt(vhat)+eps)) - lr*wd*w, using g*grad_scale.
    void update(std::vector<Param*>& params, double lr, double grad_scale = 1.0);
};

void zero_grads(std::vector<Param*>& params);
double grad_norm(const std::vector<Param*>& params);
std::size_t param_count(const std::vector<const Param*>& params);
std::string hash_params(const std::vector<const Param*>& params);

}  // namespace unitok::nn
