#include <cmath>
#include <cstring>

#include <memory>
#include "unitok/autograd.h"
#include "unitok/error.h"
#include "unitok/kernels.h"

namespace unitok {

namespace {
const kern::Ops& K() { return kern::ops(); }

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw DataError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}
}  // namespace

NodeId Tape::push(Tensor val, bool needs_grad, std::function<void(Tape&, NodeId)> back) {
    Node n;
    if (val.numel() == 1) n.hi = double(val.data[0]);
    n.val = std::move(val);
    n.needs_grad = needs_grad;
    if (needs_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return NodeId(nodes_.size() - 1);
}

NodeId Tape::push_hi(Tensor val, double hi, bool needs_grad, std::function<void(Tape&, NodeId)> back) {
    NodeId id = push(std::move(val), needs_grad, std::move(back));
    nodes_[std::size_t(id)].hi = hi;
    return id;
}

NodeId Tape::constant(Tensor v) { return push(std::move(v), false, nullptr); }

NodeId Tape::leaf(Param& p) {
    auto it = leaf_cache_.find(&p);
    if (it != leaf_cache_.end()) return it->second;
    NodeId id = push(p.w, true, nullptr);
    leaf_cache_.emplace(&p, id);
    leaves_.emplace_back(&p, id);
    return id;
}

NodeId Tape::frozen(const Param& p) { return push(p.w, false, nullptr); }

NodeId Tape::input(Tensor v) { return push(std::move(v), true, nullptr); }

Tensor& Tape::grad_buf(NodeId id) {
    Node& n = nodes_[std::size_t(id)];
    if (n.grad.data.empty()) n.grad = Tensor(n.val.shape);
    return n.grad;
}

void Tape::backward(NodeId root) {
    if (val(root).numel() != 1) throw Error("backward: root must be scalar");
    grad_buf(root).data[0] = 1.0f;
    for (NodeId i = root; i >= 0; --i) {
        Node& n = nodes_[std::size_t(i)];
        if (!n.needs_grad || n.grad.data.empty() || !n.back) continue;
        n.back(*this, i);
    }
}

void Tape::accumulate_leaf_grads() {
    for (auto& [p, id] : leaves_) {
        if (!has_grad(id)) continue;
        const Tensor& g = nodes_[std::size_t(id)].grad;
        K().vadd(g.numel(), p->g.ptr(), g.ptr(), p->g.ptr());
    }
}

// --- elementwise ------------------------------------------------------------

NodeId Tape::add(NodeId a, NodeId b) {
    check_same_shape(val(a), val(b), "add");
    Tensor out(val(a).shape);
    K().vadd(out.numel(), val(a).ptr(), val(b).ptr(), out.ptr());
    const bool sc = out.numel() == 1;
    return push_hi(std::move(out), sc ? scalar_hi(a) + scalar_hi(b) : 0.0,
                   needs_grad(a) || needs_grad(b), [a, b](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        if (t.needs_grad(a)) K().vadd(g.numel(), t.grad_buf(a).ptr(), g.ptr(), t.grad_buf(a).ptr());
        if (t.needs_grad(b)) K().vadd(g.numel(), t.grad_buf(b).ptr(), g.ptr(), t.grad_buf(b).ptr());
    });
}

NodeId Tape::sub(NodeId a, NodeId b) {
    check_same_shape(val(a), val(b), "sub");
    Tensor out(val(a).shape);
    K().vsub(out.numel(), val(a).ptr(), val(b).ptr(), out.ptr());
    return push(std::move(out), needs_grad(a) || needs_grad(b), [a, b](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        if (t.needs_grad(a)) K().vadd(g.numel(), t.grad_buf(a).ptr(), g.ptr(), t.grad_buf(a).ptr());
        if (t.needs_grad(b)) K().axpy(g.numel(), -1.0f, g.ptr(), t.grad_buf(b).ptr());
    });
}

NodeId Tape::mul(NodeId a, NodeId b) {
    check_same_shape(val(a), val(b), "mul");
    Tensor out(val(a).shape);
    K().vmul(out.numel(), val(a).ptr(), val(b).ptr(), out.ptr());
    return push(std::move(out), needs_grad(a) || needs_grad(b), [a, b](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        const std::size_t n = g.numel();
        if (t.needs_grad(a)) {
            Tensor& ga = t.grad_buf(a);
            const float* bv = t.val(b).ptr();
            const float* gv = g.ptr();
            for (std::size_t i = 0; i < n; ++i) ga.data[i] += gv[i] * bv[i];
        }
        if (t.needs_grad(b)) {
            Tensor& gb = t.grad_buf(b);
            const float* av = t.val(a).ptr();
            const float* gv = g.ptr();
            for (std::size_t i = 0; i < n; ++i) gb.data[i] += gv[i] * av[i];
        }
    });
}

NodeId Tape::scale(NodeId a, float alpha) { return affine(a, alpha, 0.0f); }

NodeId Tape::affine(NodeId a, float alpha, float beta) {
    Tensor out(val(a).shape);
    const float* x = val(a).ptr();
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = alpha * x[i] + beta;
    const bool sc = out.numel() == 1;
    return push_hi(std::move(out), sc ? double(alpha) * scalar_hi(a) + beta : 0.0,
                   needs_grad(a), [a, alpha](Tape& t, NodeId self) {
        K().axpy(t.grad_buf(self).numel(), alpha, t.grad_buf(self).ptr(), t.grad_buf(a).ptr());
    });
}

NodeId Tape::add_scaled(NodeId a, NodeId b, float alpha) {
    check_same_shape(val(a), val(b), "add_scaled");
    Tensor out = val(a);
    K().axpy(out.numel(), alpha, val(b).ptr(), out.ptr());
    const bool sc = out.numel() == 1;
    return push_hi(std::move(out), sc ? scalar_hi(a) + double(alpha) * scalar_hi(b) : 0.0,
                   needs_grad(a) || needs_grad(b), [a, b, alpha](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        if (t.needs_grad(a)) K().vadd(g.numel(), t.grad_buf(a).ptr(), g.ptr(), t.grad_buf(a).ptr());
        if (t.needs_grad(b)) K().axpy(g.numel(), alpha, g.ptr(), t.grad_buf(b).ptr());
    });
}

// --- matmul family ------------------------------------------------------------

NodeId Tape::matmul(NodeId a, NodeId b) {
    const int m = val(a).rows(), k = val(a).cols();
    const int kb = val(b).rows(), n = val(b).cols();
    if (k != kb) throw DataError("matmul: inner dims " + val(a).shape_str() + " x " + val(b).shape_str());
    Tensor out({m, n});
    K().gemm_nn(m, n, k, 1.0f, val(a).ptr(), k, val(b).ptr(), n, 0.0f, out.ptr(), n);
    return push(std::move(out), needs_grad(a) || needs_grad(b), [a, b, m, n, k](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        if (t.needs_grad(a))  // dA = G * B^T
            K().gemm_nt(m, k, n, 1.0f, g.ptr(), n, t.val(b).ptr(), n, 1.0f, t.grad_buf(a).ptr(), k);
        if (t.needs_grad(b))  // dB = A^T * G
            K().gemm_tn(k, n, m, 1.0f, t.val(a).ptr(), k, g.ptr(), n, 1.0f, t.grad_buf(b).ptr(), n);
    });
}

NodeId Tape::matmul_nt(NodeId a, NodeId b) {
    const int m = val(a).rows(), k = val(a).cols();
    const int n = val(b).rows(), kb = val(b).cols();
    if (k != kb) throw DataError("matmul_nt: inner dims " + val(a).shape_str() + " x " + val(b).shape_str());
    Tensor out({m, n});
    K().gemm_nt(m, n, k, 1.0f, val(a).ptr(), k, val(b).ptr(), k, 0.0f, out.ptr(), n);
    return push(std::move(out), needs_grad(a) || needs_grad(b), [a, b, m, n, k](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        if (t.needs_grad(a))  // dA = G * B
            K().gemm_nn(m, k, n, 1.0f, g.ptr(), n, t.val(b).ptr(), k, 1.0f, t.grad_buf(a).ptr(), k);
        if (t.needs_grad(b))  // dB = G^T * A
            K().gemm_tn(n, k, m, 1.0f, g.ptr(), n, t.val(a).ptr(), k, 1.0f, t.grad_buf(b).ptr(), k);
    });
}

NodeId Tape::linear(NodeId x, NodeId W, NodeId b) {
    const int m = val(x).rows(), in = val(x).cols();
    const int win = val(W).rows(), out_dim = val(W).cols();
    if (in != win) throw DataError("linear: dim mismatch");
    if (int(val(b).numel()) != out_dim) throw DataError("linear: bias dim");
    Tensor out({m, out_dim});
    for (int i = 0; i < m; ++i)
        std::memcpy(out.ptr() + std::size_t(i) * out_dim, val(b).ptr(), sizeof(float) * std::size_t(out_dim));
    K().gemm_nn(m, out_dim, in, 1.0f, val(x).ptr(), in, val(W).ptr(), out_dim, 1.0f, out.ptr(), out_dim);
    bool ng = needs_grad(x) || needs_grad(W) || needs_grad(b);
    return push(std::move(out), ng, [x, W, b, m, in, out_dim](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        if (t.needs_grad(x))
            K().gemm_nt(m, in, out_dim, 1.0f, g.ptr(), out_dim, t.val(W).ptr(), out_dim, 1.0f,
                        t.grad_buf(x).ptr(), in);
        if (t.needs_grad(W))
            K().gemm_tn(in, out_dim, m, 1.0f, t.val(x).ptr(), in, g.ptr(), out_dim, 1.0f,
                        t.grad_buf(W).ptr(), out_dim);
        if (t.needs_grad(b)) {
            Tensor& gb = t.grad_buf(b);
            for (int i = 0; i < m; ++i)
                K().vadd(std::size_t(out_dim), gb.ptr(), g.ptr() + std::size_t(i) * out_dim, gb.ptr());
        }
    });
}

// --- normalization ------------------------------------------------------------

NodeId Tape::layernorm(NodeId x, NodeId gamma, NodeId beta, float eps) {
    const int rows = val(x).rows(), d = val(x).cols();
    if (int(val(gamma).numel()) != d || int(val(beta).numel()) != d)
        throw DataError("layernorm: affine dims");
    Tensor out({rows, d});
    Tensor xhat({rows, d});
    Tensor inv_sigma({rows});
    const float* xp = val(x).ptr();
    const float* gp = val(gamma).ptr();
    const float* bp = val(beta).ptr();
    for (int r = 0; r < rows; ++r) {
        const float* xr = xp + std::size_t(r) * d;
        double mu = 0;
        for (int j = 0; j < d; ++j) mu += xr[j];
        mu /= d;
        double var = 0;
        for (int j = 0; j < d; ++j) {
            const double dv = xr[j] - mu;
            var += dv * dv;
        }
        var /= d;
        const float is = float(1.0 / std::sqrt(var + eps));
        inv_sigma.data[std::size_t(r)] = is;
        float* xh = xhat.ptr() + std::size_t(r) * d;
        float* o = out.ptr() + std::size_t(r) * d;
        for (int j = 0; j < d; ++j) {
            xh[j] = (xr[j] - float(mu)) * is;
            o[j] = gp[j] * xh[j] + bp[j];
        }
    }
    bool ng = needs_grad(x) || needs_grad(gamma) || needs_grad(beta);
    auto xh_keep = std::make_shared<Tensor>(std::move(xhat));
    auto is_keep = std::make_shared<Tensor>(std::move(inv_sigma));
    return push(std::move(out), ng, [x, gamma, beta, rows, d, xh_keep, is_keep](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        const float* gp = t.val(gamma).ptr();
        for (int r = 0; r < rows; ++r) {
            const float* gr = g.ptr() + std::size_t(r) * d;
            const float* xh = xh_keep->ptr() + std::size_t(r) * d;
            const float is = is_keep->data[std::size_t(r)];
            if (t.needs_grad(gamma)) {
                float* gg = t.grad_buf(gamma).ptr();
                for (int j = 0; j < d; ++j) gg[j] += gr[j] * xh[j];
            }
            if (t.needs_grad(beta)) {
                float* gb = t.grad_buf(beta).ptr();
                for (int j = 0; j < d; ++j) gb[j] += gr[j];
            }
            if (t.needs_grad(x)) {
                double m1 = 0, m2 = 0;  // mean(g*gamma), mean(g*gamma*xhat)
                for (int j = 0; j < d; ++j) {
                    const double gg = double(gr[j]) * gp[j];
                    m1 += gg;
                    m2 += gg * xh[j];
                }
                m1 /= d;
                m2 /= d;
                float* gx = t.grad_buf(x).ptr() + std::size_t(r) * d;
                for (int j = 0; j < d; ++j)
                    gx[j] += is * (float(double(gr[j]) * gp[j] - m1 - double(xh[j]) * m2));
            }
        }
    });
}

// --- activations ------------------------------------------------------------

NodeId Tape::gelu(NodeId x) {
    constexpr float kC = 0.7978845608028654f;  // sqrt(2/pi)
    constexpr float kA = 0.044715f;
    Tensor out(val(x).shape);
    const float* xp = val(x).ptr();
    for (std::size_t i = 0; i < out.numel(); ++i) {
        const float v = xp[i];
        out.data[i] = 0.5f * v * (1.0f + std::tanh(kC * (v + kA * v * v * v)));
    }
    return push(std::move(out), needs_grad(x), [x](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        Tensor& gx = t.grad_buf(x);
        const float* xp = t.val(x).ptr();
        for (std::size_t i = 0; i < g.numel(); ++i) {
            const float v = xp[i];
            const float u = kC * (v + kA * v * v * v);
            const float th = std::tanh(u);
            const float sech2 = 1.0f - th * th;
            const float d = 0.5f * (1.0f + th) + 0.5f * v * sech2 * kC * (1.0f + 3.0f * kA * v * v);
            gx.data[i] += g.data[i] * d;
        }
    });
}

NodeId Tape::relu(NodeId x) { return leaky_relu(x, 0.0f); }

NodeId Tape::leaky_relu(NodeId x, float slope) {
    Tensor out(val(x).shape);
    K().leaky_relu(out.numel(), slope, val(x).ptr(), out.ptr());
    return push(std::move(out), needs_grad(x), [x, slope](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        Tensor& gx = t.grad_buf(x);
        const float* xp = t.val(x).ptr();
        for (std::size_t i = 0; i < g.numel(); ++i)
            gx.data[i] += g.data[i] * (xp[i] > 0.0f ? 1.0f : slope);
    });
}

NodeId Tape::tanh_(NodeId x) {
    Tensor out(val(x).shape);
    const float* xp = val(x).ptr();
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = std::tanh(xp[i]);
    return push(std::move(out), needs_grad(x), [x](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        const Tensor& y = t.val(self);
        Tensor& gx = t.grad_buf(x);
        for (std::size_t i = 0; i < g.numel(); ++i)
            gx.data[i] += g.data[i] * (1.0f - y.data[i] * y.data[i]);
    });
}

NodeId Tape::sin_(NodeId x) {
    Tensor out(val(x).shape);
    const float* xp = val(x).ptr();
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = std::sin(xp[i]);
    return push(std::move(out), needs_grad(x), [x](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        Tensor& gx = t.grad_buf(x);
        const float* xp = t.val(x).ptr();
        for (std::size_t i = 0; i < g.numel(); ++i) gx.data[i] += g.data[i] * std::cos(xp[i]);
    });
}

NodeId Tape::cos_(NodeId x) {
    Tensor out(val(x).shape);
    const float* xp = val(x).ptr();
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = std::cos(xp[i]);
    return push(std::move(out), needs_grad(x), [x](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        Tensor& gx = t.grad_buf(x);
        const float* xp = t.val(x).ptr();
        for (std::size_t i = 0; i < g.numel(); ++i) gx.data[i] -= g.data[i] * std::sin(xp[i]);
    });
}

NodeId Tape::exp_clamped(NodeId x, float max_log) {
    Tensor out(val(x).shape);
    const float* xp = val(x).ptr();
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] = std::exp(xp[i] > max_log ? max_log : xp[i]);
    return push(std::move(out), needs_grad(x), [x, max_log](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        const Tensor& y = t.val(self);
        Tensor& gx = t.grad_buf(x);
        const float* xp = t.val(x).ptr();
        for (std::size_t i = 0; i < g.numel(); ++i)
            if (xp[i] <= max_log) gx.data[i] += g.data[i] * y.data[i];
    });
}

NodeId Tape::softmax_rows(NodeId x) {
    const int rows = val(x).rows(), d = val(x).cols();
    Tensor out({rows, d});
    const float* xp = val(x).ptr();
    for (int r = 0; r < rows; ++r) {
        const float* xr = xp + std::size_t(r) * d;
        float* o = out.ptr() + std::size_t(r) * d;
        float mx = xr[0];
        for (int j = 1; j < d; ++j) mx = std::max(mx, xr[j]);
        double sum = 0;
        for (int j = 0; j < d; ++j) {
            o[j] = std::exp(xr[j] - mx);
            sum += o[j];
        }
        const float inv = float(1.0 / sum);
        for (int j = 0; j < d; ++j) o[j] *= inv;
    }
    return push(std::move(out), needs_grad(x), [x, rows, d](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        const Tensor& s = t.val(self);
        Tensor& gx = t.grad_buf(x);
        for (int r = 0; r < rows; ++r) {
            const float* gr = g.ptr() + std::size_t(r) * d;
            const float* sr = s.ptr() + std::size_t(r) * d;
            double dot = 0;
            for (int j = 0; j < d; ++j) dot += double(gr[j]) * sr[j];
            float* gxr = gx.ptr() + std::size_t(r) * d;
            for (int j = 0; j < d; ++j) gxr[j] += sr[j] * (gr[j] - float(dot));
        }
    });
}

// --- shape ops ------------------------------------------------------------

NodeId Tape::reshape(NodeId x, std::vector<int> shape) {
    if (Tensor::numel_of(shape) != val(x).numel()) throw DataError("reshape: numel mismatch");
    Tensor out(std::move(shape), val(x).data);
    return push(std::move(out), needs_grad(x), [x](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        K().vadd(g.numel(), t.grad_buf(x).ptr(), g.ptr(), t.grad_buf(x).ptr());
    });
}

NodeId Tape::slice_cols(NodeId x, int start, int len) {
    const int rows = val(x).rows(), d = val(x).cols();
    if (start < 0 || start + len > d) throw DataError("slice_cols: out of range");
    Tensor out({rows, len});
    const float* xp = val(x).ptr();
    for (int r = 0; r < rows; ++r)
        std::memcpy(out.ptr() + std::size_t(r) * len, xp + std::size_t(r) * d + start,
                    sizeof(float) * std::size_t(len));
    return push(std::move(out), needs_grad(x), [x, start, len, rows, d](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        Tensor& gx = t.grad_buf(x);
        for (int r = 0; r < rows; ++r)
            K().vadd(std::size_t(len), gx.ptr() + std::size_t(r) * d + start,
                     g.ptr() + std::size_t(r) * len, gx.ptr() + std::size_t(r) * d + start);
    });
}

NodeId Tape::slice_rows(NodeId x, int start, int len) {
    const int rows = val(x).rows(), d = val(x).cols();
    if (start < 0 || start + len > rows) throw DataError("slice_rows: out of range");
    Tensor out({len, d});
    std::memcpy(out.ptr(), val(x).ptr() + std::size_t(start) * d, sizeof(float) * out.numel());
    return push(std::move(out), needs_grad(x), [x, start, len, d](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        Tensor& gx = t.grad_buf(x);
        K().vadd(g.numel(), gx.ptr() + std::size_t(start) * d, g.ptr(), gx.ptr() + std::size_t(start) * d);
    });
}

NodeId Tape::concat_cols(const std::vector<NodeId>& xs) {
    if (xs.empty()) throw DataError("concat_cols: empty");
    const int rows = val(xs[0]).rows();
    int total = 0;
    bool ng = false;
    for (NodeId id : xs) {
        if (val(id).rows() != rows) throw DataError("concat_cols: row mismatch");
        total += val(id).cols();
        ng = ng || needs_grad(id);
    }
    Tensor out({rows, total});
    int off = 0;
    for (NodeId id : xs) {
        const int c = val(id).cols();
        for (int r = 0; r < rows; ++r)
            std::memcpy(out.ptr() + std::size_t(r) * total + off, val(id).ptr() + std::size_t(r) * c,
                        sizeof(float) * std::size_t(c));
        off += c;
    }
    std::vector<NodeId> parents = xs;
    return push(std::move(out), ng, [parents, rows, total](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        int off = 0;
        for (NodeId id : parents) {
            const int c = t.val(id).cols();
            if (t.needs_grad(id)) {
                Tensor& gx = t.grad_buf(id);
                for (int r = 0; r < rows; ++r)
                    K().vadd(std::size_t(c), gx.ptr() + std::size_t(r) * c,
                             g.ptr() + std::size_t(r) * total + off, gx.ptr() + std::size_t(r) * c);
            }
            off += c;
        }
    });
}

NodeId Tape::add_rowvec(NodeId x, NodeId v) {
    const int rows = val(x).rows(), d = val(x).cols();
    if (int(val(v).numel()) != d) throw DataError("add_rowvec: dim mismatch");
    Tensor out = val(x);
    for (int r = 0; r < rows; ++r)
        K().vadd(std::size_t(d), out.ptr() + std::size_t(r) * d, val(v).ptr(),
                 out.ptr() + std::size_t(r) * d);
    return push(std::move(out), needs_grad(x) || needs_grad(v), [x, v, rows, d](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        if (t.needs_grad(x))
            K().vadd(g.numel(), t.grad_buf(x).ptr(), g.ptr(), t.grad_buf(x).ptr());
        if (t.needs_grad(v)) {
            Tensor& gv = t.grad_buf(v);
            for (int r = 0; r < rows; ++r)
                K().vadd(std::size_t(d), gv.ptr(), g.ptr() + std::size_t(r) * d, gv.ptr());
        }
    });
}

NodeId Tape::row(NodeId table, int r) {
    const int rows = val(table).rows(), d = val(table).cols();
    if (r < 0 || r >= rows) throw DataError("row: index out of range");
    Tensor out({1, d});
    std::memcpy(out.ptr(), val(table).ptr() + std::size_t(r) * d, sizeof(float) * std::size_t(d));
    return push(std::move(out), needs_grad(table), [table, r, d](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        Tensor& gt = t.grad_buf(table);
        K().vadd(std::size_t(d), gt.ptr() + std::size_t(r) * d, g.ptr(), gt.ptr() + std::size_t(r) * d);
    });
}

NodeId Tape::mean_rows(NodeId x) {
    const int rows = val(x).rows(), d = val(x).cols();
    Tensor out({1, d});
    const float inv = 1.0f / float(rows);
    for (int r = 0; r < rows; ++r)
        K().axpy(std::size_t(d), inv, val(x).ptr() + std::size_t(r) * d, out.ptr());
    return push(std::move(out), needs_grad(x), [x, rows, d, inv](Tape& t, NodeId self) {
        const Tensor& g = t.grad_buf(self);
        Tensor& gx = t.grad_buf(x);
        for (int r = 0; r < rows; ++r)
            K().axpy(std::size_t(d), inv, g.ptr(), gx.ptr() + std::size_t(r) * d);
    });
}

NodeId Tape::detach(NodeId x) { return constant(val(x)); }

// --- reductions ------------------------------------------------------------

NodeId Tape::sum_all(NodeId x) {
    Tensor out({1});
    double acc = 0.0;
    for (float v : val(x).data) acc += v;
    out.data[0] = float(acc);
    return push_hi(std::move(out), acc, needs_grad(x), [x](Tape& t, NodeId self) {
        const float g = t.grad_buf(self).data[0];
        Tensor& gx = t.grad_buf(x);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += g;
    });
}

NodeId Tape::mean_all(NodeId x) {
    const std::size_t n = val(x).numel();
    Tensor out({1});
    double acc = 0.0;
    for (float v : val(x).data) acc += v;
    acc /= double(n);
    out.data[0] = float(acc);
    return push_hi(std::move(out), acc, needs_grad(x), [x, n](Tape& t, NodeId self) {
        const float g = t.grad_buf(self).data[0] / float(n);
        Tensor& gx = t.grad_buf(x);
        for (std::size_t i = 0; i < n; ++i) gx.data[i] += g;
    });
}

NodeId Tape::neg_mean(NodeId x) {
    const std::size_t n = val(x).numel();
    Tensor out({1});
    double acc = 0.0;
    for (float v : val(x).data) acc += v;
    acc = -acc / double(n);
    out.data[0] = float(acc);
    return push_hi(std::move(out), acc, needs_grad(x), [x, n](Tape& t, NodeId self) {
        const float g = -t.grad_buf(self).data[0] / float(n);
        Tensor& gx = t.grad_buf(x);
        for (std::size_t i = 0; i < n; ++i) gx.data[i] += g;
    });
}

NodeId Tape::mse(NodeId a, NodeId b) {
    check_same_shape(val(a), val(b), "mse");
    const std::size_t n = val(a).numel();
    Tensor out({1});
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = double(val(a).data[i]) - double(val(b).data[i]);
        acc += d * d;
    }
    acc /= double(n);
    out.data[0] = float(acc);
    return push_hi(std::move(out), acc, needs_grad(a) || needs_grad(b), [a, b, n](Tape& t, NodeId self) {
        const float g = t.grad_buf(self).data[0] * 2.0f / float(n);
        const float* av = t.val(a).ptr();
        const float* bv = t.val(b).ptr();
        if (t.needs_grad(a)) {
            Tensor& ga = t.grad_buf(a);
            for (std::size_t i = 0; i < n; ++i) ga.data[i] += g * (av[i] - bv[i]);
        }
        if (t.needs_grad(b)) {
            Tensor& gb = t.grad_buf(b);
            for (std::size_t i = 0; i < n; ++i) gb.data[i] -= g * (av[i] - bv[i]);
        }
    });
}

NodeId Tape::l1(NodeId a, NodeId b) {
    check_same_shape(val(a), val(b), "l1");
    const std::size_t n = val(a).numel();
    Tensor out({1});
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += std::fabs(double(val(a).data[i]) - double(val(b).data[i]));
    acc /= double(n);
    out.data[0] = float(acc);
    return push_hi(std::move(out), acc, needs_grad(a) || needs_grad(b), [a, b, n](Tape& t, NodeId self) {
        const float g = t.grad_buf(self).data[0] / float(n);
        const float* av = t.val(a).ptr();
        const float* bv = t.val(b).ptr();
        if (t.needs_grad(a)) {
            Tensor& ga = t.grad_buf(a);
            for (std::size_t i = 0; i < n; ++i) {
                const float d = av[i] - bv[i];
                ga.data[i] += g * (d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f));
            }
        }
        if (t.needs_grad(b)) {
            Tensor& gb = t.grad_buf(b);
            for (std::size_t i = 0; i < n; ++i) {
                const float d = av[i] - bv[i];
                gb.data[i] -= g * (d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f));
            }
        }
    });
}

NodeId Tape::mean_relu_affine(NodeId x, float alpha, float beta) {
    const std::size_t n = val(x).numel();
    Tensor out({1});
    double acc = 0;
    const float* xp = val(x).ptr();
    for (std::size_t i = 0; i < n; ++i) {
        const float v = alpha * xp[i] + beta;
        if (v > 0.0f) acc += v;
    }
    out.data[0] = float(acc / double(n));
    return push_hi(std::move(out), acc / double(n), needs_grad(x),
                   [x, alpha, beta, n](Tape& t, NodeId self) {
        const float g = t.grad_buf(self).data[0] * alpha / float(n);
        const float* xp = t.val(x).ptr();
        Tensor& gx = t.grad_buf(x);
        for (std::size_t i = 0; i < n; ++i)
            if (alpha * xp[i] + beta > 0.0f) gx.data[i] += g;
    });
}

NodeId Tape::cross_entropy(NodeId logits, std::vector<int> labels) {
    const int rows = val(logits).rows(), k = val(logits).cols();
    if (int(labels.size()) != rows) throw DataError("cross_entropy: label count");
    Tensor out({1});
    Tensor probs({rows, k});
    double loss = 0;
    const float* xp = val(logits).ptr();
    for (int r = 0; r < rows; ++r) {
        const float* xr = xp + std::size_t(r) * k;
        float mx = xr[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, xr[j]);
        double sum = 0;
        float* pr = probs.ptr() + std::size_t(r) * k;
        for (int j = 0; j < k; ++j) {
            pr[j] = std::exp(xr[j] - mx);
            sum += pr[j];
        }
        const float inv = float(1.0 / sum);
        for (int j = 0; j < k; ++j) pr[j] *= inv;
        loss += std::log(sum) + mx - xr[labels[std::size_t(r)]];
    }
    out.data[0] = float(loss / rows);
    const double hi_loss = loss / rows;
    auto probs_keep = std::make_shared<Tensor>(std::move(probs));
    auto labels_keep = std::make_shared<std::vector<int>>(std::move(labels));
    return push_hi(std::move(out), hi_loss, needs_grad(logits),
                [logits, rows, k, probs_keep, labels_keep](Tape& t, NodeId self) {
                    const float g = t.grad_buf(self).data[0] / float(rows);
                    Tensor& gx = t.grad_buf(logits);
                    for (int r = 0; r < rows; ++r) {
                        const float* pr = probs_keep->ptr() + std::size_t(r) * k;
                        float* gr = gx.ptr() + std::size_t(r) * k;
                        for (int j = 0; j < k; ++j) gr[j] += g * pr[j];
                        gr[(*labels_keep)[std::size_t(r)]] -= g;
                    }
                });
}

NodeId Tape::custom(Tensor val, const std::vector<NodeId>& parents,
                    std::function<void(Tape&, NodeId self)> back) {
    bool ng = false;
    for (NodeId p : parents) ng = ng || needs_grad(p);
    return push(std::move(val), ng, ng ? std::move(back) : nullptr);
}

}  // namespace unitok
