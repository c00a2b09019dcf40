#pragma once

#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "unitok/tensor.h"

namespace unitok {

// Reverse-mode tape. A tape is built per forward pass (per sample, per step)
// and is single-threaded; parameters are shared read-only across tapes, and
// leaf gradients are merged by the caller in a fixed order so batched
// training stays deterministic regardless of worker count.
using NodeId = int;

class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // --- leaves -------------------------------------------------------------
    NodeId constant(Tensor v);            // no gradient tracking
    NodeId leaf(Param& p);                // trainable; cached per Param
    NodeId frozen(const Param& p);        // parameter used as a constant
    NodeId input(Tensor v);               // gradient-tracked non-parameter leaf

    // --- access -------------------------------------------------------------
    const Tensor& val(NodeId id) const { return nodes_[std::size_t(id)].val; }
    Tensor& grad_buf(NodeId id);          // lazily zero-initialized
    bool has_grad(NodeId id) const { return !nodes_[std::size_t(id)].grad.data.empty(); }
    bool needs_grad(NodeId id) const { return nodes_[std::size_t(id)].needs_grad; }
    float scalar(NodeId id) const { return nodes_[std::size_t(id)].val.data[0]; }
    // Double-precision value of a scalar node. Reductions accumulate in double
    // and keep that value here; finite-difference tests read it so the check
    // is not limited by float32 rounding of the loss.
    double scalar_hi(NodeId id) const { return nodes_[std::size_t(id)].hi; }
    std::size_t size() const { return nodes_.size(); }

    // Runs backward from a scalar root (seeded with 1).
    void backward(NodeId root);
    // Adds every leaf gradient into its Param::g. Deterministic order.
    void accumulate_leaf_grads();
    const std::vector<std::pair<Param*, NodeId>>& leaves() const { return leaves_; }

    // --- elementwise / algebra ----------------------------------------------
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, float alpha);
    NodeId affine(NodeId a, float alpha, float beta);  // alpha*x + beta
    NodeId add_scaled(NodeId a, NodeId b, float alpha);  // a + alpha*b
    NodeId matmul(NodeId a, NodeId b);     // (m,k)x(k,n)
    NodeId matmul_nt(NodeId a, NodeId b);  // (m,k)x(n,k)^T
    NodeId linear(NodeId x, NodeId W, NodeId b);  // rows(x) x (in,out) + bias
    NodeId layernorm(NodeId x, NodeId gamma, NodeId beta, float eps = 1e-5f);
    NodeId gelu(NodeId x);
    NodeId relu(NodeId x);
    NodeId leaky_relu(NodeId x, float slope);
    NodeId tanh_(NodeId x);
    NodeId sin_(NodeId x);
    NodeId cos_(NodeId x);
    NodeId exp_clamped(NodeId x, float max_log);
    NodeId softmax_rows(NodeId x);

    // --- shape --------------------------------------------------------------
    NodeId reshape(NodeId x, std::vector<int> shape);
    NodeId slice_cols(NodeId x, int start, int len);
    NodeId slice_rows(NodeId x, int start, int len);
    NodeId concat_cols(const std::vector<NodeId>& xs);
    NodeId add_rowvec(NodeId x, NodeId v);  // broadcast (1,d) over rows
    NodeId row(NodeId table, int r);        // embedding lookup -> (1,d)
    NodeId mean_rows(NodeId x);             // (t,d) -> (1,d)
    NodeId detach(NodeId x);

    // --- reductions / losses ------------------------------------------------
    NodeId sum_all(NodeId x);
    NodeId mean_all(NodeId x);
    NodeId neg_mean(NodeId x);
    NodeId mse(NodeId a, NodeId b);
    NodeId l1(NodeId a, NodeId b);
    NodeId mean_relu_affine(NodeId x, float alpha, float beta);  // mean(relu(alpha*x+beta))
    NodeId cross_entropy(NodeId logits, std::vector<int> labels);

    // Generic escape hatch for ops with bespoke adjoints (DSP, convolutions).
    NodeId custom(Tensor val, const std::vector<NodeId>& parents,
                  std::function<void(Tape&, NodeId self)> back);

  private:
    struct Node {
        Tensor val;
        Tensor grad;
        double hi = 0.0;
        bool needs_grad = false;
        std::function<void(Tape&, NodeId)> back;
    };

    NodeId push(Tensor val, bool needs_grad, std::function<void(Tape&, NodeId)> back);
    NodeId push_hi(Tensor val, double hi, bool needs_grad, std::function<void(Tape&, NodeId)> back);

    std::vector<Node> nodes_;
    std::unordered_map<const Param*, NodeId> leaf_cache_;
    std::vector<std::pair<Param*, NodeId>> leaves_;
};

}  // namespace unitok
