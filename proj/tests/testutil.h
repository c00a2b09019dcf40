#pragma once

// Shared helpers for the test suites: random tensors and a central
// finite-difference gradient checker used against the analytic backward pass.

#include <cmath>
#include <functional>
#include <vector>

#include "unitok/autograd.h"
#include "unitok/rng.h"
#include "unitok/tensor.h"

namespace testutil {

inline unitok::Tensor random_tensor(unitok::Rng& rng, std::vector<int> shape, double lo = -1.0,
                                    double hi = 1.0) {
    unitok::Tensor t(std::move(shape));
    for (auto& v : t.data) v = float(rng.uniform(lo, hi));
    return t;
}

// Builds a scalar loss from gradient-tracked copies of `inputs`.
using LossFn = std::function<unitok::NodeId(unitok::Tape&, const std::vector<unitok::NodeId>&)>;

struct FdStats {
    std::vector<double> rel_errors;  // one per checked element
    double worst = 0.0;
    double frac_below(double tol) const {
        if (rel_errors.empty()) return 1.0;
        std::size_t ok = 0;
        for (double e : rel_errors)
            if (e < tol) ++ok;
        return double(ok) / double(rel_errors.size());
    }
};

// Central differences with per-element relative error
// |a - fd| / max(|a|, |fd|, floor). Checks every element of every input.
inline FdStats fd_check(const LossFn& fn, const std::vector<unitok::Tensor>& inputs,
                        double h = 1e-2, double floor_ = 1e-4) {
    using namespace unitok;
    FdStats stats;

    // analytic gradients
    std::vector<Tensor> analytic;
    {
        Tape tape;
        std::vector<NodeId> ids;
        for (const auto& t : inputs) ids.push_back(tape.input(t));
        NodeId loss = fn(tape, ids);
        tape.backward(loss);
        for (NodeId id : ids)
            analytic.push_back(tape.has_grad(id) ? tape.grad_buf(id) : Tensor(tape.val(id).shape));
    }

    auto eval = [&](const std::vector<Tensor>& xs) {
        Tape tape;
        std::vector<NodeId> ids;
        for (const auto& t : xs) ids.push_back(tape.constant(t));
        return tape.scalar_hi(fn(tape, ids));
    };

    std::vector<Tensor> work = inputs;
    for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
        for (std::size_t i = 0; i < inputs[ti].numel(); ++i) {
            const float orig = work[ti].data[i];
            work[ti].data[i] = float(orig + h);
            const double lp = eval(work);
            work[ti].data[i] = float(orig - h);
            const double lm = eval(work);
            work[ti].data[i] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double a = double(analytic[ti].data[i]);
            const double rel = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), floor_});
            stats.rel_errors.push_back(rel);
            stats.worst = std::max(stats.worst, rel);
        }
    }
    return stats;
}

}  // namespace testutil
