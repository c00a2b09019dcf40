#include <cmath>

#include "unitok/tensor.h"

namespace unitok {

bool all_finite(const Tensor& t) {
    for (float v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace unitok
