#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace unitok {

// Dense row-major float tensor. The last dimension is the "feature" axis;
// most ops treat a tensor as (rows x cols) with rows = product of leading dims.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), 0.0f) {}
    Tensor(std::vector<int> s, float fill) : shape(std::move(s)), data(numel_of(shape), fill) {}
    Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {}

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) n *= std::size_t(d);
        return n;
    }

    std::size_t numel() const { return data.size(); }
    int ndim() const { return int(shape.size()); }
    int dim(int i) const { return shape[std::size_t(i)]; }
    // Trailing axis and the collapsed leading axes.
    int cols() const { return shape.empty() ? 1 : shape.back(); }
    int rows() const { return cols() ? int(numel()) / cols() : 0; }

    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }
    float& at(std::size_t i) { return data[i]; }
    float at(std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    void fill(float v) { std::fill(data.begin(), data.end(), v); }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i)
            s += (i ? "," : "") + std::to_string(shape[i]);
        return s + ")";
    }
};

// Trainable parameter: value plus accumulated gradient.
struct Param {
    std::string name;
    Tensor w;
    Tensor g;

    void init_shape(std::string n, std::vector<int> shape) {
        name = std::move(n);
        w = Tensor(shape);
        g = Tensor(shape);
    }
    void zero_grad() { g.fill(0.0f); }
};

bool all_finite(const Tensor& t);

}  // namespace unitok
