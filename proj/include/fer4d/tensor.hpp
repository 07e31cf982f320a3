#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace fer4d {

// Dense row-major tensor of doubles.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims)
        : shape(std::move(dims)), data(element_count(shape), 0.0) {}
    Tensor(std::vector<std::size_t> dims, std::vector<double> values) : shape(std::move(dims)), data(std::move(values)) {}

    static std::size_t element_count(const std::vector<std::size_t>& dims) {
        return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
    }

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool operator==(const Tensor&) const = default;
};

}  // namespace fer4d
