#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fer4d/rng.hpp"
#include "fer4d/tensor.hpp"

namespace fer4d {

struct ConvNetConfig {
    std::size_t in_channels = 5;
    std::size_t input_size = 32;
    // One [conv3x3 -> ReLU -> maxpool2] block per entry; empty = linear model.
    std::vector<std::size_t> filters{8, 16};
    std::size_t num_classes = 6;

    std::size_t flat_size() const;
    void validate() const;
    bool operator==(const ConvNetConfig&) const = default;
};

// Convolutional classifier over [C, S, S] images. Parameters, in order:
// per block conv weights [F, C, 3, 3] and bias [F]; then dense [classes, flat]
// and bias [classes].
class ConvNet {
public:
    using Sample = Tensor;

    ConvNet() = default;
    explicit ConvNet(ConvNetConfig config);  // all-zero parameters

    // He-uniform conv/dense weights, zero biases.
    void initialize(std::uint64_t seed);

    const ConvNetConfig& config() const { return config_; }
    std::size_t num_classes() const { return config_.num_classes; }
    std::vector<Tensor>& parameters() { return params_; }
    const std::vector<Tensor>& parameters() const { return params_; }

    std::vector<double> logits(const Tensor& image) const;
    std::vector<double> predict(const Tensor& image) const;

    // Cross-entropy of one sample; gradients are added into `grads`.
    // The network has no stochastic layers, so `rng` is unused.
    double loss_and_grad(const Tensor& image, std::size_t label, std::vector<Tensor>& grads, Rng* rng) const;

    bool operator==(const ConvNet&) const = default;

private:
    void check_input(const Tensor& image) const;

    ConvNetConfig config_;
    std::vector<Tensor> params_;
};

}  // namespace fer4d
