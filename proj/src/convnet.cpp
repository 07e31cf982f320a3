#include "fer4d/convnet.hpp"

#include <cmath>
#include <string>

#include "fer4d/error.hpp"
#include "fer4d/layers.hpp"

namespace fer4d {

std::size_t ConvNetConfig::flat_size() const {
    std::size_t size = input_size;
    for (std::size_t i = 0; i < filters.size(); ++i) size /= 2;
    return (filters.empty() ? in_channels : filters.back()) * size * size;
}

void ConvNetConfig::validate() const {
    require(in_channels >= 1, "ConvNet needs at least one input channel");
    require(num_classes >= 2, "ConvNet needs at least two classes");
    require(input_size >= 1 && input_size % (std::size_t{1} << filters.size()) == 0,
            "ConvNet input size must be divisible by 2^blocks");
    for (auto f : filters) require(f >= 1, "ConvNet block needs at least one filter");
}

ConvNet::ConvNet(ConvNetConfig config) : config_(std::move(config)) {
    config_.validate();
    std::size_t channels = config_.in_channels;
    for (auto f : config_.filters) {
        params_.emplace_back(std::vector<std::size_t>{f, channels, 3, 3});
        params_.emplace_back(std::vector<std::size_t>{f});
        channels = f;
    }
    params_.emplace_back(std::vector<std::size_t>{config_.num_classes, config_.flat_size()});
    params_.emplace_back(std::vector<std::size_t>{config_.num_classes});
}

void ConvNet::initialize(std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t p = 0; p + 1 < params_.size(); p += 2) {
        auto& w = params_[p];
        const std::size_t fan_in = w.size() / w.shape[0];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (auto& v : w.data) v = rng.uniform(-bound, bound);
        params_[p + 1].fill(0.0);
    }
}

void ConvNet::check_input(const Tensor& image) const {
    const std::vector<std::size_t> expected{config_.in_channels, config_.input_size, config_.input_size};
    if (image.shape != expected || image.size() != Tensor::element_count(expected)) {
        fail(ErrorKind::ShapeMismatch, "ConvNet expects a [" + std::to_string(config_.in_channels) + ", " +
                                           std::to_string(config_.input_size) + ", " +
                                           std::to_string(config_.input_size) + "] image");
    }
}

std::vector<double> ConvNet::logits(const Tensor& image) const {
    check_input(image);
    Tensor x = image;
    std::vector<std::size_t> argmax;
    for (std::size_t b = 0; b < config_.filters.size(); ++b) {
        Tensor z = layers::conv3x3_forward(x, params_[2 * b], params_[2 * b + 1]);
        layers::relu_inplace(z);
        x = layers::maxpool2_forward(z, argmax);
    }
    const std::size_t fc = 2 * config_.filters.size();
    return layers::dense_forward(params_[fc], params_[fc + 1], x.data);
}

std::vector<double> ConvNet::predict(const Tensor& image) const { return layers::softmax(logits(image)); }

double ConvNet::loss_and_grad(const Tensor& image, std::size_t label, std::vector<Tensor>& grads, Rng*) const {
    check_input(image);
    require(label < config_.num_classes, "label out of range");
    const std::size_t blocks = config_.filters.size();
    std::vector<Tensor> inputs;       // block inputs
    std::vector<Tensor> activations;  // post-ReLU maps
    std::vector<std::vector<std::size_t>> argmaxes(blocks);
    Tensor x = image;
    for (std::size_t b = 0; b < blocks; ++b) {
        inputs.push_back(x);
        Tensor z = layers::conv3x3_forward(x, params_[2 * b], params_[2 * b + 1]);
        layers::relu_inplace(z);
        x = layers::maxpool2_forward(z, argmaxes[b]);
        activations.push_back(std::move(z));
    }
    const std::size_t fc = 2 * blocks;
    const auto out = layers::dense_forward(params_[fc], params_[fc + 1], x.data);
    const double loss = layers::cross_entropy(out, label);

    auto grad_logits = layers::softmax(out);
    grad_logits[label] -= 1.0;
    auto grad_flat = layers::dense_backward(params_[fc], x.data, grad_logits, grads[fc], grads[fc + 1]);
    Tensor grad(x.shape, std::move(grad_flat));
    for (std::size_t b = blocks; b-- > 0;) {
        Tensor grad_z = layers::maxpool2_backward(activations[b].shape, argmaxes[b], grad);
        for (std::size_t i = 0; i < grad_z.size(); ++i) {
            if (activations[b][i] <= 0.0) grad_z[i] = 0.0;
        }
        grad = layers::conv3x3_backward(inputs[b], params_[2 * b], grad_z, grads[2 * b], grads[2 * b + 1]);
    }
    return loss;
}

}  // namespace fer4d
