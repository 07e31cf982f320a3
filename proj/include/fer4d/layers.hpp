#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fer4d/tensor.hpp"

// Layer kernels shared by the classifiers. Feature maps are [C, S, S].
namespace fer4d::layers {

// 3x3 convolution, stride 1, zero padding 1. weights [F, C, 3, 3], bias [F].
Tensor conv3x3_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

// Accumulates weight/bias gradients and returns the input gradient.
Tensor conv3x3_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out, Tensor& grad_weights,
                        Tensor& grad_bias);

void relu_inplace(Tensor& t);

// 2x2 max pooling, stride 2; `argmax` receives the flat input index of each winner.
Tensor maxpool2_forward(const Tensor& input, std::vector<std::size_t>& argmax);
Tensor maxpool2_backward(const std::vector<std::size_t>& input_shape, const std::vector<std::size_t>& argmax,
                         const Tensor& grad_out);

// y = W x + b, W [out, in].
std::vector<double> dense_forward(const Tensor& weights, const Tensor& bias, std::span<const double> x);
// Accumulates gradients and returns dL/dx.
std::vector<double> dense_backward(const Tensor& weights, std::span<const double> x, std::span<const double> grad_out,
                                   Tensor& grad_weights, Tensor& grad_bias);

std::vector<double> softmax(std::span<const double> logits);
// -log softmax(logits)[label], evaluated via log-sum-exp.
double cross_entropy(std::span<const double> logits, std::size_t label);

double sigmoid(double x);

}  // namespace fer4d::layers
