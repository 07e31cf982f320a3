#include "fer4d/layers.hpp"

#include <algorithm>
#include <cmath>

#include "fer4d/error.hpp"

namespace fer4d::layers {

namespace {

// Valid output range [lo, hi) along one axis for kernel offset k in {0,1,2}.
void valid_range(std::size_t k, std::size_t size, std::size_t& lo, std::size_t& hi) {
    lo = k == 0 ? 1 : 0;
    hi = k == 2 ? size - 1 : size;
}

}  // namespace

Tensor conv3x3_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    const std::size_t C = input.shape[0];
    const std::size_t S = input.shape[1];
    const std::size_t F = weights.shape[0];
    if (weights.shape[1] != C) fail(ErrorKind::ShapeMismatch, "conv weights do not match input channels");
    Tensor out({F, S, S});
    for (std::size_t f = 0; f < F; ++f) {
        double* o = out.data.data() + f * S * S;
        std::fill(o, o + S * S, bias[f]);
        for (std::size_t c = 0; c < C; ++c) {
            const double* in = input.data.data() + c * S * S;
            for (std::size_t ky = 0; ky < 3; ++ky) {
                std::size_t y0, y1;
                valid_range(ky, S, y0, y1);
                for (std::size_t kx = 0; kx < 3; ++kx) {
                    std::size_t x0, x1;
                    valid_range(kx, S, x0, x1);
                    const double w = weights[((f * C + c) * 3 + ky) * 3 + kx];
                    for (std::size_t y = y0; y < y1; ++y) {
                        const double* row = in + (y + ky - 1) * S;
                        double* orow = o + y * S;
                        for (std::size_t x = x0; x < x1; ++x) orow[x] += w * row[x + kx - 1];
                    }
                }
            }
        }
    }
    return out;
}

Tensor conv3x3_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out, Tensor& grad_weights,
                        Tensor& grad_bias) {
    const std::size_t C = input.shape[0];
    const std::size_t S = input.shape[1];
    const std::size_t F = weights.shape[0];
    Tensor grad_in({C, S, S});
    for (std::size_t f = 0; f < F; ++f) {
        const double* g = grad_out.data.data() + f * S * S;
        double bsum = 0.0;
        for (std::size_t i = 0; i < S * S; ++i) bsum += g[i];
        grad_bias[f] += bsum;
        for (std::size_t c = 0; c < C; ++c) {
            const double* in = input.data.data() + c * S * S;
            double* gin = grad_in.data.data() + c * S * S;
            for (std::size_t ky = 0; ky < 3; ++ky) {
                std::size_t y0, y1;
                valid_range(ky, S, y0, y1);
                for (std::size_t kx = 0; kx < 3; ++kx) {
                    std::size_t x0, x1;
                    valid_range(kx, S, x0, x1);
                    const std::size_t widx = ((f * C + c) * 3 + ky) * 3 + kx;
                    const double w = weights[widx];
                    double wsum = 0.0;
                    for (std::size_t y = y0; y < y1; ++y) {
                        const std::size_t off = (y + ky - 1) * S;
                        const double* grow = g + y * S;
                        for (std::size_t x = x0; x < x1; ++x) {
                            wsum += grow[x] * in[off + x + kx - 1];
                            gin[off + x + kx - 1] += grow[x] * w;
                        }
                    }
                    grad_weights[widx] += wsum;
                }
            }
        }
    }
    return grad_in;
}

void relu_inplace(Tensor& t) {
    for (auto& v : t.data) v = std::max(0.0, v);
}

Tensor maxpool2_forward(const Tensor& input, std::vector<std::size_t>& argmax) {
    const std::size_t C = input.shape[0];
    const std::size_t S = input.shape[1];
    if (S % 2 != 0) fail(ErrorKind::ShapeMismatch, "max pooling needs an even map size");
    const std::size_t H = S / 2;
    Tensor out({C, H, H});
    argmax.assign(out.size(), 0);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t y = 0; y < H; ++y) {
            for (std::size_t x = 0; x < H; ++x) {
                std::size_t best = (c * S + 2 * y) * S + 2 * x;
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = (c * S + 2 * y + dy) * S + 2 * x + dx;
                        if (input[idx] > input[best]) best = idx;
                    }
                }
                const std::size_t o = (c * H + y) * H + x;
                out[o] = input[best];
                argmax[o] = best;
            }
        }
    }
    return out;
}

Tensor maxpool2_backward(const std::vector<std::size_t>& input_shape, const std::vector<std::size_t>& argmax,
                         const Tensor& grad_out) {
    Tensor grad_in(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) grad_in[argmax[i]] += grad_out[i];
    return grad_in;
}

std::vector<double> dense_forward(const Tensor& weights, const Tensor& bias, std::span<const double> x) {
    const std::size_t out_dim = weights.shape[0];
    const std::size_t in_dim = weights.shape[1];
    if (x.size() != in_dim) fail(ErrorKind::ShapeMismatch, "dense layer input size mismatch");
    std::vector<double> y(out_dim);
    for (std::size_t o = 0; o < out_dim; ++o) {
        const double* w = weights.data.data() + o * in_dim;
        double s = bias[o];
        for (std::size_t i = 0; i < in_dim; ++i) s += w[i] * x[i];
        y[o] = s;
    }
    return y;
}

std::vector<double> dense_backward(const Tensor& weights, std::span<const double> x, std::span<const double> grad_out,
                                   Tensor& grad_weights, Tensor& grad_bias) {
    const std::size_t out_dim = weights.shape[0];
    const std::size_t in_dim = weights.shape[1];
    std::vector<double> grad_x(in_dim, 0.0);
    for (std::size_t o = 0; o < out_dim; ++o) {
        const double g = grad_out[o];
        grad_bias[o] += g;
        if (g == 0.0) continue;
        const double* w = weights.data.data() + o * in_dim;
        double* gw = grad_weights.data.data() + o * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) {
            gw[i] += g * x[i];
            grad_x[i] += g * w[i];
        }
    }
    return grad_x;
}

std::vector<double> softmax(std::span<const double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - m);
    return m + std::log(sum) - logits[label];
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace fer4d::layers
