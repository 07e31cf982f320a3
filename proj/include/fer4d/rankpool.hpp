#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fer4d {

// One flattened video frame (K*K*channels values, channels interleaved).
using FrameVector = std::vector<double>;

struct DynamicImage {
    std::vector<double> values;
};

enum class PoolingVariant { LinearArp, HarmonicArp, ExactRankSvm };

struct PoolingConfig {
    PoolingVariant variant = PoolingVariant::LinearArp;
    // Exact variant: regularization weight, iteration count, and the scale of
    // the step schedule step_scale / (lambda * iteration).
    double lambda = 1.0;
    std::size_t max_iters = 200;
    double step_scale = 1.0;

    void validate() const;
};

// Approximate rank pooling weights alpha_1..alpha_T (sum to zero).
//   linear:   alpha_t = 2t - T - 1
//   harmonic: alpha_t = 2(T - t + 1) - (T + 1)(H_T - H_{t-1})
std::vector<double> arp_coefficients(std::size_t T, PoolingVariant variant);

// V_t = (1/t) * sum_{s<=t} f_s, accumulated incrementally.
std::vector<FrameVector> running_means(std::span<const FrameVector> frames);

// lambda/2 |u|^2 + mean over pairs t' > t of max(0, 1 - u.(V_t' - V_t)).
double ranking_objective(std::span<const double> u, std::span<const FrameVector> means, double lambda);

DynamicImage dynamic_image(std::span<const FrameVector> frames, const PoolingConfig& cfg = {});

// Pools a video of interleaved multi-channel frames channel by channel.
// Identical to dynamic_image for the ARP variants.
DynamicImage dynamic_image_per_channel(std::span<const FrameVector> frames, std::size_t channels,
                                       const PoolingConfig& cfg = {});

// Min-max map to [0, 1]; a constant input maps to 0.5 everywhere.
std::vector<double> normalize_display(std::span<const double> values);

}  // namespace fer4d
