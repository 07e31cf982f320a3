#include "fer4d/rankpool.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fer4d/error.hpp"

namespace fer4d {

namespace {

void check_frames(std::span<const FrameVector> frames) {
    require(!frames.empty(), "rank pooling needs at least one frame");
    for (const auto& f : frames) {
        if (f.size() != frames.front().size()) {
            fail(ErrorKind::LengthMismatch, "frame of length " + std::to_string(f.size()) + " in a video of length " +
                                                std::to_string(frames.front().size()));
        }
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// sum_t alpha_t f_t with alpha antisymmetric, evaluated pairwise as
// sum_{t < T/2} alpha_{T-1-t} (f_{T-1-t} - f_t) so that reversing the video
// negates the result bit for bit and constant videos give exact zeros.
std::vector<double> pool_linear(std::span<const FrameVector> frames) {
    const std::size_t T = frames.size();
    const std::size_t n = frames.front().size();
    std::vector<double> out(n, 0.0);
    for (std::size_t t = 0; t < T / 2; ++t) {
        const auto& early = frames[t];
        const auto& late = frames[T - 1 - t];
        const double a = static_cast<double>(T - 1 - 2 * t);  // alpha of the late frame
        for (std::size_t i = 0; i < n; ++i) out[i] += a * (late[i] - early[i]);
    }
    return out;
}

// sum_t alpha_t (V_t - V_1); equal to sum_t alpha_t V_t since the weights sum
// to zero, and exact zero for constant videos.
std::vector<double> pool_harmonic(std::span<const FrameVector> frames) {
    const auto means = running_means(frames);
    const auto alpha = arp_coefficients(frames.size(), PoolingVariant::HarmonicArp);
    const std::size_t n = frames.front().size();
    std::vector<double> out(n, 0.0);
    for (std::size_t t = 1; t < means.size(); ++t) {
        for (std::size_t i = 0; i < n; ++i) out[i] += alpha[t] * (means[t][i] - means[0][i]);
    }
    return out;
}

// Subgradient descent on the ranking objective from u = 0; returns the best
// iterate seen.
std::vector<double> pool_exact(std::span<const FrameVector> frames, const PoolingConfig& cfg) {
    const auto means = running_means(frames);
    const std::size_t T = means.size();
    const std::size_t n = frames.front().size();
    std::vector<double> u(n, 0.0);
    std::vector<double> best = u;
    double best_obj = ranking_objective(u, means, cfg.lambda);
    if (T < 2) return best;

    const double pair_weight = 2.0 / (static_cast<double>(T) * static_cast<double>(T - 1));
    std::vector<double> score(T);
    std::vector<double> grad(n);
    for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
        for (std::size_t t = 0; t < T; ++t) score[t] = dot(u, means[t]);
        // Hinge terms active for pair (t, t') contribute -(V_t' - V_t); collect
        // per-frame multiplicities instead of materializing differences.
        std::vector<double> weight(T, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t tp = t + 1; tp < T; ++tp) {
                if (1.0 - (score[tp] - score[t]) > 0.0) {
                    weight[tp] -= pair_weight;
                    weight[t] += pair_weight;
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) grad[i] = cfg.lambda * u[i];
        for (std::size_t t = 0; t < T; ++t) {
            if (weight[t] == 0.0) continue;
            for (std::size_t i = 0; i < n; ++i) grad[i] += weight[t] * means[t][i];
        }
        const double step = cfg.step_scale / (cfg.lambda * static_cast<double>(k));
        for (std::size_t i = 0; i < n; ++i) u[i] -= step * grad[i];
        const double obj = ranking_objective(u, means, cfg.lambda);
        if (obj < best_obj) {
            best_obj = obj;
            best = u;
        }
    }
    return best;
}

}  // namespace

void PoolingConfig::validate() const {
    if (variant != PoolingVariant::ExactRankSvm) return;
    require(lambda > 0.0, "pooling lambda must be > 0");
    require(max_iters > 0, "pooling iteration count must be > 0");
    require(step_scale > 0.0, "pooling step scale must be > 0");
}

std::vector<double> arp_coefficients(std::size_t T, PoolingVariant variant) {
    require(T >= 1, "coefficient count must be >= 1");
    require(variant != PoolingVariant::ExactRankSvm, "exact rank pooling has no closed-form coefficients");
    std::vector<double> alpha(T);
    if (variant == PoolingVariant::LinearArp) {
        for (std::size_t t = 1; t <= T; ++t) {
            alpha[t - 1] = 2.0 * static_cast<double>(t) - static_cast<double>(T) - 1.0;
        }
        return alpha;
    }
    // tail[t] = H_T - H_{t-1} = sum_{i=t..T} 1/i, summed from the small end.
    std::vector<long double> tail(T + 2, 0.0L);
    for (std::size_t i = T; i >= 1; --i) tail[i] = tail[i + 1] + 1.0L / static_cast<long double>(i);
    for (std::size_t t = 1; t <= T; ++t) {
        const long double a = 2.0L * static_cast<long double>(T - t + 1) -
                              static_cast<long double>(T + 1) * tail[t];
        alpha[t - 1] = static_cast<double>(a);
    }
    return alpha;
}

std::vector<FrameVector> running_means(std::span<const FrameVector> frames) {
    check_frames(frames);
    std::vector<FrameVector> means;
    means.reserve(frames.size());
    means.push_back(frames.front());
    for (std::size_t t = 1; t < frames.size(); ++t) {
        FrameVector v = means.back();
        const double inv = 1.0 / static_cast<double>(t + 1);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += (frames[t][i] - v[i]) * inv;
        means.push_back(std::move(v));
    }
    return means;
}

double ranking_objective(std::span<const double> u, std::span<const FrameVector> means, double lambda) {
    const std::size_t T = means.size();
    double obj = 0.5 * lambda * dot(u, u);
    if (T < 2) return obj;
    std::vector<double> score(T);
    for (std::size_t t = 0; t < T; ++t) score[t] = dot(u, means[t]);
    double hinge = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t tp = t + 1; tp < T; ++tp) hinge += std::max(0.0, 1.0 - (score[tp] - score[t]));
    }
    return obj + 2.0 / (static_cast<double>(T) * static_cast<double>(T - 1)) * hinge;
}

DynamicImage dynamic_image(std::span<const FrameVector> frames, const PoolingConfig& cfg) {
    cfg.validate();
    check_frames(frames);
    switch (cfg.variant) {
        case PoolingVariant::LinearArp: return {pool_linear(frames)};
        case PoolingVariant::HarmonicArp: return {pool_harmonic(frames)};
        case PoolingVariant::ExactRankSvm: return {pool_exact(frames, cfg)};
    }
    return {};
}

DynamicImage dynamic_image_per_channel(std::span<const FrameVector> frames, std::size_t channels,
                                       const PoolingConfig& cfg) {
    require(channels >= 1, "channel count must be >= 1");
    check_frames(frames);
    if (channels == 1 || cfg.variant != PoolingVariant::ExactRankSvm) return dynamic_image(frames, cfg);
    const std::size_t n = frames.front().size();
    require(n % channels == 0, "frame length is not a multiple of the channel count");
    DynamicImage out{std::vector<double>(n)};
    std::vector<FrameVector> plane(frames.size(), FrameVector(n / channels));
    for (std::size_t ch = 0; ch < channels; ++ch) {
        for (std::size_t t = 0; t < frames.size(); ++t) {
            for (std::size_t i = 0; i < n / channels; ++i) plane[t][i] = frames[t][i * channels + ch];
        }
        const auto pooled = dynamic_image(plane, cfg);
        for (std::size_t i = 0; i < n / channels; ++i) out.values[i * channels + ch] = pooled.values[i];
    }
    return out;
}

std::vector<double> normalize_display(std::span<const double> values) {
    std::vector<double> out(values.begin(), values.end());
    if (values.empty()) return out;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    for (auto& v : out) v = range > 0.0 ? (v - *lo) / range : 0.5;
    return out;
}

}  // namespace fer4d
