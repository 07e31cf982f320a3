#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fer4d/error.hpp"
#include "fer4d/rng.hpp"
#include "fer4d/tensor.hpp"

namespace fer4d {

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 50;
    std::size_t batch_size = 8;
    double weight_decay = 1e-4;
    std::uint64_t seed = 1;

    void validate() const {
        require(learning_rate >= 0.0, "learning rate must be >= 0");
        require(batch_size >= 1, "batch size must be >= 1");
        require(weight_decay >= 0.0, "weight decay must be >= 0");
    }
};

template <typename Sample>
struct LabeledSet {
    std::span<const Sample> samples;
    std::span<const std::size_t> labels;

    std::size_t size() const { return samples.size(); }
};

struct TrainResult {
    // Mean inference-mode training loss after each epoch.
    std::vector<double> loss_history;
    // Validation accuracy after each epoch (empty without a validation set).
    std::vector<double> validation_accuracy;
    // Epoch (0-based) whose weights were kept.
    std::size_t selected_epoch = 0;
};

template <typename Model>
std::vector<Tensor> zero_like(const Model& model) {
    std::vector<Tensor> grads;
    for (const auto& p : model.parameters()) grads.emplace_back(p.shape);
    return grads;
}

template <typename Model, typename Sample>
double mean_loss(const Model& model, const LabeledSet<Sample>& data) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto logits = model.logits(data.samples[i]);
        const double m = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (double l : logits) sum += std::exp(l - m);
        total += m + std::log(sum) - logits[data.labels[i]];
    }
    return data.size() == 0 ? 0.0 : total / static_cast<double>(data.size());
}

template <typename Model, typename Sample>
double accuracy(const Model& model, const LabeledSet<Sample>& data) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto logits = model.logits(data.samples[i]);
        const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        correct += best == data.labels[i];
    }
    return data.size() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(data.size());
}

// Mini-batch gradient descent on mean cross-entropy plus L2 weight decay.
// Batches come from a per-epoch shuffle seeded by cfg.seed; stochastic layers
// draw from the same stream. Gradients within a batch are summed in batch
// order. With a validation set, the weights of the epoch with the best
// validation accuracy (latest on ties) are kept.
template <typename Model, typename Sample>
TrainResult train_classifier(Model& model, const LabeledSet<Sample>& train, const TrainConfig& cfg,
                             const LabeledSet<Sample>* validation = nullptr) {
    cfg.validate();
    require(train.samples.size() == train.labels.size(), "sample and label counts differ");
    std::vector<std::size_t> per_class(model.num_classes(), 0);
    for (auto label : train.labels) {
        require(label < model.num_classes(), "label out of range");
        ++per_class[label];
    }
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        if (per_class[c] == 0) fail(ErrorKind::EmptyClass, "no training example for class " + std::to_string(c));
    }

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto grads = zero_like(model);
    TrainResult result;
    auto best_params = model.parameters();
    double best_val = -1.0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            for (auto& g : grads) g.fill(0.0);
            for (std::size_t k = start; k < end; ++k) {
                model.loss_and_grad(train.samples[order[k]], train.labels[order[k]], grads, &rng);
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            auto& params = model.parameters();
            for (std::size_t p = 0; p < params.size(); ++p) {
                auto& w = params[p].data;
                const auto& g = grads[p].data;
                for (std::size_t i = 0; i < w.size(); ++i) {
                    w[i] -= cfg.learning_rate * (g[i] * scale + cfg.weight_decay * w[i]);
                }
            }
        }
        result.loss_history.push_back(mean_loss(model, train));
        if (validation != nullptr && validation->size() > 0) {
            const double acc = accuracy(model, *validation);
            result.validation_accuracy.push_back(acc);
            if (acc >= best_val) {
                best_val = acc;
                best_params = model.parameters();
                result.selected_epoch = epoch;
            }
        } else {
            result.selected_epoch = epoch;
        }
    }
    if (validation != nullptr && validation->size() > 0 && cfg.epochs > 0) model.parameters() = best_params;
    return result;
}

// Compares analytic gradients of the single-sample loss with central
// differences on `count` randomly chosen parameters (all of them if fewer).
// Returns max |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
template <typename Model, typename Sample>
double grad_check(Model model, const Sample& sample, std::size_t label, double epsilon = 1e-5,
                  std::size_t count = 200, std::uint64_t seed = 7) {
    auto grads = zero_like(model);
    model.loss_and_grad(sample, label, grads, nullptr);

    std::vector<std::pair<std::size_t, std::size_t>> all;
    for (std::size_t p = 0; p < model.parameters().size(); ++p) {
        for (std::size_t i = 0; i < model.parameters()[p].size(); ++i) all.emplace_back(p, i);
    }
    Rng rng(seed);
    rng.shuffle(std::span<std::pair<std::size_t, std::size_t>>(all));
    if (all.size() > count) all.resize(count);

    auto scratch = zero_like(model);
    auto loss_at = [&](std::size_t p, std::size_t i, double value) {
        double& w = model.parameters()[p][i];
        const double saved = w;
        w = value;
        const double loss = model.loss_and_grad(sample, label, scratch, nullptr);
        w = saved;
        return loss;
    };
    double worst = 0.0;
    for (const auto& [p, i] : all) {
        const double w = model.parameters()[p][i];
        const double numeric = (loss_at(p, i, w + epsilon) - loss_at(p, i, w - epsilon)) / (2.0 * epsilon);
        const double analytic = grads[p][i];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
    return worst;
}

}  // namespace fer4d
