#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fer4d/landmarks.hpp"
#include "fer4d/rng.hpp"
#include "fer4d/tensor.hpp"

namespace fer4d {

struct BiLstmConfig {
    std::size_t input_dim = 68;
    std::size_t hidden = 64;  // per direction
    double dropout = 0.5;
    std::size_t num_classes = 6;

    void validate() const;
    bool operator==(const BiLstmConfig&) const = default;
};

// Bidirectional LSTM over a feature sequence. The final forward state and the
// final backward state (at the first frame) are concatenated, passed through
// inverted dropout while training, then a dense layer and softmax.
//
// Parameters, in order: forward Wx [4H, d], Wh [4H, H], b [4H]; the same for
// the backward direction; dense [classes, 2H] and bias [classes]. Gate rows
// are ordered input, forget, output, candidate.
class BiLstm {
public:
    using Sample = FeatureSequence;

    BiLstm() = default;
    explicit BiLstm(BiLstmConfig config);  // all-zero parameters

    // Uniform(+-1/sqrt(H)) recurrent weights, forget-gate bias 1.
    void initialize(std::uint64_t seed);

    const BiLstmConfig& config() const { return config_; }
    std::size_t num_classes() const { return config_.num_classes; }
    std::vector<Tensor>& parameters() { return params_; }
    const std::vector<Tensor>& parameters() const { return params_; }

    // Inference (dropout off).
    std::vector<double> logits(const FeatureSequence& seq) const;
    std::vector<double> predict(const FeatureSequence& seq) const;

    // Dropout is applied when `rng` is non-null and the rate is positive.
    double loss_and_grad(const FeatureSequence& seq, std::size_t label, std::vector<Tensor>& grads, Rng* rng) const;

    bool operator==(const BiLstm&) const = default;

private:
    struct Trace;
    Trace run_direction(const FeatureSequence& seq, std::size_t dir, bool reverse) const;
    void backprop_direction(const FeatureSequence& seq, std::size_t dir, const Trace& trace,
                            std::vector<double> grad_h, std::vector<Tensor>& grads) const;
    void check_input(const FeatureSequence& seq) const;

    BiLstmConfig config_;
    std::vector<Tensor> params_;
};

}  // namespace fer4d
