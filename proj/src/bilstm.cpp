#include "fer4d/bilstm.hpp"

#include <cmath>
#include <string>

#include "fer4d/error.hpp"
#include "fer4d/layers.hpp"

namespace fer4d {

// Per-step values of one direction, in processing order.
struct BiLstm::Trace {
    std::vector<std::size_t> rows;  // sequence row consumed at each step
    std::vector<double> gates;      // steps x 4H, post-activation
    std::vector<double> cell;       // (steps + 1) x H, cell[0] = 0
    std::vector<double> hidden;     // (steps + 1) x H, hidden[0] = 0
};

void BiLstmConfig::validate() const {
    require(input_dim >= 1, "BiLSTM input dimension must be >= 1");
    require(hidden >= 1, "BiLSTM hidden size must be >= 1");
    require(dropout >= 0.0 && dropout < 1.0, "dropout rate must lie in [0, 1)");
    require(num_classes >= 2, "BiLSTM needs at least two classes");
}

BiLstm::BiLstm(BiLstmConfig config) : config_(config) {
    config_.validate();
    const std::size_t H = config_.hidden;
    for (int dir = 0; dir < 2; ++dir) {
        params_.emplace_back(std::vector<std::size_t>{4 * H, config_.input_dim});
        params_.emplace_back(std::vector<std::size_t>{4 * H, H});
        params_.emplace_back(std::vector<std::size_t>{4 * H});
    }
    params_.emplace_back(std::vector<std::size_t>{config_.num_classes, 2 * H});
    params_.emplace_back(std::vector<std::size_t>{config_.num_classes});
}

void BiLstm::initialize(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t H = config_.hidden;
    const double bound = 1.0 / std::sqrt(static_cast<double>(H));
    for (std::size_t dir = 0; dir < 2; ++dir) {
        for (std::size_t k = 0; k < 2; ++k) {
            for (auto& v : params_[3 * dir + k].data) v = rng.uniform(-bound, bound);
        }
        auto& b = params_[3 * dir + 2];
        b.fill(0.0);
        for (std::size_t j = H; j < 2 * H; ++j) b[j] = 1.0;
    }
    const double fc_bound = std::sqrt(6.0 / static_cast<double>(2 * H + config_.num_classes));
    for (auto& v : params_[6].data) v = rng.uniform(-fc_bound, fc_bound);
    params_[7].fill(0.0);
}

void BiLstm::check_input(const FeatureSequence& seq) const {
    if (seq.dim != config_.input_dim || seq.length() == 0 || seq.data.size() != seq.length() * seq.dim) {
        fail(ErrorKind::ShapeMismatch, "BiLSTM expects a non-empty sequence of dimension " +
                                           std::to_string(config_.input_dim) + ", got dimension " +
                                           std::to_string(seq.dim));
    }
}

BiLstm::Trace BiLstm::run_direction(const FeatureSequence& seq, std::size_t dir, bool reverse) const {
    const std::size_t H = config_.hidden;
    const std::size_t d = config_.input_dim;
    const std::size_t T = seq.length();
    const Tensor& wx = params_[3 * dir];
    const Tensor& wh = params_[3 * dir + 1];
    const Tensor& b = params_[3 * dir + 2];

    Trace tr;
    tr.rows.resize(T);
    tr.gates.assign(T * 4 * H, 0.0);
    tr.cell.assign((T + 1) * H, 0.0);
    tr.hidden.assign((T + 1) * H, 0.0);
    std::vector<double> a(4 * H);
    for (std::size_t s = 0; s < T; ++s) {
        const std::size_t row = reverse ? T - 1 - s : s;
        tr.rows[s] = row;
        const auto x = seq.row(row);
        const double* h_prev = tr.hidden.data() + s * H;
        for (std::size_t j = 0; j < 4 * H; ++j) {
            double v = b[j];
            const double* wxr = wx.data.data() + j * d;
            for (std::size_t k = 0; k < d; ++k) v += wxr[k] * x[k];
            const double* whr = wh.data.data() + j * H;
            for (std::size_t k = 0; k < H; ++k) v += whr[k] * h_prev[k];
            a[j] = v;
        }
        double* g = tr.gates.data() + s * 4 * H;
        const double* c_prev = tr.cell.data() + s * H;
        double* c = tr.cell.data() + (s + 1) * H;
        double* h = tr.hidden.data() + (s + 1) * H;
        for (std::size_t j = 0; j < H; ++j) {
            g[j] = layers::sigmoid(a[j]);
            g[H + j] = layers::sigmoid(a[H + j]);
            g[2 * H + j] = layers::sigmoid(a[2 * H + j]);
            g[3 * H + j] = std::tanh(a[3 * H + j]);
            c[j] = g[H + j] * c_prev[j] + g[j] * g[3 * H + j];
            h[j] = g[2 * H + j] * std::tanh(c[j]);
        }
    }
    return tr;
}

void BiLstm::backprop_direction(const FeatureSequence& seq, std::size_t dir, const Trace& tr,
                                std::vector<double> grad_h, std::vector<Tensor>& grads) const {
    const std::size_t H = config_.hidden;
    const std::size_t d = config_.input_dim;
    const Tensor& wh = params_[3 * dir + 1];
    Tensor& gwx = grads[3 * dir];
    Tensor& gwh = grads[3 * dir + 1];
    Tensor& gb = grads[3 * dir + 2];

    std::vector<double> grad_c(H, 0.0);
    std::vector<double> da(4 * H);
    for (std::size_t s = tr.rows.size(); s-- > 0;) {
        const double* g = tr.gates.data() + s * 4 * H;
        const double* c_prev = tr.cell.data() + s * H;
        const double* c = tr.cell.data() + (s + 1) * H;
        const double* h_prev = tr.hidden.data() + s * H;
        for (std::size_t j = 0; j < H; ++j) {
            const double i = g[j], f = g[H + j], o = g[2 * H + j], cand = g[3 * H + j];
            const double tc = std::tanh(c[j]);
            const double dc = grad_c[j] + grad_h[j] * o * (1.0 - tc * tc);
            da[j] = dc * cand * i * (1.0 - i);
            da[H + j] = dc * c_prev[j] * f * (1.0 - f);
            da[2 * H + j] = grad_h[j] * tc * o * (1.0 - o);
            da[3 * H + j] = dc * i * (1.0 - cand * cand);
            grad_c[j] = dc * f;
        }
        const auto x = seq.row(tr.rows[s]);
        std::fill(grad_h.begin(), grad_h.end(), 0.0);
        for (std::size_t j = 0; j < 4 * H; ++j) {
            const double v = da[j];
            gb[j] += v;
            if (v == 0.0) continue;
            double* gx = gwx.data.data() + j * d;
            for (std::size_t k = 0; k < d; ++k) gx[k] += v * x[k];
            double* gh = gwh.data.data() + j * H;
            const double* whr = wh.data.data() + j * H;
            for (std::size_t k = 0; k < H; ++k) {
                gh[k] += v * h_prev[k];
                grad_h[k] += v * whr[k];
            }
        }
    }
}

std::vector<double> BiLstm::logits(const FeatureSequence& seq) const {
    check_input(seq);
    const std::size_t H = config_.hidden;
    const std::size_t T = seq.length();
    const auto fwd = run_direction(seq, 0, false);
    const auto bwd = run_direction(seq, 1, true);
    std::vector<double> z(2 * H);
    std::copy_n(fwd.hidden.begin() + static_cast<std::ptrdiff_t>(T * H), H, z.begin());
    std::copy_n(bwd.hidden.begin() + static_cast<std::ptrdiff_t>(T * H), H, z.begin() + static_cast<std::ptrdiff_t>(H));
    return layers::dense_forward(params_[6], params_[7], z);
}

std::vector<double> BiLstm::predict(const FeatureSequence& seq) const { return layers::softmax(logits(seq)); }

double BiLstm::loss_and_grad(const FeatureSequence& seq, std::size_t label, std::vector<Tensor>& grads,
                             Rng* rng) const {
    check_input(seq);
    require(label < config_.num_classes, "label out of range");
    const std::size_t H = config_.hidden;
    const std::size_t T = seq.length();
    const auto fwd = run_direction(seq, 0, false);
    const auto bwd = run_direction(seq, 1, true);

    std::vector<double> z(2 * H);
    std::copy_n(fwd.hidden.begin() + static_cast<std::ptrdiff_t>(T * H), H, z.begin());
    std::copy_n(bwd.hidden.begin() + static_cast<std::ptrdiff_t>(T * H), H, z.begin() + static_cast<std::ptrdiff_t>(H));
    std::vector<double> mask(2 * H, 1.0);
    if (rng != nullptr && config_.dropout > 0.0) {
        const double keep_scale = 1.0 / (1.0 - config_.dropout);
        for (auto& m : mask) m = rng->uniform() < config_.dropout ? 0.0 : keep_scale;
        for (std::size_t j = 0; j < 2 * H; ++j) z[j] *= mask[j];
    }

    const auto out = layers::dense_forward(params_[6], params_[7], z);
    const double loss = layers::cross_entropy(out, label);
    auto grad_logits = layers::softmax(out);
    grad_logits[label] -= 1.0;
    auto grad_z = layers::dense_backward(params_[6], z, grad_logits, grads[6], grads[7]);
    for (std::size_t j = 0; j < 2 * H; ++j) grad_z[j] *= mask[j];

    backprop_direction(seq, 0, fwd, {grad_z.begin(), grad_z.begin() + static_cast<std::ptrdiff_t>(H)}, grads);
    backprop_direction(seq, 1, bwd, {grad_z.begin() + static_cast<std::ptrdiff_t>(H), grad_z.end()}, grads);
    return loss;
}

}  // namespace fer4d
