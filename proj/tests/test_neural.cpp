#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fer4d/error.hpp"
#include "fer4d/layers.hpp"
#include "fer4d/neural.hpp"
#include "fer4d/rng.hpp"
#include "helpers.hpp"

using namespace fer4d;

namespace {

ConvNetConfig tiny_conv(std::vector<std::size_t> filters = {2}, std::size_t classes = 6) {
    ConvNetConfig c;
    c.in_channels = 1;
    c.input_size = 8;
    c.filters = std::move(filters);
    c.num_classes = classes;
    return c;
}

BiLstmConfig tiny_lstm(std::size_t d = 4, std::size_t h = 3, double dropout = 0.0, std::size_t classes = 6) {
    BiLstmConfig c;
    c.input_dim = d;
    c.hidden = h;
    c.dropout = dropout;
    c.num_classes = classes;
    return c;
}

Tensor random_image(Rng& rng, std::size_t C, std::size_t S) {
    Tensor t({C, S, S});
    for (auto& x : t.data) x = rng.normal();
    return t;
}

FeatureSequence random_seq(Rng& rng, std::size_t d, std::size_t T) {
    FeatureSequence s;
    s.dim = d;
    for (std::size_t i = 0; i < d * T; ++i) s.data.push_back(rng.normal());
    return s;
}

double total(const std::vector<double>& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

void check_distribution(const std::vector<double>& p, std::size_t classes = 6) {
    REQUIRE(p.size() == classes);
    for (double x : p) CHECK(x >= 0.0);
    CHECK(std::abs(total(p) - 1.0) <= 1e-9);
}

// Ascending (label 0) or descending (label 1) x-position over T frames.
FeatureSequence motion(Rng& rng, bool ascending, std::size_t T) {
    FeatureSequence s;
    s.dim = 2;
    const double start = rng.uniform(0.1, 0.3), step = rng.uniform(0.05, 0.1);
    for (std::size_t t = 0; t < T; ++t) {
        const double x = start + step * static_cast<double>(ascending ? t : T - 1 - t);
        s.data.push_back(x);
        s.data.push_back(0.5);
    }
    return s;
}

}  // namespace

TEST_CASE("zero models predict the uniform distribution") {
    Rng rng(1);
    const ConvNet conv(tiny_conv({2, 3}));
    const auto p = convnet_forward(conv, random_image(rng, 1, 8));
    for (double x : p) CHECK(x == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

    const BiLstm lstm(tiny_lstm());
    for (std::size_t T : {1u, 5u}) {
        const auto q = bilstm_forward(lstm, random_seq(rng, 4, T));
        for (double x : q) CHECK(x == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    }
}

TEST_CASE("delta kernel convolution is the identity") {
    Rng rng(2);
    const Tensor in = random_image(rng, 1, 7);
    Tensor w({1, 1, 3, 3});
    w[4] = 1.0;
    const Tensor bias({1});
    CHECK(layers::conv3x3_forward(in, w, bias) == in);

    // per-channel deltas on a 3-channel input select that channel
    const Tensor in3 = random_image(rng, 3, 6);
    Tensor w3({3, 3, 3, 3});
    for (std::size_t f = 0; f < 3; ++f) w3[((f * 3 + f) * 3 + 1) * 3 + 1] = 1.0;
    CHECK(layers::conv3x3_forward(in3, w3, Tensor({3})) == in3);
}

TEST_CASE("layer kernels against direct formulas") {
    Rng rng(3);
    const Tensor in = random_image(rng, 2, 5);
    Tensor weights({3, 2, 3, 3});
    for (auto& x : weights.data) x = rng.normal();
    Tensor bias({3});
    for (auto& x : bias.data) x = rng.normal();
    const auto out = layers::conv3x3_forward(in, weights, bias);
    REQUIRE(out.shape == std::vector<std::size_t>{3, 5, 5});
    for (std::size_t f = 0; f < 3; ++f) {
        for (int r = 0; r < 5; ++r) {
            for (int c = 0; c < 5; ++c) {
                double acc = bias[f];
                for (std::size_t ch = 0; ch < 2; ++ch) {
                    for (int dr = -1; dr <= 1; ++dr) {
                        for (int dc = -1; dc <= 1; ++dc) {
                            const int rr = r + dr, cc = c + dc;
                            if (rr < 0 || rr >= 5 || cc < 0 || cc >= 5) continue;
                            acc += weights[((f * 2 + ch) * 3 + static_cast<std::size_t>(dr + 1)) * 3 +
                                           static_cast<std::size_t>(dc + 1)] *
                                   in[(ch * 5 + static_cast<std::size_t>(rr)) * 5 + static_cast<std::size_t>(cc)];
                        }
                    }
                }
                CHECK(out[(f * 5 + static_cast<std::size_t>(r)) * 5 + static_cast<std::size_t>(c)] ==
                      doctest::Approx(acc).epsilon(1e-12));
            }
        }
    }

    const Tensor img = random_image(rng, 1, 4);
    std::vector<std::size_t> arg;
    const auto pooled = layers::maxpool2_forward(img, arg);
    REQUIRE(pooled.shape == std::vector<std::size_t>{1, 2, 2});
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 2; ++c) {
            const double m = std::max({img[(2 * r) * 4 + 2 * c], img[(2 * r) * 4 + 2 * c + 1],
                                       img[(2 * r + 1) * 4 + 2 * c], img[(2 * r + 1) * 4 + 2 * c + 1]});
            CHECK(pooled[r * 2 + c] == m);
        }
    }

    const std::vector<double> logits{1.0, 2.0, 3.0};
    const auto sm = layers::softmax(logits);
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    CHECK(sm[2] == doctest::Approx(std::exp(3.0) / z));
    CHECK(layers::cross_entropy(logits, 0) == doctest::Approx(std::log(z) - 1.0));
    // large logits stay finite
    CHECK(std::isfinite(layers::cross_entropy(std::vector<double>{1000.0, -1000.0}, 1)));
}

TEST_CASE("forward passes return distributions") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        ConvNet conv(tiny_conv({2, 3}));
        conv.initialize(100 + trial);
        for (auto& p : conv.parameters()) {
            for (auto& x : p.data) x *= 5.0;  // push the logits apart
        }
        check_distribution(convnet_forward(conv, random_image(rng, 1, 8)));

        BiLstm lstm(tiny_lstm(4, 5, 0.5));
        lstm.initialize(200 + trial);
        check_distribution(bilstm_forward(lstm, random_seq(rng, 4, 1 + trial % 7)));
    }
}

TEST_CASE("shape mismatches are rejected") {
    Rng rng(5);
    ConvNet conv(tiny_conv());
    auto expect_shape_error = [](auto&& fn) {
        try {
            fn();
            FAIL("expected ShapeMismatch");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::ShapeMismatch);
        }
    };
    expect_shape_error([&] { convnet_forward(conv, random_image(rng, 1, 6)); });
    expect_shape_error([&] { convnet_forward(conv, random_image(rng, 2, 8)); });
    BiLstm lstm(tiny_lstm());
    expect_shape_error([&] { bilstm_forward(lstm, random_seq(rng, 3, 4)); });
    expect_shape_error([&] { bilstm_forward(lstm, random_seq(rng, 4, 0)); });
}

TEST_CASE("gradient checks") {
    Rng rng(6);
    SUBCASE("tiny convnet") {
        ConvNet conv(tiny_conv({2}));
        conv.initialize(11);
        for (std::size_t label = 0; label < 6; label += 2) {
            CHECK(grad_check(conv, random_image(rng, 1, 8), label, 1e-5, 200) <= 1e-4);
        }
        ConvNet deep(tiny_conv({2, 3}));
        deep.initialize(12);
        CHECK(grad_check(deep, random_image(rng, 1, 8), 3, 1e-5, 400) <= 1e-4);
    }
    SUBCASE("tiny bilstm") {
        BiLstm lstm(tiny_lstm(4, 3, 0.5));
        lstm.initialize(13);
        for (std::size_t label = 0; label < 6; label += 2) {
            CHECK(grad_check(lstm, random_seq(rng, 4, 5), label, 1e-5, 200) <= 1e-4);
        }
        CHECK(grad_check(lstm, random_seq(rng, 4, 1), 1, 1e-5, 200) <= 1e-4);
    }
    SUBCASE("linear model") {
        ConvNet lin(tiny_conv({}));
        lin.initialize(14);
        CHECK(grad_check(lin, random_image(rng, 1, 8), 4, 1e-5, 200) <= 1e-7);
    }
}

TEST_CASE("convnet training") {
    Rng rng(7);
    std::vector<Tensor> images;
    std::vector<std::size_t> labels;
    for (int i = 0; i < 8; ++i) {
        Tensor t({1, 8, 8});
        t.fill(i % 2 == 0 ? 0.0 : 1.0);
        images.push_back(t);
        labels.push_back(static_cast<std::size_t>(i % 2));
    }
    const TrainConfig cfg{0.1, 50, 4, 0.0, 3};

    SUBCASE("constant images are separated") {
        // A block of two filters can start with both units dead on the all-1
        // image (negative kernel sums), so use the default block width.
        for (const auto& filters : {std::vector<std::size_t>{}, std::vector<std::size_t>{8}}) {
            for (std::uint64_t seed : {1u, 2u, 3u}) {
                ConvNet model(tiny_conv(filters, 2));
                model.initialize(seed);
                const auto res = convnet_train(model, images, labels, cfg);
                CHECK(res.loss_history.size() == 50);
                CHECK(res.loss_history.back() <= res.loss_history.front());
                for (std::size_t i = 0; i < images.size(); ++i) {
                    const auto p = convnet_forward(model, images[i]);
                    CHECK(static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == labels[i]);
                }
            }
        }
    }
    SUBCASE("zero learning rate changes nothing") {
        ConvNet model(tiny_conv({2}, 2));
        model.initialize(1);
        const ConvNet before = model;
        auto flat = cfg;
        flat.learning_rate = 0.0;
        const auto res = convnet_train(model, images, labels, flat);
        CHECK(model == before);
        for (double l : res.loss_history) CHECK(l == res.loss_history.front());
    }
    SUBCASE("same seed, same history") {
        ConvNet a(tiny_conv({2}, 2)), b(tiny_conv({2}, 2));
        a.initialize(5);
        b.initialize(5);
        CHECK(convnet_train(a, images, labels, cfg).loss_history ==
              convnet_train(b, images, labels, cfg).loss_history);
        CHECK(a == b);
    }
    SUBCASE("missing class") {
        ConvNet model(tiny_conv({2}, 3));
        try {
            convnet_train(model, images, labels, cfg);
            FAIL("expected EmptyClass");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::EmptyClass);
        }
    }
}

TEST_CASE("full-batch training ignores sample order") {
    Rng rng(8);
    std::vector<Tensor> images;
    std::vector<std::size_t> labels;
    for (int i = 0; i < 12; ++i) {
        images.push_back(random_image(rng, 1, 8));
        labels.push_back(static_cast<std::size_t>(i % 3));
    }
    std::vector<std::size_t> perm(images.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<Tensor> images2;
    std::vector<std::size_t> labels2;
    for (auto i : perm) {
        images2.push_back(images[i]);
        labels2.push_back(labels[i]);
    }
    const TrainConfig cfg{0.05, 10, images.size(), 1e-3, 9};
    ConvNet a(tiny_conv({2}, 3)), b(tiny_conv({2}, 3));
    a.initialize(3);
    b.initialize(3);
    const auto ra = convnet_train(a, images, labels, cfg);
    const auto rb = convnet_train(b, images2, labels2, cfg);
    // only the order of the batch sum differs
    for (std::size_t e = 0; e < ra.loss_history.size(); ++e) {
        CHECK(rb.loss_history[e] == doctest::Approx(ra.loss_history[e]).epsilon(1e-10));
    }
    for (std::size_t p = 0; p < a.parameters().size(); ++p) {
        for (std::size_t i = 0; i < a.parameters()[p].size(); ++i) {
            CHECK(b.parameters()[p][i] == doctest::Approx(a.parameters()[p][i]).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("bilstm training") {
    Rng rng(9);
    std::vector<FeatureSequence> seqs;
    std::vector<std::size_t> labels;
    for (int i = 0; i < 16; ++i) {
        seqs.push_back(motion(rng, i % 2 == 0, 6));
        labels.push_back(static_cast<std::size_t>(i % 2));
    }
    const TrainConfig cfg{0.2, 100, 4, 0.0, 4};

    SUBCASE("ascending and descending motion are separated") {
        BiLstm model(tiny_lstm(2, 6, 0.5, 2));
        model.initialize(2);
        const auto res = bilstm_train(model, seqs, labels, cfg);
        CHECK(res.loss_history.back() <= res.loss_history.front());
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            const auto p = bilstm_forward(model, seqs[i]);
            CHECK(static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == labels[i]);
        }
    }
    SUBCASE("zero learning rate changes nothing") {
        BiLstm model(tiny_lstm(2, 6, 0.5, 2));
        model.initialize(2);
        const BiLstm before = model;
        auto flat = cfg;
        flat.learning_rate = 0.0;
        flat.epochs = 5;
        const auto res = bilstm_train(model, seqs, labels, flat);
        CHECK(model == before);
        for (double l : res.loss_history) CHECK(l == res.loss_history.front());
    }
    SUBCASE("same seed, same history, dropout included") {
        BiLstm a(tiny_lstm(2, 6, 0.5, 2)), b(tiny_lstm(2, 6, 0.5, 2));
        a.initialize(8);
        b.initialize(8);
        auto short_cfg = cfg;
        short_cfg.epochs = 10;
        CHECK(bilstm_train(a, seqs, labels, short_cfg).loss_history ==
              bilstm_train(b, seqs, labels, short_cfg).loss_history);
        CHECK(a == b);
    }
}

TEST_CASE("validation selects the best epoch") {
    Rng rng(10);
    std::vector<FeatureSequence> seqs, val;
    std::vector<std::size_t> labels, val_labels;
    for (int i = 0; i < 12; ++i) {
        seqs.push_back(motion(rng, i % 2 == 0, 5));
        labels.push_back(static_cast<std::size_t>(i % 2));
        val.push_back(motion(rng, i % 2 == 1, 5));
        val_labels.push_back(static_cast<std::size_t>((i + 1) % 2));
    }
    BiLstm model(tiny_lstm(2, 4, 0.0, 2));
    model.initialize(6);
    const LabeledSet<FeatureSequence> vs{val, val_labels};
    const auto res = bilstm_train(model, seqs, labels, TrainConfig{0.2, 30, 4, 0.0, 1}, &vs);
    REQUIRE(res.validation_accuracy.size() == 30);
    const double best = *std::max_element(res.validation_accuracy.begin(), res.validation_accuracy.end());
    CHECK(res.validation_accuracy[res.selected_epoch] == best);
    // latest epoch among ties
    for (std::size_t e = res.selected_epoch + 1; e < 30; ++e) CHECK(res.validation_accuracy[e] < best);
    CHECK(accuracy(model, vs) == best);
}

TEST_CASE("tied bilstm is invariant to sequence reversal") {
    Rng rng(11);
    BiLstm model(tiny_lstm(4, 5, 0.0));
    model.initialize(21);
    auto& p = model.parameters();
    for (std::size_t i = 0; i < 3; ++i) p[3 + i] = p[i];  // backward := forward
    // dense weights equal on both halves of the concatenated state
    const std::size_t H = 5;
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t c = 0; c < H; ++c) p[6][r * 2 * H + H + c] = p[6][r * 2 * H + c];
    }
    for (std::size_t T : {1u, 2u, 6u}) {
        const auto seq = random_seq(rng, 4, T);
        FeatureSequence rev = seq;
        for (std::size_t t = 0; t < T; ++t) {
            std::copy(seq.row(T - 1 - t).begin(), seq.row(T - 1 - t).end(), rev.data.begin() + t * 4);
        }
        const auto a = bilstm_forward(model, seq), b = bilstm_forward(model, rev);
        for (std::size_t l = 0; l < 6; ++l) CHECK(b[l] == doctest::Approx(a[l]).epsilon(1e-12));
    }
}

TEST_CASE("model files round trip bit for bit") {
    testutil::TempDir dir("models");
    ConvNet conv(tiny_conv({2, 3}));
    conv.initialize(31);
    save_model(dir.path / "c.mdl", conv);
    CHECK(load_convnet(dir.path / "c.mdl") == conv);

    BiLstm lstm(tiny_lstm(4, 3, 0.25));
    lstm.initialize(32);
    save_model(dir.path / "l.mdl", lstm);
    CHECK(load_bilstm(dir.path / "l.mdl") == lstm);

    // magic and kind are checked
    CHECK_THROWS_AS(load_bilstm(dir.path / "c.mdl"), Error);
    {
        std::ofstream bad(dir.path / "bad.mdl", std::ios::binary);
        bad << "NOTAMODEL";
    }
    CHECK_THROWS_AS(load_convnet(dir.path / "bad.mdl"), Error);
    std::ifstream in(dir.path / "c.mdl", std::ios::binary);
    std::string magic(8, '\0');
    in.read(magic.data(), 8);
    CHECK(magic == "FER4DMDL");
}
