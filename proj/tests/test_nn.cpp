#include <doctest.h>

#include <cmath>

#include "compbias/nn.hpp"
#include "compbias/rng.hpp"

using namespace compbias;

namespace {

Matrix random_inputs(int rows, int cols, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    Matrix m(rows, cols);
    for (auto& v : m.data) v = rng.normal();
    return m;
}

const std::vector<Labels> kLabels{{{0, 1}}, {{1, 1}}, {{0, 0}}, {{1, 0}}};

DenseNet small_net(std::uint64_t seed, Activation act = Activation::ReLU) {
    return init(seed, NetShape{.input_dim = 5, .hidden_width = 7, .hidden_layers = 3, .activation = act});
}

}  // namespace

TEST_CASE("parameter layout") {
    const auto net = init(0, 16);
    CHECK(net.layers().size() == 5);
    CHECK(net.parameter_count() == (16 * 128 + 128) + 2 * (128 * 128 + 128) + 2 * (128 * 2 + 2));
    CHECK(net.head(0).in == 128);
    CHECK(net.head(1).out == 2);
}

TEST_CASE("init is deterministic and bounded by fan-in") {
    const auto a = init(42, 16);
    const auto b = init(42, 16);
    const auto c = init(43, 16);
    CHECK(a.checksum() == b.checksum());
    CHECK(a.checksum() != c.checksum());
    for (const auto& l : a.layers()) {
        const double bound = std::sqrt(1.0 / l.in);
        for (double w : a.weights(l)) CHECK(std::fabs(w) <= bound);
        for (double w : a.bias(l)) CHECK(std::fabs(w) <= bound);
    }
}

TEST_CASE("forward gives two normalised heads") {
    const auto net = small_net(1);
    const auto preds = forward(net, random_inputs(4, 5, 2));
    REQUIRE(preds.size() == 4);
    for (const auto& p : preds)
        for (const auto& h : p.head_probs) {
            CHECK(h[0] + h[1] == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(h[0] > 0.0);
            CHECK(h[1] > 0.0);
        }
}

TEST_CASE("loss definitions") {
    Prediction p;
    p.head_probs = {{{0.25, 0.75}, {0.5, 0.5}}};
    const std::vector<Prediction> preds{p};
    const std::vector<Labels> labels{{{1, 0}}};
    CHECK(loss(preds, labels, LossKind::CE) == doctest::Approx((-std::log(0.75) - std::log(0.5)) / 2.0));
    CHECK(loss(preds, labels, LossKind::L2) == doctest::Approx((0.125 + 0.5) / 2.0));
}

TEST_CASE("evaluate_loss matches backward loss") {
    const auto net = small_net(3);
    const auto x = random_inputs(4, 5, 4);
    for (auto kind : {LossKind::CE, LossKind::L2}) {
        const auto g = backward(net, x, kLabels, kind);
        CHECK(g.loss == doctest::Approx(evaluate_loss(net, x, kLabels, kind)).epsilon(1e-14));
        CHECK(g.values.size() == net.parameter_count());
    }
}

TEST_CASE("gradient check on a small network") {
    for (auto act : {Activation::ReLU, Activation::Tanh})
        for (auto kind : {LossKind::CE, LossKind::L2})
            for (std::uint64_t seed = 0; seed < 3; ++seed) {
                const auto net = small_net(seed, act);
                const auto x = random_inputs(4, 5, seed + 100);
                const auto r = check_gradients(net, x, kLabels, kind);
                CAPTURE(seed);
                CHECK(r.checked == net.parameter_count());
                CHECK(r.max_relative_error < 1e-5);
            }
}

TEST_CASE("gradient check steps around a ReLU kink") {
    auto net = small_net(4);
    const auto x = random_inputs(4, 5, 5);
    const auto& first = net.layers()[0];
    // Put unit 0 of example 0 just above zero, inside the default step.
    double pre = 0.0;
    for (int k = 0; k < first.in; ++k) pre += x(0, k) * net.weights(first)[static_cast<std::size_t>(k) * first.out];
    net.bias(first)[0] = -pre + 3e-6;
    const std::vector<std::size_t> idx{first.bias_offset};
    const auto r = check_gradients(net, x, kLabels, LossKind::CE, 1e-5, 1e-5, idx);
    CHECK(r.refined == 1);
    CHECK(r.kinks == 0);
    CHECK(r.checked == 1);
    CHECK(r.max_relative_error < 1e-5);

    net.bias(first)[0] = -pre;  // exactly on the kink: no step avoids it
    const auto on = check_gradients(net, x, kLabels, LossKind::CE, 1e-5, 1e-5, idx);
    CHECK(on.kinks + on.checked == 1);
}

TEST_CASE("backward scale multiplies gradient") {
    const auto net = small_net(8);
    const auto x = random_inputs(4, 5, 9);
    const auto a = backward(net, x, kLabels, LossKind::CE);
    const auto b = backward(net, x, kLabels, LossKind::CE, 0.5);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(b.values[i] == doctest::Approx(0.5 * a.values[i]));
}

TEST_CASE("gradient check reports a corrupted gradient") {
    // A unit finite-difference step on a tanh net is far outside the linear regime.
    const auto net = small_net(2, Activation::Tanh);
    const auto x = random_inputs(4, 5, 3);
    CHECK(check_gradients(net, x, kLabels, LossKind::CE, 1.0).max_relative_error > 1e-5);
}

TEST_CASE("sgd step oracle") {
    std::vector<double> p{1.0, -2.0};
    const std::vector<double> g{0.5, 0.25};
    auto st = OptimizerState::make(OptimizerKind::SGD, 0.1, 0.01);
    apply_update(p, g, st);
    CHECK(std::fabs(p[0] - (1.0 - 0.1 * (0.5 + 0.01 * 1.0))) < 1e-10);
    CHECK(std::fabs(p[1] - (-2.0 - 0.1 * (0.25 + 0.01 * -2.0))) < 1e-10);
}

TEST_CASE("adam step oracles") {
    std::vector<double> p{1.0};
    auto st = OptimizerState::make(OptimizerKind::Adam, 0.1, 0.0);
    std::vector<double> g{0.5};
    apply_update(p, g, st);
    CHECK(std::fabs(p[0] - 0.90000000199999996) < 1e-10);
    g[0] = 0.25;
    apply_update(p, g, st);
    CHECK(std::fabs(p[0] - 0.80678204047746166896) < 1e-10);
    CHECK(st.steps == 2);

    std::vector<double> q{2.0};
    auto st2 = OptimizerState::make(OptimizerKind::Adam, 0.01, 0.01);
    const std::vector<double> g2{-0.3};
    apply_update(q, g2, st2);
    CHECK(std::fabs(q[0] - 2.0099999996428571556) < 1e-10);
}

TEST_CASE("zero gradient and zero decay leave parameters unchanged") {
    for (auto kind : {OptimizerKind::SGD, OptimizerKind::Adam}) {
        std::vector<double> p{0.3, -0.7};
        const std::vector<double> g{0.0, 0.0};
        auto st = OptimizerState::make(kind, 0.1, 0.0);
        apply_update(p, g, st);
        CHECK(p == std::vector<double>{0.3, -0.7});
    }
}

TEST_CASE("finite check detects non-finite parameters") {
    auto net = small_net(0);
    CHECK(net.all_finite());
    net.parameters()[3] = std::nan("");
    CHECK_FALSE(net.all_finite());
}
