#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "coral_cloze/random.hpp"
#include "coral_cloze/tinynet.hpp"

using namespace coral_cloze;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
// Phi(x) by composite Simpson quadrature of the normal density on [-12, x];
// independent of std::erf.
double phi_quadrature(double x) {
    const double lo = -12.0;
    const int n = 20000;
    const double h = (x - lo) / n;
    auto f = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
    double s = f(lo) + f(x);
    for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

void step(OptimizerState& st, std::vector<double>& theta, const std::vector<double>& g, double lr) {
    std::array<std::span<double>, 1> p{theta};
    std::array<std::span<const double>, 1> gr{g};
    optimizer_step(st, p, gr, lr);
}
}  // namespace

TEST_CASE("dense_forward computes W x + b", "[tinynet]") {
    DenseLayer id(2, 2);
    id.w(0, 0) = 1.0;
    id.w(1, 1) = 1.0;
    CHECK(dense_forward(id, std::vector<double>{1, 2}) == std::vector<double>{1, 2});

    DenseLayer zero(4, 1);
    zero.bias = {3.0};
    CHECK(dense_forward(zero, std::vector<double>{9, -1, 2, 7}) == std::vector<double>{3.0});

    DenseLayer sum(2, 1);
    sum.weights = {1.0, 1.0};
    sum.bias = {-1.0};
    CHECK(dense_forward(sum, std::vector<double>{2, 3}) == std::vector<double>{4.0});

    CHECK_THROWS_AS(dense_forward(sum, std::vector<double>{1, 2, 3}), ConfigError);
}

TEST_CASE("dense_forward matches a plain dense product on sparse inputs", "[tinynet]") {
    Rng rng(4);
    auto layer = DenseLayer::uniform_init(30, 7, rng);
    std::vector<double> x(30, 0.0);
    for (int k = 0; k < 6; ++k) x[rng.below(30)] = rng.uniform(-1, 1);
    const auto y = dense_forward(layer, x);
    for (std::size_t j = 0; j < 7; ++j) {
        double ref = layer.bias[j];
        for (std::size_t i = 0; i < 30; ++i) ref += layer.w(j, i) * x[i];
        CHECK_THAT(y[j], WithinAbs(ref, 1e-14));
    }
}

TEST_CASE("uniform_init stays within 1/sqrt(fan_in)", "[tinynet]") {
    Rng rng(1);
    const auto layer = DenseLayer::uniform_init(64, 8, rng);
    for (double w : layer.weights) CHECK(std::abs(w) <= 1.0 / 8.0);
}

TEST_CASE("gelu is x * Phi(x)", "[tinynet]") {
    CHECK(gelu(0.0) == 0.0);
    CHECK_THAT(gelu(10.0), WithinAbs(10.0, 1e-9));
    CHECK_THAT(gelu(1.0), WithinAbs(0.841345, 1e-6));
    for (double x : {-3.0, -1.2, -0.3, 0.4, 1.0, 2.5}) CHECK_THAT(gelu(x), WithinAbs(x * phi_quadrature(x), 1e-10));
}

TEST_CASE("gelu(x) - gelu(-x) = x", "[tinynet][property]") {
    Rng rng(21);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(-8, 8);
        CHECK_THAT(gelu(x) - gelu(-x), WithinAbs(x, 1e-12));
    }
}

TEST_CASE("gelu_derivative matches central differences", "[tinynet]") {
    for (double x = -5.0; x <= 5.0; x += 0.37) {
        const double h = 1e-6;
        const double fd = (gelu(x + h) - gelu(x - h)) / (2 * h);
        CHECK_THAT(gelu_derivative(x), WithinAbs(fd, 1e-8));
    }
}

TEST_CASE("AdamW first step moves by about lr", "[tinynet]") {
    const std::vector<std::size_t> sizes{1};
    OptimizerState st({0.9, 0.999, 1e-8, 0.0}, sizes);
    std::vector<double> theta{0.0};
    step(st, theta, {1.0}, 0.01);
    CHECK_THAT(theta[0], WithinRel(-0.01, 1e-7));
    CHECK(st.step == 1);
}

TEST_CASE("AdamW with zero gradient", "[tinynet]") {
    const std::vector<std::size_t> sizes{3};
    SECTION("no decay leaves parameters unchanged") {
        OptimizerState st({0.9, 0.999, 1e-8, 0.0}, sizes);
        std::vector<double> theta{1.5, -2.0, 0.25};
        const auto before = theta;
        step(st, theta, {0, 0, 0}, 0.1);
        CHECK(theta == before);
    }
    SECTION("decay shrinks by (1 - lr * wd)") {
        OptimizerState st({0.9, 0.999, 1e-8, 0.01}, sizes);
        std::vector<double> theta{1.5, -2.0, 0.25};
        const auto before = theta;
        step(st, theta, {0, 0, 0}, 0.1);
        for (std::size_t i = 0; i < 3; ++i) CHECK_THAT(theta[i], WithinRel(before[i] * (1.0 - 0.1 * 0.01), 1e-15));
    }
}

TEST_CASE("AdamW with lr = 0 is bitwise a no-op", "[tinynet][property]") {
    Rng rng(9);
    const std::vector<std::size_t> sizes{50};
    OptimizerState st({0.9, 0.999, 1e-8, 0.00123974}, sizes);
    std::vector<double> theta(50), g(50);
    for (auto& v : theta) v = rng.uniform(-3, 3);
    for (int s = 0; s < 5; ++s) {
        for (auto& v : g) v = rng.uniform(-3, 3);
        const auto before = theta;
        step(st, theta, g, 0.0);
        CHECK(theta == before);
    }
}

TEST_CASE("AdamW matches a hand-rolled reference over several steps", "[tinynet]") {
    const std::vector<std::size_t> sizes{1};
    OptimizerState st({0.9, 0.999, 1e-8, 0.1}, sizes);
    std::vector<double> theta{0.5};
    double ref = 0.5, m = 0.0, v = 0.0;
    const std::vector<double> grads{0.3, -1.2, 0.7, 2.0};
    for (std::size_t t = 1; t <= grads.size(); ++t) {
        const double g = grads[t - 1];
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
        ref = ref - 0.05 * mh / (std::sqrt(vh) + 1e-8) - 0.05 * 0.1 * ref;
        step(st, theta, {g}, 0.05);
        CHECK_THAT(theta[0], WithinAbs(ref, 1e-15));
    }
}

TEST_CASE("optimizer rejects mismatched tensors and bad betas", "[tinynet]") {
    const std::vector<std::size_t> sizes{2};
    OptimizerState st({0.9, 0.999, 1e-8, 0.0}, sizes);
    std::vector<double> theta{0, 0, 0};
    CHECK_THROWS_AS(step(st, theta, {0, 0, 0}, 0.1), ConfigError);
    CHECK_THROWS_AS(OptimizerState({1.0, 0.999, 1e-8, 0.0}, sizes), ConfigError);
}

TEST_CASE("cosine schedule", "[tinynet]") {
    const LrSchedule s{0.02, 100};
    CHECK(cosine_lr(s, 0) == 0.02);
    CHECK(cosine_lr(s, 100) == 0.0);
    CHECK_THAT(cosine_lr(s, 50), WithinAbs(0.01, 1e-15));
    for (std::size_t t = 1; t <= 100; ++t) {
        CHECK(cosine_lr(s, t) <= cosine_lr(s, t - 1));
        CHECK(cosine_lr(s, t) >= 0.0);
    }
    CHECK_THROWS_AS(cosine_lr(s, 101), UsageError);
    CHECK_THROWS_AS(cosine_lr(LrSchedule{0.1, 0}, 0), UsageError);
}
