#pragma once

// Minimal dense-network substrate: fully connected layer, exact GELU, AdamW with
// decoupled weight decay, and a cosine learning-rate schedule.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "coral_cloze/errors.hpp"
#include "coral_cloze/random.hpp"

namespace coral_cloze {

/// Row-major [out x in] weights plus a bias per output.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // weights[j * in + i]
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in_dim, std::size_t out_dim)
        : in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

    double& w(std::size_t j, std::size_t i) { return weights[j * in + i]; }
    double w(std::size_t j, std::size_t i) const { return weights[j * in + i]; }

    /// Uniform(-1/sqrt(in), 1/sqrt(in)) for weights and bias.
    static DenseLayer uniform_init(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
        DenseLayer layer(in_dim, out_dim);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
        for (auto& v : layer.weights) v = rng.uniform(-bound, bound);
        for (auto& v : layer.bias) v = rng.uniform(-bound, bound);
        return layer;
    }
};

/// Indices of the non-zero entries of x. Hashed text features are sparse, so the
/// layer only touches the columns that matter.
inline std::vector<std::size_t> nonzero_indices(std::span<const double> x) {
    std::vector<std::size_t> nz;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] != 0.0) nz.push_back(i);
    return nz;
}

inline std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> x) {
    if (x.size() != layer.in)
        throw ConfigError("dense_forward: input has dimension " + std::to_string(x.size()) + ", layer expects " +
                          std::to_string(layer.in));
    const auto nz = nonzero_indices(x);
    std::vector<double> y(layer.bias);
    for (std::size_t j = 0; j < layer.out; ++j) {
        const double* row = layer.weights.data() + j * layer.in;
        double acc = 0.0;
        for (std::size_t i : nz) acc += row[i] * x[i];
        y[j] += acc;
    }
    return y;
}

inline double standard_normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

inline double standard_normal_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// x * Phi(x), erf form.
inline double gelu(double x) noexcept { return x * standard_normal_cdf(x); }

inline double gelu_derivative(double x) noexcept { return standard_normal_cdf(x) + x * standard_normal_pdf(x); }

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// Moment accumulators for a list of parameter tensors, in a fixed order.
struct OptimizerState {
    AdamWConfig config;
    std::size_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    OptimizerState() = default;

    template <typename Sizes>
    OptimizerState(const AdamWConfig& cfg, const Sizes& tensor_sizes) : config(cfg) {
        if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0 && cfg.beta2 > 0.0 && cfg.beta2 < 1.0))
            throw ConfigError("AdamW: betas must lie in (0, 1)");
        for (std::size_t n : tensor_sizes) {
            m.emplace_back(n, 0.0);
            v.emplace_back(n, 0.0);
        }
    }
};

/// One AdamW update over matching parameter/gradient tensor lists:
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) - lr * weight_decay * theta
inline void optimizer_step(OptimizerState& state, std::span<const std::span<double>> params,
                           std::span<const std::span<const double>> grads, double lr) {
    if (params.size() != state.m.size() || grads.size() != state.m.size())
        throw ConfigError("optimizer_step: tensor count does not match optimizer state");
    if (!(lr >= 0.0)) throw UsageError("optimizer_step: learning rate must be non-negative");
    const auto& c = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto theta = params[p];
        auto g = grads[p];
        auto& m = state.m[p];
        auto& v = state.v[p];
        if (theta.size() != m.size() || g.size() != m.size())
            throw ConfigError("optimizer_step: tensor shape does not match optimizer state");
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            const double old = theta[i];
            theta[i] = old - lr * m_hat / (std::sqrt(v_hat) + c.eps) - lr * c.weight_decay * old;
        }
    }
}

struct LrSchedule {
    double base_lr = 0.0;
    std::size_t total_steps = 1;
};

/// Half-cosine decay from base_lr at t = 0 to zero at t = total_steps.
inline double cosine_lr(const LrSchedule& s, std::size_t t) {
    if (s.total_steps == 0) throw UsageError("cosine_lr: total_steps must be positive");
    if (t > s.total_steps)
        throw UsageError("cosine_lr: step " + std::to_string(t) + " beyond total " + std::to_string(s.total_steps));
    const double frac = static_cast<double>(t) / static_cast<double>(s.total_steps);
    return s.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace coral_cloze
