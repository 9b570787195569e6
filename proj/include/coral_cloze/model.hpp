#pragma once

// The dual-head ordinal model: pooled features -> dense projection -> GELU ->
// {classification coral head (2 units), regression coral head (4 units)}, with
// hand-written backpropagation of the weighted joint loss and a
// central-difference gradient checker.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coral_cloze/errors.hpp"
#include "coral_cloze/ordinal.hpp"
#include "coral_cloze/random.hpp"
#include "coral_cloze/tinynet.hpp"

namespace coral_cloze {

struct ModelDims {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;

    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct NamedTensor {
    std::string_view name;
    std::span<double> values;
};

struct ConstNamedTensor {
    std::string_view name;
    std::span<const double> values;
};

struct ModelParams {
    DenseLayer projection;
    CoralHead class_head;
    CoralHead regression_head;

    ModelDims dims() const noexcept { return {projection.in, projection.out}; }

    /// Seeded initialization: projection uniform +-1/sqrt(fan_in), head weights
    /// uniform +-1/sqrt(hidden), head biases on a decreasing ramp.
    static ModelParams initialize(const ModelDims& d, std::uint64_t seed) {
        if (d.input_dim == 0 || d.hidden_dim == 0) throw ConfigError("model dimensions must be positive");
        Rng rng(seed);
        ModelParams p;
        p.projection = DenseLayer::uniform_init(d.input_dim, d.hidden_dim, rng);
        p.class_head = CoralHead::with_bias_ramp(d.hidden_dim, kClassLevels);
        p.regression_head = CoralHead::with_bias_ramp(d.hidden_dim, kScoreLevels);
        const double bound = 1.0 / std::sqrt(static_cast<double>(d.hidden_dim));
        for (auto& w : p.class_head.weights) w = rng.uniform(-bound, bound);
        for (auto& w : p.regression_head.weights) w = rng.uniform(-bound, bound);
        return p;
    }

    /// Zero weights everywhere, head biases on the initial ramp.
    static ModelParams zeros(const ModelDims& d) {
        ModelParams p;
        p.projection = DenseLayer(d.input_dim, d.hidden_dim);
        p.class_head = CoralHead::with_bias_ramp(d.hidden_dim, kClassLevels);
        p.regression_head = CoralHead::with_bias_ramp(d.hidden_dim, kScoreLevels);
        return p;
    }

    /// Same shapes, every entry zero. Used as a gradient accumulator.
    static ModelParams zeros_like(const ModelParams& other) {
        ModelParams p;
        p.projection = DenseLayer(other.projection.in, other.projection.out);
        p.class_head = {std::vector<double>(other.class_head.weights.size(), 0.0),
                        std::vector<double>(other.class_head.biases.size(), 0.0)};
        p.regression_head = {std::vector<double>(other.regression_head.weights.size(), 0.0),
                             std::vector<double>(other.regression_head.biases.size(), 0.0)};
        return p;
    }

    /// Every trainable tensor in declaration (and serialization) order.
    std::array<NamedTensor, 6> tensors() {
        return {{{"projection.weight", projection.weights},
                 {"projection.bias", projection.bias},
                 {"class_head.weight", class_head.weights},
                 {"class_head.bias", class_head.biases},
                 {"regression_head.weight", regression_head.weights},
                 {"regression_head.bias", regression_head.biases}}};
    }

    std::array<ConstNamedTensor, 6> tensors() const {
        auto& self = const_cast<ModelParams&>(*this);
        std::array<ConstNamedTensor, 6> out;
        auto mutable_views = self.tensors();
        for (std::size_t t = 0; t < out.size(); ++t) out[t] = {mutable_views[t].name, mutable_views[t].values};
        return out;
    }

    std::array<std::size_t, 6> tensor_sizes() const {
        return {projection.weights.size(),      projection.bias.size(),
                class_head.weights.size(),      class_head.biases.size(),
                regression_head.weights.size(), regression_head.biases.size()};
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (auto s : tensor_sizes()) n += s;
        return n;
    }

    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        return a.projection.in == b.projection.in && a.projection.out == b.projection.out &&
               a.projection.weights == b.projection.weights && a.projection.bias == b.projection.bias &&
               a.class_head.weights == b.class_head.weights && a.class_head.biases == b.class_head.biases &&
               a.regression_head.weights == b.regression_head.weights &&
               a.regression_head.biases == b.regression_head.biases;
    }
};

/// Intermediate values of one forward pass.
struct ForwardCache {
    std::vector<std::size_t> active;  // non-zero input indices
    std::vector<double> pre;          // projection output before GELU
    std::vector<double> hidden;       // GELU(pre)
    std::vector<double> class_logits;
    std::vector<double> regression_logits;
};

inline ForwardCache forward(const ModelParams& p, std::span<const double> x) {
    ForwardCache c;
    c.active = nonzero_indices(x);
    c.pre = dense_forward(p.projection, x);
    c.hidden.resize(c.pre.size());
    for (std::size_t j = 0; j < c.pre.size(); ++j) c.hidden[j] = gelu(c.pre[j]);
    c.class_logits = coral_forward(p.class_head, c.hidden);
    c.regression_logits = coral_forward(p.regression_head, c.hidden);
    return c;
}

struct Prediction {
    std::size_t label = 0;
    double score = 0.0;
};

inline Prediction predict_one(const ModelParams& p, std::span<const double> x) {
    const auto c = forward(p, x);
    return {decode_class(c.class_logits), decode_score(c.regression_logits)};
}

/// Encoded targets for both heads.
struct SampleTargets {
    BinaryLabelVector classification;  // 2 bits
    BinaryLabelVector regression;      // 4 bits
};

/// A pooled feature vector paired with its targets.
struct Example {
    std::span<const double> features;
    const SampleTargets* targets = nullptr;
};

inline HeadLosses sample_losses(const ModelParams& p, const Example& ex) {
    const auto c = forward(p, ex.features);
    return {ordinal_bce_loss(c.class_logits, ex.targets->classification),
            ordinal_bce_loss(c.regression_logits, ex.targets->regression)};
}

/// Joint loss of a batch (mean over samples of the weighted head losses).
inline double batch_loss(const ModelParams& p, std::span<const Example> batch, const LossWeights& w) {
    std::vector<HeadLosses> per_sample;
    per_sample.reserve(batch.size());
    for (const auto& ex : batch) per_sample.push_back(sample_losses(p, ex));
    return combined_batch_loss(per_sample, w);
}

struct LossAndGradient {
    double loss = 0.0;
    ModelParams gradient;
};

namespace detail {
/// Adds the head's parameter gradient and returns dL/d(shared pre-activation sum).
inline double accumulate_head(const std::vector<double>& logits, const BinaryLabelVector& target, double scale,
                              std::span<const double> hidden, CoralHead& grad) {
    double dshared = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const double d = scale * (sigmoid(logits[k]) - static_cast<double>(target[k]));
        grad.biases[k] += d;
        dshared += d;
    }
    for (std::size_t j = 0; j < hidden.size(); ++j) grad.weights[j] += dshared * hidden[j];
    return dshared;
}
}  // namespace detail

/// Analytic gradient of batch_loss. Per unit, dL/dlogit_k = (lambda / n) * (sigmoid(logit_k) - t_k).
/// Samples are reduced in batch order.
inline LossAndGradient backward(const ModelParams& p, std::span<const Example> batch, const LossWeights& w) {
    if (batch.empty()) throw UsageError("backward: empty batch");
    LossAndGradient out{0.0, ModelParams::zeros_like(p)};
    auto& g = out.gradient;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    std::vector<HeadLosses> per_sample;
    per_sample.reserve(batch.size());
    std::vector<double> dpre(p.projection.out);

    for (const auto& ex : batch) {
        const auto c = forward(p, ex.features);
        per_sample.push_back({ordinal_bce_loss(c.class_logits, ex.targets->classification),
                              ordinal_bce_loss(c.regression_logits, ex.targets->regression)});

        const double dc = detail::accumulate_head(c.class_logits, ex.targets->classification, w.lambda_c * inv_n,
                                                  c.hidden, g.class_head);
        const double dr = detail::accumulate_head(c.regression_logits, ex.targets->regression,
                                                  w.lambda_r * inv_n, c.hidden, g.regression_head);
        for (std::size_t j = 0; j < dpre.size(); ++j) {
            const double dh = dc * p.class_head.weights[j] + dr * p.regression_head.weights[j];
            dpre[j] = dh * gelu_derivative(c.pre[j]);
        }
        for (std::size_t j = 0; j < dpre.size(); ++j) {
            g.projection.bias[j] += dpre[j];
            if (dpre[j] == 0.0) continue;
            double* row = g.projection.weights.data() + j * p.projection.in;
            for (std::size_t i : c.active) row[i] += dpre[j] * ex.features[i];
        }
    }
    out.loss = combined_batch_loss(per_sample, w);
    return out;
}

struct TensorCheck {
    std::string name;
    double max_rel_error = 0.0;
    double max_abs_gradient = 0.0;  // largest |analytic| entry; zero means the tensor receives no gradient
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::vector<TensorCheck> tensors;
};

/// Denominator floor for the relative error. Below it the comparison is
/// effectively absolute, which keeps finite-difference round-off on near-zero
/// entries from dominating the report.
inline constexpr double kGradCheckFloor = 1e-4;

inline double gradient_relative_error(double analytic, double numeric) noexcept {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
    return std::abs(analytic - numeric) / denom;
}

/// Compares backward() against central differences (L(theta+h) - L(theta-h)) / 2h
/// for every parameter. Passes iff the maximum relative error is below tol.
inline GradCheckReport grad_check(const ModelParams& params, std::span<const Example> batch, const LossWeights& w,
                                  double h, double tol) {
    if (!(h > 0.0)) throw UsageError("grad_check: step h must be positive");
    const auto analytic = backward(params, batch, w);
    ModelParams probe = params;
    ModelParams grad = analytic.gradient;
    auto probe_tensors = probe.tensors();
    auto grad_tensors = grad.tensors();

    GradCheckReport report;
    report.tolerance = tol;
    for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
        TensorCheck tc{std::string(probe_tensors[t].name), 0.0, 0.0};
        auto theta = probe_tensors[t].values;
        auto g = grad_tensors[t].values;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + h;
            const double up = batch_loss(probe, batch, w);
            theta[i] = saved - h;
            const double down = batch_loss(probe, batch, w);
            theta[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            tc.max_rel_error = std::max(tc.max_rel_error, gradient_relative_error(g[i], numeric));
            tc.max_abs_gradient = std::max(tc.max_abs_gradient, std::abs(g[i]));
        }
        report.max_rel_error = std::max(report.max_rel_error, tc.max_rel_error);
        report.tensors.push_back(std::move(tc));
    }
    report.passed = report.max_rel_error < tol;
    return report;
}

}  // namespace coral_cloze
