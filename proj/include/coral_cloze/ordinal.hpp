#pragma once

// Ordinal (CORAL) mathematics: binary label decomposition, rank-consistent
// coral heads, the per-head ordinal cross entropy, the weighted joint loss and
// decoding of head outputs into class labels and continuous scores.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coral_cloze/errors.hpp"

namespace coral_cloze {

/// Classes of the classification head (Implausible, Neutral, Plausible).
inline constexpr std::size_t kClassLevels = 3;
/// Classes of the binned regression head (scores 1..5 mapped to 0..4).
inline constexpr std::size_t kScoreLevels = 5;

/// A class index together with the number of ordered classes it lives in.
class OrdinalLabel {
public:
    OrdinalLabel(std::size_t value, std::size_t num_classes) : value_(value), num_classes_(num_classes) {
        if (num_classes < 2) throw ConfigError("OrdinalLabel: need at least two classes");
        if (value >= num_classes)
            throw ConfigError("OrdinalLabel: value " + std::to_string(value) + " outside [0, " +
                              std::to_string(num_classes - 1) + "]");
    }

    std::size_t value() const noexcept { return value_; }
    std::size_t num_classes() const noexcept { return num_classes_; }

    friend bool operator==(const OrdinalLabel&, const OrdinalLabel&) = default;

private:
    std::size_t value_;
    std::size_t num_classes_;
};

/// K-1 indicator bits; bit k is set iff k < label. Always a run of ones followed
/// by a run of zeros.
class BinaryLabelVector {
public:
    BinaryLabelVector() = default;

    /// Validates the prefix property.
    explicit BinaryLabelVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        bool seen_zero = false;
        for (auto b : bits_) {
            if (b > 1) throw ConfigError("BinaryLabelVector: bits must be 0 or 1");
            if (b == 0) seen_zero = true;
            else if (seen_zero) throw ConfigError("BinaryLabelVector: ones must precede zeros");
        }
    }

    std::size_t size() const noexcept { return bits_.size(); }
    std::uint8_t operator[](std::size_t k) const { return bits_[k]; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    std::size_t popcount() const noexcept {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
    }

    friend bool operator==(const BinaryLabelVector&, const BinaryLabelVector&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

inline BinaryLabelVector encode_ordinal(const OrdinalLabel& label) {
    std::vector<std::uint8_t> bits(label.num_classes() - 1, 0);
    for (std::size_t k = 0; k < bits.size(); ++k) bits[k] = k < label.value() ? 1 : 0;
    return BinaryLabelVector(std::move(bits));
}

/// One shared weight vector and K-1 biases. Every unit computes weights.x + bias_k.
struct CoralHead {
    std::vector<double> weights;
    std::vector<double> biases;

    std::size_t input_dim() const noexcept { return weights.size(); }
    std::size_t units() const noexcept { return biases.size(); }
    std::size_t num_classes() const noexcept { return biases.size() + 1; }

    /// Zero weights and a strictly decreasing bias ramp from +0.1 to -0.1.
    static CoralHead with_bias_ramp(std::size_t input_dim, std::size_t num_classes) {
        if (num_classes < 2) throw ConfigError("CoralHead: need at least two classes");
        CoralHead head{std::vector<double>(input_dim, 0.0), std::vector<double>(num_classes - 1, 0.0)};
        const std::size_t units = num_classes - 1;
        if (units > 1) {
            for (std::size_t k = 0; k < units; ++k)
                head.biases[k] = 0.1 - 0.2 * static_cast<double>(k) / static_cast<double>(units - 1);
        }
        return head;
    }
};

struct LossWeights {
    double lambda_c = 0.5;
    double lambda_r = 0.5;
};

/// Logistic function, evaluated without overflow for either sign.
inline double sigmoid(double t) noexcept {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

/// log(1 + e^t) without overflow.
inline double softplus(double t) noexcept { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::vector<double> coral_forward(const CoralHead& head, std::span<const double> x) {
    if (x.size() != head.weights.size())
        throw ConfigError("coral_forward: input has dimension " + std::to_string(x.size()) + ", head expects " +
                          std::to_string(head.weights.size()));
    const double shared = dot(head.weights, x);
    std::vector<double> logits(head.biases.size());
    for (std::size_t k = 0; k < logits.size(); ++k) logits[k] = shared + head.biases[k];
    return logits;
}

namespace detail {
inline void require_finite(std::span<const double> logits, std::string_view who) {
    for (double v : logits)
        if (!std::isfinite(v)) throw NumericError(std::string(who) + ": non-finite logit");
}
}  // namespace detail

/// Number of units whose probability is strictly above one half. A probability of
/// exactly 0.5 (logit 0) counts as zero.
inline std::size_t decode_label(std::span<const double> logits) {
    detail::require_finite(logits, "decode_label");
    std::size_t label = 0;
    for (double l : logits)
        if (sigmoid(l) > 0.5) ++label;
    return label;
}

/// Expected rank plus one: 1 + sum_k sigmoid(logit_k). Lies in (1, K).
inline double decode_rank_score(std::span<const double> logits) {
    detail::require_finite(logits, "decode_rank_score");
    double s = 0.0;
    for (double l : logits) s += sigmoid(l);
    return s + 1.0;
}

/// Classification-head decoding to {0, 1, 2}.
inline std::size_t decode_class(std::span<const double> logits) {
    if (logits.size() != kClassLevels - 1) throw ConfigError("decode_class: expected 2 logits");
    return decode_label(logits);
}

/// Regression-head decoding to a continuous score in (1, 5).
inline double decode_score(std::span<const double> logits) {
    if (logits.size() != kScoreLevels - 1) throw ConfigError("decode_score: expected 4 logits");
    return decode_rank_score(logits);
}

/// Sum over units of the binary cross entropy between sigmoid(logit_k) and t_k,
/// in the logit form t*softplus(-z) + (1-t)*softplus(z).
inline double ordinal_bce_loss(std::span<const double> logits, const BinaryLabelVector& target) {
    if (logits.size() != target.size())
        throw ConfigError("ordinal_bce_loss: " + std::to_string(logits.size()) + " logits vs " +
                          std::to_string(target.size()) + " target bits");
    double loss = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k)
        loss += target[k] ? softplus(-logits[k]) : softplus(logits[k]);
    return loss;
}

/// Per-sample head losses (classification, regression).
struct HeadLosses {
    double classification = 0.0;
    double regression = 0.0;
};

inline double combined_batch_loss(std::span<const HeadLosses> per_sample, const LossWeights& w) {
    if (per_sample.empty()) throw UsageError("combined_batch_loss: empty batch");
    double total = 0.0;
    for (const auto& s : per_sample) total += w.lambda_c * s.classification + w.lambda_r * s.regression;
    return total / static_cast<double>(per_sample.size());
}

enum class BinningMode { round, floor };

inline std::string_view to_string(BinningMode m) noexcept { return m == BinningMode::round ? "round" : "floor"; }

inline BinningMode parse_binning(std::string_view s) {
    if (s == "round") return BinningMode::round;
    if (s == "floor") return BinningMode::floor;
    throw ConfigError("unknown binning mode '" + std::string(s) + "' (expected round|floor)");
}

/// Maps a plausibility score in [1, 5] onto labels 0..4. Round mode rounds half up.
inline OrdinalLabel normalize_score(double score, BinningMode mode) {
    if (!(score >= 1.0 && score <= 5.0))
        throw ValidationError("plausibility score " + std::to_string(score) + " outside [1, 5]");
    const double level = mode == BinningMode::round ? std::floor(score + 0.5) : std::floor(score);
    const auto label = std::clamp(level - 1.0, 0.0, static_cast<double>(kScoreLevels - 1));
    return OrdinalLabel(static_cast<std::size_t>(label), kScoreLevels);
}

}  // namespace coral_cloze
