#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "coral_cloze/encoder.hpp"
#include "coral_cloze/errors.hpp"
#include "coral_cloze/ordinal.hpp"

namespace coral_cloze {

enum class SelectionMetric { spearman, accuracy };

inline std::string_view to_string(SelectionMetric m) noexcept {
    return m == SelectionMetric::spearman ? "spearman" : "accuracy";
}

inline SelectionMetric parse_selection(std::string_view s) {
    if (s == "spearman") return SelectionMetric::spearman;
    if (s == "accuracy") return SelectionMetric::accuracy;
    throw ConfigError("unknown selection metric '" + std::string(s) + "' (expected spearman|accuracy)");
}

/// Training hyperparameters. Defaults are the fine-tuning settings of the
/// reference system (5 epochs, AdamW, cosine schedule, lr 1.90323e-05,
/// weight decay 0.00123974, equal head weights).
struct TrainConfig {
    std::size_t epochs = 5;
    std::size_t batch_size = 16;
    double base_lr = 1.90323e-05;
    double weight_decay = 0.00123974;
    double lambda_c = 0.5;
    double lambda_r = 0.5;
    BinningMode binning = BinningMode::round;
    Pooling pooling = Pooling::concat;
    std::size_t d_e = 512;
    std::size_t h = 0;  // 0 means d_e / 2
    std::uint64_t seed = 13;
    std::uint64_t hash_seed = FeaturizerConfig{}.seed;
    bool merge_dev = false;
    SelectionMetric select = SelectionMetric::spearman;

    std::size_t hidden_dim() const noexcept { return h != 0 ? h : d_e / 2; }

    LossWeights loss_weights() const noexcept { return {lambda_c, lambda_r}; }

    FeaturizerConfig featurizer() const {
        FeaturizerConfig f;
        f.dim = d_e;
        f.seed = hash_seed;
        return f;
    }

    void validate() const {
        if (batch_size == 0) throw ConfigError("batch_size must be positive");
        if (!(base_lr >= 0.0)) throw ConfigError("base_lr must be non-negative");
        if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
        if (!(lambda_c >= 0.0) || !(lambda_r >= 0.0)) throw ConfigError("loss weights must be non-negative");
        if (hidden_dim() == 0) throw ConfigError("hidden dimension must be positive");
        featurizer().validate();
    }
};

namespace detail {
template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("config key '" + std::string(key) + "': invalid number '" + std::string(value) + "'");
    return out;
}

inline bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config key '" + std::string(key) + "': expected true|false");
}

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
}  // namespace detail

/// Sets one TrainConfig field by its name.
inline void apply_setting(TrainConfig& c, std::string_view key, std::string_view value) {
    using detail::parse_number;
    if (key == "epochs") c.epochs = parse_number<std::size_t>(key, value);
    else if (key == "batch_size") c.batch_size = parse_number<std::size_t>(key, value);
    else if (key == "base_lr") c.base_lr = parse_number<double>(key, value);
    else if (key == "weight_decay") c.weight_decay = parse_number<double>(key, value);
    else if (key == "lambda_c") c.lambda_c = parse_number<double>(key, value);
    else if (key == "lambda_r") c.lambda_r = parse_number<double>(key, value);
    else if (key == "binning") c.binning = parse_binning(value);
    else if (key == "pooling") c.pooling = parse_pooling(value);
    else if (key == "d_e") c.d_e = parse_number<std::size_t>(key, value);
    else if (key == "h") c.h = parse_number<std::size_t>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "hash_seed") c.hash_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "merge_dev") c.merge_dev = detail::parse_bool(key, value);
    else if (key == "select") c.select = parse_selection(value);
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

/// Flat key=value document; '#' starts a comment line.
inline void apply_config_text(TrainConfig& c, std::string_view text, const std::string& source = "<config>") {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = detail::trim(text.substr(start, nl - start));
        ++line_no;
        start = nl + 1;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key=value");
        try {
            apply_setting(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

inline void apply_config_file(TrainConfig& c, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    apply_config_text(c, ss.str(), path);
}

}  // namespace coral_cloze
