#pragma once

// Input formatting and the frozen text featurizer. A formatted instance is
// hashed into a context vector, the filler string into a filler vector, and the
// two are concatenated into the pooled representation fed to the projection.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coral_cloze/errors.hpp"
#include "coral_cloze/instance.hpp"
#include "coral_cloze/random.hpp"

namespace coral_cloze {

struct FormattedInput {
    std::string text;
    std::size_t filler_offset = 0;  // byte offset of the substituted filler in `text`
    std::size_t filler_length = 0;
};

/// Builds the four-line model input:
///   Resolved pattern: ...
///   Section header: ...
///   Article title: ...
///   Text: <previous> <sentence with filler> <follow-up>
/// Empty context parts are dropped so the Text line stays single-spaced. An empty
/// filler removes the placeholder together with one adjacent space.
inline FormattedInput format_instance(const ClozeInstance& instance, std::string_view filler) {
    const auto count = count_placeholders(instance.sentence);
    if (count != 1)
        throw ValidationError("instance '" + instance.id + "': expected exactly one " +
                              std::string(kFillerPlaceholder) + " placeholder, found " + std::to_string(count));
    std::string sentence = instance.sentence;
    auto pos = sentence.find(kFillerPlaceholder);
    std::size_t erase_len = kFillerPlaceholder.size();
    if (filler.empty()) {
        if (pos > 0 && sentence[pos - 1] == ' ') {
            --pos;
            ++erase_len;
        } else if (pos + erase_len < sentence.size() && sentence[pos + erase_len] == ' ') {
            ++erase_len;
        }
    }
    sentence.replace(pos, erase_len, filler);

    FormattedInput out;
    out.text = "Resolved pattern: ";
    out.text += to_string(instance.resolved_pattern);
    out.text += "\nSection header: ";
    out.text += instance.section_header;
    out.text += "\nArticle title: ";
    out.text += instance.article_title;
    out.text += "\nText: ";
    if (!instance.previous_context.empty()) {
        out.text += instance.previous_context;
        out.text += ' ';
    }
    out.filler_offset = out.text.size() + pos;
    out.filler_length = filler.size();
    out.text += sentence;
    if (!instance.follow_up_context.empty()) {
        out.text += ' ';
        out.text += instance.follow_up_context;
    }
    return out;
}

struct FeaturizerConfig {
    std::size_t dim = 512;  // power of two
    std::vector<std::size_t> word_orders = {1, 2};
    std::vector<std::size_t> char_orders = {3, 4, 5};
    std::uint64_t seed = 0x6e77727a;

    void validate() const {
        if (dim == 0 || (dim & (dim - 1)) != 0)
            throw ConfigError("featurizer dim must be a power of two, got " + std::to_string(dim));
        for (auto n : word_orders)
            if (n == 0) throw ConfigError("word n-gram order must be positive");
        for (auto n : char_orders)
            if (n == 0) throw ConfigError("char n-gram order must be positive");
    }

    friend bool operator==(const FeaturizerConfig&, const FeaturizerConfig&) = default;
};

/// Lowercased tokens. Whitespace and ASCII punctuation separate tokens; bytes
/// >= 0x80 are kept inside tokens so UTF-8 sequences stay intact.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && (std::isspace(c) || std::ispunct(c))) {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

namespace detail {
inline void add_hashed(std::vector<double>& v, std::string_view feature, std::uint64_t seed) {
    const auto h = hash_bytes(feature, seed);
    const auto bucket = static_cast<std::size_t>(h & (v.size() - 1));
    v[bucket] += (h >> 63) ? -1.0 : 1.0;
}
}  // namespace detail

/// Signed feature hashing of word n-grams and boundary-marked character n-grams
/// ("<token>"), followed by L2 normalization. Empty input gives the zero vector.
inline std::vector<double> featurize(std::string_view text, const FeaturizerConfig& cfg) {
    cfg.validate();
    std::vector<double> v(cfg.dim, 0.0);
    const auto tokens = tokenize(text);
    std::string feature;
    for (auto n : cfg.word_orders) {
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            feature = "w" + std::to_string(n) + ":";
            for (std::size_t k = 0; k < n; ++k) {
                if (k) feature += ' ';
                feature += tokens[i + k];
            }
            detail::add_hashed(v, feature, cfg.seed);
        }
    }
    for (const auto& tok : tokens) {
        const std::string marked = "<" + tok + ">";
        for (auto n : cfg.char_orders) {
            for (std::size_t i = 0; i + n <= marked.size(); ++i) {
                feature = "c:";
                feature.append(marked, i, n);
                detail::add_hashed(v, feature, cfg.seed);
            }
        }
    }
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& x : v) x *= inv;
    }
    return v;
}

enum class Pooling { concat, filler_only };

inline std::string_view to_string(Pooling p) noexcept { return p == Pooling::concat ? "concat" : "filler_only"; }

inline Pooling parse_pooling(std::string_view s) {
    if (s == "concat") return Pooling::concat;
    if (s == "filler_only") return Pooling::filler_only;
    throw ConfigError("unknown pooling '" + std::string(s) + "' (expected concat|filler_only)");
}

/// Width of the pooled vector for a given per-part dimension.
inline std::size_t pooled_dim(std::size_t part_dim, Pooling pooling) noexcept {
    return pooling == Pooling::concat ? 2 * part_dim : part_dim;
}

/// Joins a context vector and a filler vector: [context | filler], or just the
/// filler vector under filler_only pooling.
inline std::vector<double> join_pooled(std::span<const double> context, std::span<const double> filler,
                                       Pooling pooling) {
    std::vector<double> out;
    if (pooling == Pooling::concat) {
        out.reserve(context.size() + filler.size());
        out.insert(out.end(), context.begin(), context.end());
    }
    out.insert(out.end(), filler.begin(), filler.end());
    return out;
}

/// Pooled representation: featurize(formatted input) then featurize(filler).
inline std::vector<double> pool(const ClozeInstance& instance, std::string_view filler, const FeaturizerConfig& cfg,
                                Pooling pooling = Pooling::concat) {
    const auto formatted = format_instance(instance, filler);
    const auto filler_vec = featurize(filler, cfg);
    if (pooling == Pooling::filler_only) return filler_vec;
    return join_pooled(featurize(formatted.text, cfg), filler_vec, pooling);
}

}  // namespace coral_cloze
