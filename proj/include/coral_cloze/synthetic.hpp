#pragma once

// Synthetic cloze corpora with a planted lexical signal. Each filler is a phrase
// drawn from the vocabulary of one of five tiers; the gold score is 1 + tier
// plus bounded uniform noise, and the class is the score binned at 2.5 / 3.5.
// Contexts are random text over a vocabulary disjoint from the tier words.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "coral_cloze/dataset.hpp"
#include "coral_cloze/instance.hpp"
#include "coral_cloze/random.hpp"

namespace coral_cloze {

struct SyntheticOptions {
    std::size_t contexts = 400;
    std::size_t fillers_per_context = 5;
    std::uint64_t seed = 1;
    std::string id_prefix = "s";
    double noise = 0.4;  // half-width of the uniform score noise; keep < 0.5
    std::size_t words_per_tier = 3;
    std::size_t words_per_filler = 8;
    std::uint64_t lexicon_seed = 2022;  // shared by every split drawn from one lexicon
};

struct SyntheticLexicon {
    std::array<std::vector<std::string>, kScoreLevels> tiers;
    std::vector<std::string> context_words;
};

namespace detail {
inline std::string pseudo_word(Rng& rng, std::size_t min_len, std::size_t max_len) {
    static constexpr std::string_view consonants = "bcdfghjklmnprstvz";
    static constexpr std::string_view vowels = "aeiou";
    const auto len = min_len + rng.below(max_len - min_len + 1);
    std::string w;
    for (std::size_t i = 0; i < len; ++i) {
        const auto& set = (i % 2 == 0) ? consonants : vowels;
        w.push_back(set[rng.below(set.size())]);
    }
    return w;
}
}  // namespace detail

inline SyntheticLexicon make_synthetic_lexicon(std::size_t words_per_tier, std::uint64_t seed) {
    Rng rng(seed);
    SyntheticLexicon lex;
    std::vector<std::string> used;
    auto fresh = [&](std::size_t lo, std::size_t hi) {
        for (;;) {
            auto w = detail::pseudo_word(rng, lo, hi);
            if (std::find(used.begin(), used.end(), w) == used.end()) {
                used.push_back(w);
                return w;
            }
        }
    };
    for (auto& tier : lex.tiers)
        for (std::size_t i = 0; i < words_per_tier; ++i) tier.push_back(fresh(6, 9));
    for (std::size_t i = 0; i < 300; ++i) lex.context_words.push_back(fresh(2, 7));
    return lex;
}

inline PlausibilityClass class_for_score(double score) {
    if (score < 2.5) return PlausibilityClass::implausible;
    if (score < 3.5) return PlausibilityClass::neutral;
    return PlausibilityClass::plausible;
}

inline Corpus make_synthetic_corpus(const SyntheticOptions& opt) {
    const auto lex = make_synthetic_lexicon(opt.words_per_tier, opt.lexicon_seed);
    Rng rng(opt.seed);
    auto phrase = [&](std::size_t lo, std::size_t hi) {
        const auto n = lo + rng.below(hi - lo + 1);
        std::string s;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) s += ' ';
            s += lex.context_words[rng.below(lex.context_words.size())];
        }
        return s;
    };
    static constexpr std::array<std::string_view, 4> headers = {"Getting Started", "Following a Basic Routine",
                                                                 "Making Changes", "Finishing Up"};
    Corpus corpus;
    for (std::size_t c = 0; c < opt.contexts; ++c) {
        ClozeInstance base;
        base.resolved_pattern = static_cast<ResolvedPattern>(rng.below(4));
        base.article_title = "How to " + phrase(2, 4);
        base.section_header = std::string(headers[rng.below(headers.size())]);
        base.previous_context = phrase(6, 12) + ". " + phrase(5, 10) + ".";
        base.sentence = phrase(3, 7) + " the " + std::string(kFillerPlaceholder) + " " + phrase(2, 6) + ".";
        base.follow_up_context = phrase(6, 12) + ".";
        for (std::size_t f = 0; f < opt.fillers_per_context; ++f) {
            ClozeInstance in = base;
            in.id = opt.id_prefix + std::to_string(c) + "_" + std::to_string(f + 1);
            const auto tier = rng.below(kScoreLevels);
            const auto& words = lex.tiers[tier];
            for (std::size_t w = 0; w < opt.words_per_filler; ++w) {
                if (w) in.filler += ' ';
                in.filler += words[rng.below(words.size())];
            }
            const double score =
                std::clamp(1.0 + static_cast<double>(tier) + rng.uniform(-opt.noise, opt.noise), 1.0, 5.0);
            in.plausibility_score = score;
            in.class_label = class_for_score(score);
            corpus.instances.push_back(std::move(in));
        }
    }
    return corpus;
}

}  // namespace coral_cloze
