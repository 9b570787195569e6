#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "coral_cloze/errors.hpp"

namespace coral_cloze {

/// Blank marker inside ClozeInstance::sentence. Case-sensitive.
inline constexpr std::string_view kFillerPlaceholder = "[FILLER]";

enum class ResolvedPattern { implicit_reference, added_compound, metonymic_reference, fused_head };

inline constexpr std::array<std::string_view, 4> kResolvedPatternNames = {
    "IMPLICIT REFERENCE", "ADDED COMPOUND", "METONYMIC REFERENCE", "FUSED HEAD"};

inline std::string_view to_string(ResolvedPattern p) noexcept { return kResolvedPatternNames[static_cast<int>(p)]; }

inline std::optional<ResolvedPattern> parse_resolved_pattern(std::string_view s) {
    for (std::size_t i = 0; i < kResolvedPatternNames.size(); ++i)
        if (s == kResolvedPatternNames[i]) return static_cast<ResolvedPattern>(i);
    return std::nullopt;
}

/// Ordered plausibility classes; the numeric value is the ordinal label.
enum class PlausibilityClass { implausible = 0, neutral = 1, plausible = 2 };

inline constexpr std::array<std::string_view, 3> kClassNames = {"Implausible", "Neutral", "Plausible"};

inline std::string_view to_string(PlausibilityClass c) noexcept { return kClassNames[static_cast<int>(c)]; }

/// Case-insensitive name, or the digit 0/1/2.
inline std::optional<PlausibilityClass> parse_class_label(std::string_view s) {
    if (s.size() == 1 && s[0] >= '0' && s[0] <= '2') return static_cast<PlausibilityClass>(s[0] - '0');
    for (std::size_t i = 0; i < kClassNames.size(); ++i) {
        const auto name = kClassNames[i];
        if (name.size() == s.size() && std::equal(s.begin(), s.end(), name.begin(), [](char a, char b) {
                return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
            }))
            return static_cast<PlausibilityClass>(i);
    }
    return std::nullopt;
}

inline std::size_t count_placeholders(std::string_view sentence) {
    std::size_t n = 0;
    for (auto pos = sentence.find(kFillerPlaceholder); pos != std::string_view::npos;
         pos = sentence.find(kFillerPlaceholder, pos + kFillerPlaceholder.size()))
        ++n;
    return n;
}

/// One (context, filler) pair.
struct ClozeInstance {
    std::string id;
    ResolvedPattern resolved_pattern = ResolvedPattern::implicit_reference;
    std::string article_title;
    std::string section_header;
    std::string previous_context;
    std::string sentence;  // contains exactly one kFillerPlaceholder
    std::string follow_up_context;
    std::string filler;
    std::optional<PlausibilityClass> class_label;
    std::optional<double> plausibility_score;  // in [1, 5]

    friend bool operator==(const ClozeInstance&, const ClozeInstance&) = default;
};

/// Key shared by the fillers of one context: the id with a trailing "_<digits>"
/// removed ("12_3" -> "12"), or the whole id when there is no such suffix.
struct InstanceKey {
    std::string instance_id;
    std::size_t filler_index = 0;

    friend auto operator<=>(const InstanceKey&, const InstanceKey&) = default;
};

inline InstanceKey instance_key(std::string_view id) {
    const auto us = id.rfind('_');
    if (us != std::string_view::npos && us + 1 < id.size() && us > 0) {
        const auto suffix = id.substr(us + 1);
        if (suffix.size() <= 9 &&
            std::all_of(suffix.begin(), suffix.end(), [](char c) { return c >= '0' && c <= '9'; }))
            return {std::string(id.substr(0, us)), static_cast<std::size_t>(std::stoul(std::string(suffix)))};
    }
    return {std::string(id), 0};
}

}  // namespace coral_cloze
