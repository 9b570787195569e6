#pragma once

// Cloze-task corpus: canonical TSV ingest/egress with row-addressed validation,
// label statistics, training-target construction, train+dev merging and seeded
// mini-batch scheduling.

#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "coral_cloze/errors.hpp"
#include "coral_cloze/instance.hpp"
#include "coral_cloze/model.hpp"
#include "coral_cloze/ordinal.hpp"
#include "coral_cloze/random.hpp"

namespace coral_cloze {

inline constexpr std::array<std::string_view, 10> kTsvColumns = {
    "id",       "resolved_pattern",  "article_title", "section_header", "previous_context",
    "sentence", "follow_up_context", "filler",        "class_label",    "plausibility_score"};

struct LabelStats {
    std::array<std::size_t, kClassLevels> classes{};
    std::array<std::size_t, kScoreLevels> rounded{};
    std::array<std::size_t, kScoreLevels> floored{};
    std::size_t unlabeled_class = 0;
    std::size_t unlabeled_score = 0;

    friend bool operator==(const LabelStats&, const LabelStats&) = default;
};

struct Corpus {
    std::vector<ClozeInstance> instances;

    std::size_t size() const noexcept { return instances.size(); }
    bool empty() const noexcept { return instances.empty(); }

    LabelStats stats() const {
        LabelStats s;
        for (const auto& in : instances) {
            if (in.class_label) ++s.classes[static_cast<std::size_t>(*in.class_label)];
            else ++s.unlabeled_class;
            if (in.plausibility_score) {
                ++s.rounded[normalize_score(*in.plausibility_score, BinningMode::round).value()];
                ++s.floored[normalize_score(*in.plausibility_score, BinningMode::floor).value()];
            } else {
                ++s.unlabeled_score;
            }
        }
        return s;
    }

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return v;
}

inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

/// Parses the canonical TSV text. `source` names the input in error messages.
/// All problems are collected and reported together.
inline Corpus parse_tsv(std::string_view text, const std::string& source = "<tsv>") {
    std::vector<ValidationIssue> issues;
    std::vector<std::string_view> lines;
    {
        std::size_t start = 0;
        while (start < text.size()) {
            const auto nl = text.find('\n', start);
            if (nl == std::string_view::npos) {
                lines.push_back(text.substr(start));
                break;
            }
            lines.push_back(text.substr(start, nl - start));
            start = nl + 1;
        }
    }
    if (lines.empty()) throw ValidationError(source, {{1, "", "missing header row"}});

    const auto header = detail::split_tabs(lines[0]);
    std::array<std::size_t, kTsvColumns.size()> column_of{};
    column_of.fill(SIZE_MAX);
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::size_t which = SIZE_MAX;
        for (std::size_t k = 0; k < kTsvColumns.size(); ++k)
            if (header[c] == kTsvColumns[k]) which = k;
        if (which == SIZE_MAX) {
            issues.push_back({1, std::string(header[c]), "unknown column"});
        } else if (column_of[which] != SIZE_MAX) {
            issues.push_back({1, std::string(header[c]), "duplicate column"});
        } else {
            column_of[which] = c;
        }
    }
    for (std::size_t k = 0; k < kTsvColumns.size(); ++k)
        if (column_of[k] == SIZE_MAX) issues.push_back({1, std::string(kTsvColumns[k]), "missing column"});
    if (!issues.empty()) throw ValidationError(source, std::move(issues));

    Corpus corpus;
    std::unordered_set<std::string> seen_ids;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const std::size_t line_no = r + 1;
        const auto cells = detail::split_tabs(lines[r]);
        if (cells.size() != header.size()) {
            issues.push_back({line_no, "", "expected " + std::to_string(header.size()) + " fields, found " +
                                               std::to_string(cells.size())});
            continue;
        }
        auto cell = [&](std::size_t k) { return cells[column_of[k]]; };
        bool row_ok = true;
        auto fail = [&](std::size_t k, std::string msg) {
            issues.push_back({line_no, std::string(kTsvColumns[k]), std::move(msg)});
            row_ok = false;
        };
        for (std::size_t k = 0; k < kTsvColumns.size(); ++k)
            if (cell(k).find('\r') != std::string_view::npos) fail(k, "carriage return not allowed");

        ClozeInstance in;
        in.id = std::string(cell(0));
        if (in.id.empty()) fail(0, "empty id");
        else if (!seen_ids.insert(in.id).second) fail(0, "duplicate id '" + in.id + "'");

        if (auto p = parse_resolved_pattern(cell(1))) in.resolved_pattern = *p;
        else fail(1, "unknown resolved pattern '" + std::string(cell(1)) + "'");

        in.article_title = std::string(cell(2));
        in.section_header = std::string(cell(3));
        in.previous_context = std::string(cell(4));
        in.sentence = std::string(cell(5));
        if (const auto n = count_placeholders(in.sentence); n != 1)
            fail(5, "expected exactly one " + std::string(kFillerPlaceholder) + " placeholder, found " +
                        std::to_string(n));
        in.follow_up_context = std::string(cell(6));
        in.filler = std::string(cell(7));

        if (!cell(8).empty()) {
            if (auto c = parse_class_label(cell(8))) in.class_label = *c;
            else fail(8, "unknown class label '" + std::string(cell(8)) + "'");
        }
        if (!cell(9).empty()) {
            const auto v = detail::parse_double(cell(9));
            if (!v) fail(9, "not a number: '" + std::string(cell(9)) + "'");
            else if (!(*v >= 1.0 && *v <= 5.0)) fail(9, "score " + std::string(cell(9)) + " outside [1, 5]");
            else in.plausibility_score = *v;
        }
        if (row_ok) corpus.instances.push_back(std::move(in));
    }
    if (!issues.empty()) throw ValidationError(source, std::move(issues));
    return corpus;
}

inline Corpus load_tsv(const std::string& path) { return parse_tsv(detail::read_file(path), path); }

/// Canonical serialization: header row, canonical column order, "\n" endings,
/// class names spelled as in kClassNames, shortest round-trip scores.
inline std::string format_tsv(const Corpus& corpus) {
    std::string out;
    for (std::size_t k = 0; k < kTsvColumns.size(); ++k) {
        if (k) out += '\t';
        out += kTsvColumns[k];
    }
    out += '\n';
    std::vector<ValidationIssue> issues;
    for (std::size_t r = 0; r < corpus.instances.size(); ++r) {
        const auto& in = corpus.instances[r];
        const std::array<std::string_view, 8> text_fields = {
            in.id, to_string(in.resolved_pattern), in.article_title, in.section_header,
            in.previous_context, in.sentence, in.follow_up_context, in.filler};
        for (std::size_t k = 0; k < text_fields.size(); ++k) {
            if (text_fields[k].find_first_of("\t\n\r") != std::string_view::npos)
                issues.push_back({r + 2, std::string(kTsvColumns[k]), "tab or newline inside field"});
            out += text_fields[k];
            out += '\t';
        }
        if (in.class_label) out += to_string(*in.class_label);
        out += '\t';
        if (in.plausibility_score) out += detail::format_double(*in.plausibility_score);
        out += '\n';
    }
    if (!issues.empty()) throw ValidationError("<write>", std::move(issues));
    return out;
}

inline void write_tsv(const Corpus& corpus, const std::string& path) {
    const auto text = format_tsv(corpus);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError(path + ": cannot open for writing");
    out << text;
    if (!out) throw ValidationError(path + ": write failed");
}

/// Encoded targets for every fully labeled row.
struct TargetSet {
    std::vector<std::size_t> rows;  // indices into the corpus
    std::vector<SampleTargets> targets;
    std::size_t excluded = 0;  // rows missing one or both labels
};

inline SampleTargets make_sample_targets(PlausibilityClass cls, double score, BinningMode mode) {
    return {encode_ordinal(OrdinalLabel(static_cast<std::size_t>(cls), kClassLevels)),
            encode_ordinal(normalize_score(score, mode))};
}

inline TargetSet make_targets(const Corpus& c, BinningMode mode) {
    TargetSet t;
    for (std::size_t r = 0; r < c.instances.size(); ++r) {
        const auto& in = c.instances[r];
        if (!in.class_label || !in.plausibility_score) {
            ++t.excluded;
            continue;
        }
        t.rows.push_back(r);
        t.targets.push_back(make_sample_targets(*in.class_label, *in.plausibility_score, mode));
    }
    return t;
}

inline Corpus merge_train_dev(const Corpus& train, const Corpus& dev) {
    std::unordered_set<std::string> ids;
    for (const auto& in : train.instances) ids.insert(in.id);
    std::vector<ValidationIssue> issues;
    for (const auto& in : dev.instances)
        if (ids.contains(in.id)) issues.push_back({0, "id", "id '" + in.id + "' present in both train and dev"});
    if (!issues.empty()) throw ValidationError("merge_train_dev", std::move(issues));
    Corpus merged = train;
    merged.instances.insert(merged.instances.end(), dev.instances.begin(), dev.instances.end());
    return merged;
}

/// Seeded per-epoch shuffles of [0, n) cut into batches; the last batch of an
/// epoch may be short. Epoch e's order depends only on (seed, e).
class BatchSchedule {
public:
    BatchSchedule(std::size_t n, std::size_t batch_size, std::uint64_t seed)
        : n_(n), batch_size_(batch_size), seed_(seed) {
        if (batch_size == 0) throw UsageError("batch size must be at least 1");
    }

    std::size_t batches_per_epoch() const noexcept { return (n_ + batch_size_ - 1) / batch_size_; }
    std::size_t size() const noexcept { return n_; }
    std::size_t batch_size() const noexcept { return batch_size_; }

    std::vector<std::vector<std::size_t>> epoch(std::size_t e) const {
        std::vector<std::size_t> order(n_);
        for (std::size_t i = 0; i < n_; ++i) order[i] = i;
        Rng rng(mix64(seed_) ^ mix64(0x5eed0000ULL + e));
        rng.shuffle(std::span<std::size_t>(order));
        std::vector<std::vector<std::size_t>> batches;
        for (std::size_t start = 0; start < n_; start += batch_size_) {
            const auto end = std::min(n_, start + batch_size_);
            batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
        }
        return batches;
    }

private:
    std::size_t n_;
    std::size_t batch_size_;
    std::uint64_t seed_;
};

}  // namespace coral_cloze
