#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "coral_cloze/errors.hpp"

namespace coral_cloze {

inline double accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
    if (pred.size() != gold.size()) throw UsageError("accuracy: length mismatch");
    if (pred.empty()) throw UsageError("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

/// 1-based ranks; tied values share the mean of the positions they occupy.
inline std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mean_rank;
        i = j;
    }
    return ranks;
}

/// Pearson correlation; throws NumericError if either input has zero variance.
inline double pearson(std::span<const double> a, std::span<const double> b) {
    const auto n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw NumericError("correlation undefined: constant input");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

/// Spearman's rank correlation with average-rank ties.
inline double spearman(std::span<const double> pred, std::span<const double> gold) {
    if (pred.size() != gold.size()) throw UsageError("spearman: length mismatch");
    if (pred.size() < 2) throw UsageError("spearman: need at least two observations");
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (!std::isfinite(pred[i]) || !std::isfinite(gold[i])) throw NumericError("spearman: non-finite value");
    if (is_constant(gold)) throw NumericError("spearman undefined: gold scores are constant");
    if (is_constant(pred)) throw NumericError("spearman undefined: predicted scores are constant");
    const auto rp = average_ranks(pred);
    const auto rg = average_ranks(gold);
    return pearson(rp, rg);
}

struct GroupedSpearman {
    double mean = 0.0;
    std::size_t groups_used = 0;
    std::size_t groups_skipped = 0;  // fewer than two rows, or constant gold/predictions
};

/// Mean of per-group Spearman correlations. `group` labels each row.
inline GroupedSpearman per_group_spearman(std::span<const double> pred, std::span<const double> gold,
                                          std::span<const std::string> group) {
    if (pred.size() != gold.size() || pred.size() != group.size())
        throw UsageError("per_group_spearman: length mismatch");
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < group.size(); ++i) members[group[i]].push_back(i);
    GroupedSpearman out;
    double total = 0.0;
    for (const auto& [key, rows] : members) {
        std::vector<double> p, g;
        for (auto r : rows) {
            p.push_back(pred[r]);
            g.push_back(gold[r]);
        }
        if (rows.size() < 2 || is_constant(p) || is_constant(g)) {
            ++out.groups_skipped;
            continue;
        }
        total += spearman(p, g);
        ++out.groups_used;
    }
    if (out.groups_used == 0) throw NumericError("spearman undefined: no group has varying scores");
    out.mean = total / static_cast<double>(out.groups_used);
    return out;
}

struct EvalReport {
    double accuracy = 0.0;
    double spearman = 0.0;
    std::size_t n = 0;
    std::size_t skipped = 0;  // rows without usable gold labels
    std::string split;
    std::string binning;
    std::string pooling;
    std::string spearman_mode = "global";  // or "per_instance"
    std::size_t spearman_groups_skipped = 0;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

namespace detail {
inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}
}  // namespace detail

/// Line-oriented key=value rendering.
inline std::string to_key_value(const EvalReport& r) {
    std::string s;
    s += "accuracy=" + detail::fixed(r.accuracy, 6) + "\n";
    s += "spearman=" + detail::fixed(r.spearman, 6) + "\n";
    s += "n=" + std::to_string(r.n) + "\n";
    s += "skipped=" + std::to_string(r.skipped) + "\n";
    if (!r.split.empty()) s += "split=" + r.split + "\n";
    if (!r.binning.empty()) s += "binning=" + r.binning + "\n";
    if (!r.pooling.empty()) s += "pooling=" + r.pooling + "\n";
    s += "spearman_mode=" + r.spearman_mode + "\n";
    if (r.spearman_mode == "per_instance")
        s += "spearman_groups_skipped=" + std::to_string(r.spearman_groups_skipped) + "\n";
    return s;
}

/// JSON rendering; schema "coral-cloze/eval-report/1":
///   {"schema", "accuracy", "spearman", "n", "skipped", "split", "binning",
///    "pooling", "spearman_mode", "spearman_groups_skipped"}
inline nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["schema"] = "coral-cloze/eval-report/1";
    j["accuracy"] = r.accuracy;
    j["spearman"] = r.spearman;
    j["n"] = r.n;
    j["skipped"] = r.skipped;
    j["split"] = r.split;
    j["binning"] = r.binning;
    j["pooling"] = r.pooling;
    j["spearman_mode"] = r.spearman_mode;
    j["spearman_groups_skipped"] = r.spearman_groups_skipped;
    return j;
}

}  // namespace coral_cloze
