#pragma once

// End-to-end driver: featurize, train with AdamW + cosine decay, select the best
// dev epoch, predict, evaluate. Every step is deterministic for a fixed config.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "coral_cloze/checkpoint.hpp"
#include "coral_cloze/config.hpp"
#include "coral_cloze/dataset.hpp"
#include "coral_cloze/embeddings.hpp"
#include "coral_cloze/encoder.hpp"
#include "coral_cloze/errors.hpp"
#include "coral_cloze/metrics.hpp"
#include "coral_cloze/model.hpp"
#include "coral_cloze/parallel.hpp"
#include "coral_cloze/tinynet.hpp"

namespace coral_cloze {

/// Where pooled vectors come from: the hashed featurizer or an embedding table.
struct FeatureProvider {
    FeatureSource source = FeatureSource::hashed;
    FeaturizerConfig featurizer;
    Pooling pooling = Pooling::concat;
    const EmbeddingTable* embeddings = nullptr;

    std::size_t part_dim() const { return source == FeatureSource::hashed ? featurizer.dim : embeddings->dim(); }
    std::size_t input_dim() const { return pooled_dim(part_dim(), pooling); }

    std::vector<double> encode(const ClozeInstance& in) const {
        if (source == FeatureSource::embeddings) return embeddings->pool(in.id, pooling);
        return pool(in, in.filler, featurizer, pooling);
    }

    std::vector<std::vector<double>> encode_all(const Corpus& c) const {
        if (source == FeatureSource::embeddings && embeddings == nullptr)
            throw ConfigError("embedding features requested but no embedding table supplied");
        std::vector<std::vector<double>> out(c.size());
        parallel_for(c.size(), [&](std::size_t i) { out[i] = encode(c.instances[i]); });
        return out;
    }
};

inline std::vector<Prediction> predict_features(const ModelParams& p, const std::vector<std::vector<double>>& features) {
    std::vector<Prediction> out(features.size());
    parallel_for(features.size(), [&](std::size_t i) { out[i] = predict_one(p, features[i]); });
    return out;
}

/// Scores predictions against the rows of `gold` that carry both labels.
inline EvalReport evaluate_predictions(const std::vector<Prediction>& preds, const Corpus& gold,
                                       bool per_instance = false) {
    if (preds.size() != gold.size()) throw UsageError("evaluate: prediction count does not match corpus");
    std::vector<std::size_t> pc, gc;
    std::vector<double> ps, gs;
    std::vector<std::string> groups;
    EvalReport r;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto& in = gold.instances[i];
        if (!in.class_label || !in.plausibility_score) {
            ++r.skipped;
            continue;
        }
        pc.push_back(preds[i].label);
        gc.push_back(static_cast<std::size_t>(*in.class_label));
        ps.push_back(preds[i].score);
        gs.push_back(*in.plausibility_score);
        groups.push_back(instance_key(in.id).instance_id);
    }
    r.n = pc.size();
    if (r.n == 0) throw ValidationError("evaluation set has no rows with both gold labels");
    r.accuracy = accuracy(pc, gc);
    if (per_instance) {
        const auto g = per_group_spearman(ps, gs, groups);
        r.spearman = g.mean;
        r.spearman_mode = "per_instance";
        r.spearman_groups_skipped = g.groups_skipped;
    } else {
        r.spearman = spearman(ps, gs);
    }
    return r;
}

namespace detail {
inline std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace detail

struct TrainResult {
    ModelParams params;
    EvalReport report;
    std::vector<std::string> log;  // deterministic run log, one entry per line
    std::size_t best_epoch = 0;
    std::size_t excluded_rows = 0;
};

/// Trains on `train` and, unless merge_dev is set, selects the epoch with the best
/// dev metric. With merge_dev the dev rows are appended to the training data and
/// the final epoch is kept.
inline TrainResult train_model(const TrainConfig& cfg, const Corpus& train_in, const std::optional<Corpus>& dev_in,
                               const FeatureProvider& provider) {
    cfg.validate();
    Corpus train = train_in;
    std::optional<Corpus> dev = dev_in;
    if (cfg.merge_dev && dev) {
        train = merge_train_dev(train, *dev);
        dev.reset();
    }

    TrainResult result;
    auto& log = result.log;
    const auto targets = make_targets(train, cfg.binning);
    result.excluded_rows = targets.excluded;
    if (targets.rows.empty() && cfg.epochs > 0) throw ValidationError("training set has no rows with both labels");

    log.push_back("# coral-cloze training run");
    log.push_back("config epochs=" + std::to_string(cfg.epochs) + " batch_size=" + std::to_string(cfg.batch_size) +
                  " base_lr=" + detail::g17(cfg.base_lr) + " weight_decay=" + detail::g17(cfg.weight_decay) +
                  " lambda_c=" + detail::g17(cfg.lambda_c) + " lambda_r=" + detail::g17(cfg.lambda_r) +
                  " binning=" + std::string(to_string(cfg.binning)) +
                  " pooling=" + std::string(to_string(provider.pooling)) +
                  " features=" + std::string(to_string(provider.source)) + " d_e=" +
                  std::to_string(provider.part_dim()) + " h=" + std::to_string(cfg.hidden_dim()) +
                  " seed=" + std::to_string(cfg.seed) + " merge_dev=" + (cfg.merge_dev ? "true" : "false") +
                  " select=" + std::string(to_string(cfg.select)));
    log.push_back("data train_rows=" + std::to_string(train.size()) + " train_used=" +
                  std::to_string(targets.rows.size()) + " train_excluded=" + std::to_string(targets.excluded) +
                  " dev_rows=" + std::to_string(dev ? dev->size() : 0));
    if (targets.excluded > 0)
        log.push_back("warning: " + std::to_string(targets.excluded) +
                      " training rows lack a class label or a score and were excluded");

    const auto all_train_features = provider.encode_all(train);
    std::vector<std::vector<double>> dev_features;
    if (dev) dev_features = provider.encode_all(*dev);

    std::vector<Example> examples;
    examples.reserve(targets.rows.size());
    for (std::size_t k = 0; k < targets.rows.size(); ++k)
        examples.push_back({all_train_features[targets.rows[k]], &targets.targets[k]});

    const ModelDims dims{provider.input_dim(), cfg.hidden_dim()};
    ModelParams params = ModelParams::initialize(dims, cfg.seed);
    OptimizerState opt({0.9, 0.999, 1e-8, cfg.weight_decay}, params.tensor_sizes());
    const BatchSchedule schedule(examples.size(), cfg.batch_size, cfg.seed);
    const LrSchedule lr_schedule{cfg.base_lr, std::max<std::size_t>(1, cfg.epochs * schedule.batches_per_epoch())};
    const auto weights = cfg.loss_weights();

    auto evaluate_on = [&](const ModelParams& p, const Corpus& c, const std::vector<std::vector<double>>& f,
                           const std::string& split) {
        auto r = evaluate_predictions(predict_features(p, f), c);
        r.split = split;
        r.binning = std::string(to_string(cfg.binning));
        r.pooling = std::string(to_string(provider.pooling));
        return r;
    };
    auto metric_of = [&](const EvalReport& r) {
        return cfg.select == SelectionMetric::spearman ? r.spearman : r.accuracy;
    };
    auto safe_eval = [&](const ModelParams& p) -> std::optional<EvalReport> {
        try {
            return evaluate_on(p, *dev, dev_features, "dev");
        } catch (const NumericError& e) {
            log.push_back(std::string("warning: dev evaluation failed: ") + e.what());
            return std::nullopt;
        }
    };

    std::optional<EvalReport> best_report;
    ModelParams best = params;
    if (dev && cfg.epochs == 0) best_report = safe_eval(params);

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        double lr = 0.0;
        for (const auto& batch_rows : schedule.epoch(epoch)) {
            std::vector<Example> batch;
            batch.reserve(batch_rows.size());
            for (auto r : batch_rows) batch.push_back(examples[r]);
            auto lg = backward(params, batch, weights);
            if (!std::isfinite(lg.loss))
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", step " +
                                   std::to_string(step + 1));
            loss_sum += lg.loss * static_cast<double>(batch.size());
            lr = cosine_lr(lr_schedule, step);
            auto param_views = params.tensors();
            auto grad_views = lg.gradient.tensors();
            std::array<std::span<double>, 6> p_spans;
            std::array<std::span<const double>, 6> g_spans;
            for (std::size_t t = 0; t < 6; ++t) {
                p_spans[t] = param_views[t].values;
                g_spans[t] = grad_views[t].values;
            }
            optimizer_step(opt, p_spans, g_spans, lr);
            ++step;
        }
        const double train_loss = loss_sum / static_cast<double>(examples.size());
        std::string line = "epoch=" + std::to_string(epoch + 1) + " step=" + std::to_string(step) +
                           " lr=" + detail::g17(lr) + " train_loss=" + detail::g17(train_loss);
        if (dev) {
            const auto r = safe_eval(params);
            if (r) {
                line += " dev_accuracy=" + detail::g17(r->accuracy) + " dev_spearman=" + detail::g17(r->spearman);
                if (!best_report || metric_of(*r) > metric_of(*best_report)) {
                    best_report = r;
                    best = params;
                    result.best_epoch = epoch + 1;
                }
            }
        }
        log.push_back(std::move(line));
    }

    if (dev && best_report) {
        result.params = std::move(best);
        result.report = *best_report;
    } else {
        result.params = std::move(params);
        result.best_epoch = cfg.epochs;
        if (dev) {
            result.report = evaluate_on(result.params, *dev, dev_features, "dev");
        } else {
            result.report = evaluate_on(result.params, train, all_train_features, cfg.merge_dev ? "train+dev" : "train");
        }
    }
    log.push_back("selected epoch=" + std::to_string(result.best_epoch) + " accuracy=" +
                  detail::g17(result.report.accuracy) + " spearman=" + detail::g17(result.report.spearman) +
                  " split=" + result.report.split);
    return result;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
    std::string s;
    for (const auto& l : lines) {
        s += l;
        s += '\n';
    }
    return s;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError(path + ": cannot open for writing");
    out << text;
    if (!out) throw ValidationError(path + ": write failed");
}

struct TrainPaths {
    std::string train;
    std::optional<std::string> dev;
    std::string checkpoint;
    std::optional<std::string> log;  // defaults to checkpoint + ".log"
    std::optional<std::string> embeddings;
};

inline TrainResult cmd_train(const TrainConfig& cfg, const TrainPaths& paths) {
    cfg.validate();
    const auto train = load_tsv(paths.train);
    std::optional<Corpus> dev;
    if (paths.dev) dev = load_tsv(*paths.dev);

    std::optional<EmbeddingTable> table;
    FeatureProvider provider;
    provider.featurizer = cfg.featurizer();
    provider.pooling = cfg.pooling;
    if (paths.embeddings) {
        table = EmbeddingTable::load(*paths.embeddings);
        provider.source = FeatureSource::embeddings;
        provider.embeddings = &*table;
        provider.featurizer.dim = table->dim();
    }
    auto result = train_model(cfg, train, dev, provider);

    Checkpoint ck{result.params, provider.featurizer, provider.source, cfg.pooling, cfg.binning, cfg.seed};
    save_checkpoint(ck, paths.checkpoint);
    write_text_file(paths.log.value_or(paths.checkpoint + ".log"), join_lines(result.log));
    return result;
}

inline constexpr std::string_view kPredictionHeader = "id\tpredicted_class\tpredicted_score";

inline std::string format_predictions(const Corpus& c, const std::vector<Prediction>& preds) {
    std::string out(kPredictionHeader);
    out += '\n';
    char buf[64];
    for (std::size_t i = 0; i < c.size(); ++i) {
        std::snprintf(buf, sizeof buf, "\t%zu\t%.6f\n", preds[i].label, preds[i].score);
        out += c.instances[i].id;
        out += buf;
    }
    return out;
}

struct PredictionRow {
    std::string id;
    std::size_t label = 0;
    double score = 0.0;
};

inline std::vector<PredictionRow> parse_predictions(std::string_view text, const std::string& source) {
    std::vector<PredictionRow> rows;
    std::vector<ValidationIssue> issues;
    std::size_t start = 0, line_no = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = text.substr(start, nl - start);
        start = nl + 1;
        ++line_no;
        if (line_no == 1) {
            if (line != kPredictionHeader) issues.push_back({1, "", "expected header '" + std::string(kPredictionHeader) + "'"});
            continue;
        }
        const auto cells = detail::split_tabs(line);
        if (cells.size() != 3) {
            issues.push_back({line_no, "", "expected 3 fields"});
            continue;
        }
        PredictionRow r{std::string(cells[0])};
        if (cells[1] == "0" || cells[1] == "1" || cells[1] == "2") r.label = static_cast<std::size_t>(cells[1][0] - '0');
        else issues.push_back({line_no, "predicted_class", "expected 0, 1 or 2"});
        if (auto v = detail::parse_double(cells[2]); v && std::isfinite(*v)) r.score = *v;
        else issues.push_back({line_no, "predicted_score", "not a number"});
        rows.push_back(std::move(r));
    }
    if (line_no == 0) issues.push_back({1, "", "missing header row"});
    if (!issues.empty()) throw ValidationError(source, std::move(issues));
    return rows;
}

struct PredictPaths {
    std::string checkpoint;
    std::string data;
    std::string out;
    std::optional<std::string> embeddings;
};

inline void cmd_predict(const PredictPaths& paths) {
    const auto ck = load_checkpoint(paths.checkpoint);
    const auto corpus = load_tsv(paths.data);
    std::optional<EmbeddingTable> table;
    FeatureProvider provider{ck.source, ck.featurizer, ck.pooling, nullptr};
    if (ck.source == FeatureSource::embeddings) {
        if (!paths.embeddings) throw ConfigError("checkpoint was trained on embeddings; pass --embeddings");
        table = EmbeddingTable::load(*paths.embeddings);
        provider.embeddings = &*table;
    } else if (paths.embeddings) {
        throw ConfigError("checkpoint uses hashed features; --embeddings does not apply");
    }
    if (provider.input_dim() != ck.params.dims().input_dim)
        throw ConfigError("feature dimension " + std::to_string(provider.input_dim()) +
                          " does not match checkpoint input_dim " + std::to_string(ck.params.dims().input_dim));
    const auto preds = predict_features(ck.params, provider.encode_all(corpus));
    write_text_file(paths.out, format_predictions(corpus, preds));
}

/// Joins predictions to gold rows by id and scores them.
inline EvalReport cmd_eval(const std::string& predictions_path, const std::string& gold_path,
                           bool per_instance = false) {
    const auto rows = parse_predictions(detail::read_file(predictions_path), predictions_path);
    const auto gold = load_tsv(gold_path);
    std::unordered_map<std::string, std::size_t> pred_of;
    std::vector<ValidationIssue> issues;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (!pred_of.emplace(rows[i].id, i).second)
            issues.push_back({i + 2, "id", "duplicate prediction id '" + rows[i].id + "'"});
    std::vector<Prediction> aligned(gold.size());
    std::size_t matched = 0;
    for (std::size_t g = 0; g < gold.size(); ++g) {
        const auto it = pred_of.find(gold.instances[g].id);
        if (it == pred_of.end()) {
            issues.push_back({0, "id", "gold id '" + gold.instances[g].id + "' has no prediction"});
            continue;
        }
        aligned[g] = {rows[it->second].label, rows[it->second].score};
        ++matched;
    }
    if (matched != rows.size()) {
        std::unordered_map<std::string, bool> gold_ids;
        for (const auto& in : gold.instances) gold_ids[in.id] = true;
        for (const auto& r : rows)
            if (!gold_ids.contains(r.id)) issues.push_back({0, "id", "prediction id '" + r.id + "' not in gold"});
    }
    if (!issues.empty()) throw ValidationError("eval: unmatched ids", std::move(issues));
    return evaluate_predictions(aligned, gold, per_instance);
}

struct GradCheckOptions {
    std::uint64_t seed = 7;
    double h = 1e-5;
    double tol = 1e-5;
    double lambda_c = 0.5;
    double lambda_r = 0.5;
    std::size_t input_dim = 12;
    std::size_t hidden_dim = 6;
    std::size_t batch = 5;
};

/// Gradient check on a seeded miniature model with random dense inputs and labels.
inline GradCheckReport cmd_gradcheck(const GradCheckOptions& o) {
    Rng rng(o.seed ^ 0x67726164ULL);
    const auto params = ModelParams::initialize({o.input_dim, o.hidden_dim}, o.seed);
    std::vector<std::vector<double>> features(o.batch, std::vector<double>(o.input_dim));
    std::vector<SampleTargets> targets;
    for (auto& f : features)
        for (auto& v : f) v = rng.uniform(-1.5, 1.5);
    for (std::size_t i = 0; i < o.batch; ++i) {
        const auto cls = static_cast<PlausibilityClass>(rng.below(kClassLevels));
        targets.push_back(make_sample_targets(cls, rng.uniform(1.0, 5.0), BinningMode::round));
    }
    std::vector<Example> batch;
    for (std::size_t i = 0; i < o.batch; ++i) batch.push_back({features[i], &targets[i]});
    return grad_check(params, batch, {o.lambda_c, o.lambda_r}, o.h, o.tol);
}

}  // namespace coral_cloze
