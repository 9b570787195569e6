// coral-cloze: train, predict, eval and gradcheck for the ordinal cloze model.
//
// Exit codes: 0 success, 2 validation/config/usage error, 3 numeric failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "coral_cloze/coral_cloze.hpp"

namespace cc = coral_cloze;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNumeric = 3;

struct Options {
    std::optional<std::string> config;
    std::optional<std::string> train;
    std::optional<std::string> dev;
    std::optional<std::string> out;
    std::optional<std::string> checkpoint;
    std::optional<std::string> data;
    std::optional<std::string> predictions;
    std::optional<std::string> gold;
    std::optional<std::string> embeddings;
    std::optional<std::string> log;
    std::optional<std::string> report;
    std::string format = "kv";
    bool per_instance = false;
    bool merge_dev = false;

    // TrainConfig overrides, applied after the config file.
    std::vector<std::pair<std::string, std::optional<std::string>>> settings = {
        {"binning", {}}, {"batch_size", {}}, {"epochs", {}},      {"seed", {}},   {"pooling", {}},
        {"base_lr", {}}, {"weight_decay", {}}, {"lambda_c", {}}, {"lambda_r", {}}, {"d_e", {}},
        {"h", {}},       {"hash_seed", {}},    {"select", {}}};

    std::optional<std::string>& setting(const std::string& key) {
        for (auto& [k, v] : settings)
            if (k == key) return v;
        throw std::logic_error("unknown setting " + key);
    }

    // gradcheck and synth
    std::optional<double> tol;
    std::optional<double> h_step;
    std::size_t contexts = 400;
    std::string id_prefix = "s";
};

cc::TrainConfig resolve_config(Options& o) {
    cc::TrainConfig cfg;
    if (o.config) cc::apply_config_file(cfg, *o.config);
    for (const auto& [key, value] : o.settings)
        if (value) cc::apply_setting(cfg, key, *value);
    if (o.merge_dev) cfg.merge_dev = true;
    cfg.validate();
    return cfg;
}

std::string require(const std::optional<std::string>& v, const char* flag) {
    if (!v) throw cc::UsageError(std::string("missing required option ") + flag);
    return *v;
}

std::string render_report(const cc::EvalReport& r, const std::string& format) {
    if (format == "json") return cc::to_json(r).dump(2) + "\n";
    return cc::to_key_value(r);
}

void emit_report(const cc::EvalReport& r, const Options& o) {
    const auto text = render_report(r, o.format);
    std::cout << text;
    if (o.report) cc::write_text_file(*o.report, text);
}

int run_train(Options& o) {
    const auto cfg = resolve_config(o);
    cc::TrainPaths paths;
    paths.train = require(o.train, "--train");
    paths.dev = o.dev;
    if (o.checkpoint && o.out && *o.checkpoint != *o.out)
        throw cc::UsageError("--out and --checkpoint name different files");
    paths.checkpoint = o.checkpoint ? *o.checkpoint : require(o.out, "--out");
    paths.log = o.log;
    paths.embeddings = o.embeddings;
    const auto result = cc::cmd_train(cfg, paths);
    if (result.excluded_rows > 0)
        std::cerr << "coral-cloze: warning: " << result.excluded_rows
                  << " training rows lack a class label or a score and were excluded\n";
    emit_report(result.report, o);
    return kExitOk;
}

int run_predict(Options& o) {
    cc::PredictPaths paths;
    paths.checkpoint = require(o.checkpoint, "--checkpoint");
    paths.data = o.data ? *o.data : require(o.dev, "--data");
    paths.out = require(o.out, "--out");
    paths.embeddings = o.embeddings;
    cc::cmd_predict(paths);
    return kExitOk;
}

int run_eval(Options& o) {
    const auto preds = require(o.predictions, "--predictions");
    const auto gold = o.gold ? *o.gold : require(o.dev, "--gold");
    auto report = cc::cmd_eval(preds, gold, o.per_instance);
    report.split = "eval";
    emit_report(report, o);
    return kExitOk;
}

int run_gradcheck(Options& o) {
    cc::TrainConfig cfg;
    if (o.config) cc::apply_config_file(cfg, *o.config);
    for (const auto& key : {"lambda_c", "lambda_r", "seed"})
        if (const auto& v = o.setting(key)) cc::apply_setting(cfg, key, *v);
    cc::GradCheckOptions g;
    if (o.setting("seed") || o.config) g.seed = cfg.seed;
    g.lambda_c = cfg.lambda_c;
    g.lambda_r = cfg.lambda_r;
    if (o.tol) g.tol = *o.tol;
    if (o.h_step) g.h = *o.h_step;
    if (!(g.tol >= 0.0)) throw cc::ConfigError("--tol must be non-negative");
    if (!(g.lambda_c >= 0.0) || !(g.lambda_r >= 0.0)) throw cc::ConfigError("loss weights must be non-negative");

    const auto report = cc::cmd_gradcheck(g);
    char buf[160];
    for (const auto& t : report.tensors) {
        std::snprintf(buf, sizeof buf, "tensor=%s max_rel_error=%.3e max_abs_gradient=%.3e%s\n", t.name.c_str(),
                      t.max_rel_error, t.max_abs_gradient, t.max_abs_gradient == 0.0 ? " zero_gradient" : "");
        std::cout << buf;
    }
    std::snprintf(buf, sizeof buf, "max_rel_error=%.3e tolerance=%.3e result=%s\n", report.max_rel_error,
                  report.tolerance, report.passed ? "pass" : "fail");
    std::cout << buf;
    if (!report.passed) {
        std::cerr << "coral-cloze: gradient check failed\n";
        return kExitNumeric;
    }
    return kExitOk;
}

int run_synth(Options& o) {
    cc::SyntheticOptions s;
    s.contexts = o.contexts;
    s.id_prefix = o.id_prefix;
    if (const auto& v = o.setting("seed")) s.seed = cc::detail::parse_number<std::uint64_t>("seed", *v);
    cc::write_tsv(cc::make_synthetic_corpus(s), require(o.out, "--out"));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ordinal multi-task scoring of cloze fillers"};
    app.require_subcommand(1);
    Options o;

    auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
    auto* predict = app.add_subcommand("predict", "score a TSV with a checkpoint");
    auto* eval = app.add_subcommand("eval", "compare predictions with gold labels");
    auto* gradcheck = app.add_subcommand("gradcheck", "check analytic gradients against finite differences");
    auto* synth = app.add_subcommand("synth", "write a synthetic labeled TSV");

    auto add_setting = [&](CLI::App* cmd, const std::string& flag, const std::string& key, const std::string& help) {
        cmd->add_option(flag, o.setting(key), help);
    };
    for (auto* cmd : {train, predict, eval, gradcheck}) cmd->add_option("--config", o.config, "key=value config file");

    train->add_option("--train", o.train, "training TSV");
    train->add_option("--dev", o.dev, "dev TSV used for epoch selection");
    train->add_option("--out", o.out, "checkpoint path");
    train->add_option("--checkpoint", o.checkpoint, "checkpoint path (alias of --out)");
    train->add_option("--log", o.log, "run log path (default: <checkpoint>.log)");
    train->add_option("--embeddings", o.embeddings, "NWRZ-EMB-1 table used instead of hashed features");
    train->add_flag("--merge-dev", o.merge_dev, "append dev to train and keep the final epoch");
    add_setting(train, "--binning", "binning", "round|floor");
    add_setting(train, "--batch-size", "batch_size", "mini-batch size");
    add_setting(train, "--epochs", "epochs", "training epochs");
    add_setting(train, "--seed", "seed", "random seed");
    add_setting(train, "--pooling", "pooling", "concat|filler_only");
    add_setting(train, "--lr", "base_lr", "initial learning rate");
    add_setting(train, "--weight-decay", "weight_decay", "AdamW weight decay");
    add_setting(train, "--lambda-c", "lambda_c", "classification loss weight");
    add_setting(train, "--lambda-r", "lambda_r", "regression loss weight");
    add_setting(train, "--d-e", "d_e", "hashed feature dimension (power of two)");
    add_setting(train, "--hidden", "h", "hidden width (0: d_e / 2)");
    add_setting(train, "--hash-seed", "hash_seed", "feature hashing seed");
    add_setting(train, "--select", "select", "spearman|accuracy");

    predict->add_option("--checkpoint", o.checkpoint, "checkpoint path");
    predict->add_option("--data", o.data, "TSV to score");
    predict->add_option("--dev", o.dev, "TSV to score (alias of --data)");
    predict->add_option("--out", o.out, "predictions TSV");
    predict->add_option("--embeddings", o.embeddings, "NWRZ-EMB-1 table");

    eval->add_option("--predictions", o.predictions, "predictions TSV");
    eval->add_option("--gold", o.gold, "gold TSV");
    eval->add_option("--dev", o.dev, "gold TSV (alias of --gold)");
    eval->add_flag("--per-instance", o.per_instance, "average Spearman over each context's fillers");

    for (auto* cmd : {train, eval}) {
        cmd->add_option("--format", o.format, "report format: kv|json")->check(CLI::IsMember({"kv", "json"}));
        cmd->add_option("--report", o.report, "also write the report to this file");
    }

    add_setting(gradcheck, "--seed", "seed", "random seed");
    add_setting(gradcheck, "--lambda-c", "lambda_c", "classification loss weight");
    add_setting(gradcheck, "--lambda-r", "lambda_r", "regression loss weight");
    gradcheck->add_option("--tol", o.tol, "maximum relative error");
    gradcheck->add_option("--step", o.h_step, "finite-difference step");

    synth->add_option("--out", o.out, "output TSV");
    synth->add_option("--contexts", o.contexts, "number of contexts (five fillers each)");
    synth->add_option("--prefix", o.id_prefix, "id prefix");
    add_setting(synth, "--seed", "seed", "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "coral-cloze: " << e.what() << "\n";
        return kExitInvalid;
    }

    try {
        if (*train) return run_train(o);
        if (*predict) return run_predict(o);
        if (*eval) return run_eval(o);
        if (*gradcheck) return run_gradcheck(o);
        return run_synth(o);
    } catch (const cc::NumericError& e) {
        std::cerr << "coral-cloze: numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const cc::ValidationError& e) {
        std::cerr << "coral-cloze: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "coral-cloze: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "coral-cloze: error: " << e.what() << "\n";
        return 1;
    }
}
