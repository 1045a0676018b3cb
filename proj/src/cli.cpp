/*
 * Copyright (c) 2026, The resadapt Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "resadapt/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "resadapt/baselines.hpp"
#include "resadapt/errors.hpp"
#include "resadapt/plots.hpp"
#include "resadapt/report.hpp"
#include "resadapt/trainer.hpp"

namespace resadapt {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string cache;
    std::string out;
    std::string model;
    std::string method = "zero-shot";
    std::string split = "test";
    std::string grid;
    std::string name;
    std::uint64_t seed = 0;
    std::size_t shots = 16;
    std::string variant = "visual";
    std::string ratio_mode = "fixed";
    double alpha = 0.2;
    double beta = 0.2;
    std::size_t bottleneck_ratio = 4;
    std::size_t epochs = 200;
    double lr = 1e-5;
    std::size_t batch_size = 32;
    double momentum = 0.9;
    std::string schedule = "cosine";
    double weight_decay = 0.0;
    double logit_scale = 100.0;
    bool no_renorm = false;
    std::size_t jobs = 1;
    LinearProbeConfig probe;
    SyntheticSpec synth;
    GradCheckOptions gradcheck;
};

void add_cache(CLI::App* cmd, Options& o) {
    cmd->add_option("--cache", o.cache, "EMBC cache file")->required();
}

void add_out(CLI::App* cmd, Options& o, bool required, const std::string& what) {
    auto* opt = cmd->add_option("--out", o.out, what);
    if (required) opt->required();
}

void add_sampling(CLI::App* cmd, Options& o) {
    cmd->add_option("--seed", o.seed, "root seed")->capture_default_str();
    cmd->add_option("--shots", o.shots, "labeled images per class")->capture_default_str();
}

void add_scoring(CLI::App* cmd, Options& o) {
    cmd->add_option("--logit-scale", o.logit_scale, "cosine logit multiplier")->capture_default_str();
    cmd->add_flag("--no-renorm", o.no_renorm, "skip renormalizing blended features");
}

void add_training(CLI::App* cmd, Options& o) {
    add_sampling(cmd, o);
    add_scoring(cmd, o);
    cmd->add_option("--variant", o.variant, "visual | text | both")->capture_default_str();
    cmd->add_option("--ratio-mode", o.ratio_mode, "fixed | learnable | hypernet")->capture_default_str();
    cmd->add_option("--alpha", o.alpha, "image-side residual ratio (start value for learned modes)")
        ->capture_default_str();
    cmd->add_option("--beta", o.beta, "text-side residual ratio (start value for learned modes)")
        ->capture_default_str();
    cmd->add_option("--bottleneck-ratio", o.bottleneck_ratio, "hidden width = dim / ratio")->capture_default_str();
    cmd->add_option("--epochs", o.epochs, "passes over the episode")->capture_default_str();
    cmd->add_option("--lr", o.lr, "base learning rate")->capture_default_str();
    cmd->add_option("--batch-size", o.batch_size, "mini-batch size")->capture_default_str();
    cmd->add_option("--momentum", o.momentum, "SGD momentum")->capture_default_str();
    cmd->add_option("--schedule", o.schedule, "constant | cosine")->capture_default_str();
    cmd->add_option("--weight-decay", o.weight_decay, "L2 decay on adapter matrices")->capture_default_str();
}

void add_probe(CLI::App* cmd, Options& o) {
    cmd->add_option("--l2", o.probe.l2, "linear-probe L2 strength")->capture_default_str();
    cmd->add_option("--probe-max-iter", o.probe.max_iterations, "linear-probe iteration cap")
        ->capture_default_str();
    cmd->add_option("--probe-tol", o.probe.tolerance, "linear-probe gradient-norm target")->capture_default_str();
}

TrainConfig train_config(const Options& o, std::size_t dim) {
    TrainConfig c;
    c.shots = o.shots;
    c.seed = o.seed;
    c.epochs = o.epochs;
    c.batch_size = o.batch_size;
    c.learning_rate = o.lr;
    c.momentum = o.momentum;
    c.schedule = parse_schedule(o.schedule);
    c.variant = parse_variant(o.variant);
    c.ratio_mode = make_ratio_mode(o.ratio_mode, o.alpha, o.beta, dim);
    c.bottleneck_ratio = o.bottleneck_ratio;
    c.weight_decay = o.weight_decay;
    c.renormalize = !o.no_renorm;
    c.logit_scale = o.logit_scale;
    validate_config(c);
    return c;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> items;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            items.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    items.push_back(cur);
    return items;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        double v = 0.0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
            throw ArgumentError("bad number '" + item + "' in --grid");
        }
        out.push_back(v);
    }
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(s)) {
        std::size_t v = 0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
            throw ArgumentError("bad integer '" + item + "' in --grid");
        }
        out.push_back(v);
    }
    return out;
}

void write_json(const fs::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

fs::path sibling(const std::string& out, const char* ext) { return fs::path(out).replace_extension(ext); }

std::string pct(double accuracy) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * accuracy);
    return buf;
}

Json cache_echo(const Options& o, const EmbeddingCache& cache) {
    Json j;
    j["path"] = o.cache;
    j["dim"] = cache.dim;
    j["num_images"] = cache.num_images();
    j["num_classes"] = cache.num_classes();
    return j;
}

// ---------------------------------------------------------------------------

int cmd_synth(const Options& o, std::ostream& out) {
    const auto cache = make_synthetic_cache(o.synth);
    save_cache(cache, o.out);
    out << "wrote " << o.out << ": " << cache.num_images() << " images, " << cache.num_classes()
        << " classes, dim " << cache.dim << "\n";
    return kExitOk;
}

int cmd_inspect(const Options& o, std::ostream& out) {
    const auto cache = load_cache(o.cache);
    Json j;
    j["cache"] = cache_echo(o, cache);
    j["normalized"] = cache.normalized;
    Json splits;
    for (auto tag : {SplitTag::Train, SplitTag::Val, SplitTag::Test}) {
        splits[to_string(tag)] = split_indices(cache, tag).size();
    }
    j["splits"] = splits;
    std::vector<std::size_t> per_class(cache.num_classes(), 0);
    for (auto y : cache.labels) ++per_class[y];
    Json classes = Json::array();
    for (std::size_t k = 0; k < cache.num_classes(); ++k) {
        classes.push_back(Json{{"index", k}, {"name", cache.class_names[k]}, {"count", per_class[k]}});
    }
    j["classes"] = classes;
    if (!o.out.empty()) write_json(o.out, j);
    out << o.cache << ": dim " << cache.dim << ", " << cache.num_images() << " images ("
        << j["splits"]["train"] << " train, " << j["splits"]["val"] << " val, " << j["splits"]["test"]
        << " test), " << cache.num_classes() << " classes, normalized " << (cache.normalized ? "yes" : "no")
        << "\n";
    return kExitOk;
}

int cmd_sample(const Options& o, std::ostream& out) {
    const auto cache = load_cache(o.cache);
    const auto episode = sample_episode(cache, o.shots, o.seed);
    Json j;
    j["config"] = Json{{"cache", cache_echo(o, cache)}, {"shots", o.shots}, {"seed", o.seed}};
    j["indices"] = episode.indices;
    j["labels"] = gather_labels(cache, episode.indices);
    if (!o.out.empty()) write_json(o.out, j);
    out << "episode: " << episode.indices.size() << " images, " << o.shots << " per class, seed " << o.seed
        << "\n";
    return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
    if (fs::path(o.out).extension() == ".json") throw ArgumentError("--out names the model file, not the JSON report");
    const auto cache = load_cache(o.cache);
    const auto config = train_config(o, cache.dim);
    const auto episode = sample_episode(cache, config.shots, config.seed);
    const auto result = train(cache, episode, config);
    save_adapter(AdapterModel{config.variant, result.ratio_mode, result.params}, o.out);
    Json j = to_json(result, config);
    j["config"]["cache"] = cache_echo(o, cache);
    write_json(sibling(o.out, ".json"), j);
    write_text_file(sibling(o.out, ".svg"), loss_curve_svg(result));
    write_json(sibling(o.out, ".timing.json"), Json{{"wallclock_seconds", result.wallclock_seconds}});
    out << "trained " << to_string(config.variant) << " adapter (" << ratio_mode_name(config.ratio_mode)
        << ", hidden " << result.params.hidden << ", "
        << trainable_parameter_count(result.params, result.ratio_mode, config.variant) << " parameters) in "
        << result.wallclock_seconds << " s\n"
        << "loss " << result.initial_loss << " -> " << result.final_loss << ", alpha " << result.final_alpha
        << ", beta " << result.final_beta << "\n"
        << "wrote " << o.out << "\n";
    return kExitOk;
}

EvalReport adapter_report(const Options& o, const EmbeddingCache& cache, SplitTag split, Json& echo) {
    if (!o.model.empty()) {
        const auto model = load_adapter(o.model);
        echo["model"] = o.model;
        echo["logit_scale"] = o.logit_scale;
        echo["renormalize"] = !o.no_renorm;
        return eval_adapter(cache, model, LogitScale{o.logit_scale}, !o.no_renorm, split);
    }
    const auto config = train_config(o, cache.dim);
    const auto result = train(cache, sample_episode(cache, config.shots, config.seed), config);
    echo["train"] = to_json(config);
    return eval_adapter(cache, AdapterModel{config.variant, result.ratio_mode, result.params},
                        LogitScale{config.logit_scale}, config.renormalize, split);
}

EvalReport probe_report(const Options& o, const EmbeddingCache& cache, SplitTag split, Json& echo) {
    const auto probe = train_linear_probe(cache, sample_episode(cache, o.shots, o.seed), o.probe);
    echo["shots"] = o.shots;
    echo["seed"] = o.seed;
    echo["probe"] = to_json(o.probe);
    echo["probe_result"] = Json{{"iterations", probe.iterations},
                                {"objective", probe.objective},
                                {"gradient_norm", probe.gradient_norm},
                                {"converged", probe.converged}};
    return eval_linear_probe(cache, probe, split);
}

int cmd_eval(const Options& o, std::ostream& out) {
    const auto cache = load_cache(o.cache);
    const auto split = parse_split(o.split);
    Json echo;
    echo["command"] = "eval";
    echo["cache"] = cache_echo(o, cache);
    echo["method"] = o.method;
    echo["split"] = o.split;

    if (o.method == "all") {
        Json zs_echo, lp_echo, ad_echo;
        zs_echo["logit_scale"] = o.logit_scale;
        const auto zs = eval_zero_shot(cache, LogitScale{o.logit_scale}, split);
        const auto lp = probe_report(o, cache, split, lp_echo);
        const auto ad = adapter_report(o, cache, split, ad_echo);
        Json j;
        j["config"] = echo;
        j["zero_shot"] = Json{{"config", zs_echo}, {"report", to_json(zs, cache)}};
        j["linear_probe"] = Json{{"config", lp_echo}, {"report", to_json(lp, cache)}};
        j["adapter"] = Json{{"config", ad_echo}, {"report", to_json(ad, cache)}};
        if (!o.out.empty()) {
            write_json(o.out, j);
            std::string csv = "method,accuracy\r\n";
            for (const auto* r : {&zs, &lp, &ad}) csv += std::string(to_string(r->method)) + "," + format_double(r->overall_accuracy) + "\r\n";
            write_text_file(sibling(o.out, ".csv"), csv);
            write_text_file(sibling(o.out, ".svg"),
                            gain_svg({"linear probe", "adapter"}, {lp.overall_accuracy, ad.overall_accuracy},
                                     zs.overall_accuracy));
        }
        out << "zero-shot " << pct(zs.overall_accuracy) << ", linear probe " << pct(lp.overall_accuracy)
            << ", adapter " << pct(ad.overall_accuracy) << " on " << zs.num_test << " " << o.split
            << " images\n";
        return kExitOk;
    }

    EvalReport report;
    if (o.method == "zero-shot") {
        echo["logit_scale"] = o.logit_scale;
        report = eval_zero_shot(cache, LogitScale{o.logit_scale}, split);
    } else if (o.method == "linear-probe") {
        report = probe_report(o, cache, split, echo);
    } else if (o.method == "adapter") {
        report = adapter_report(o, cache, split, echo);
    } else {
        throw ArgumentError("unknown method '" + o.method + "' (zero-shot | linear-probe | adapter | all)");
    }
    if (!o.out.empty()) {
        Json j;
        j["config"] = echo;
        j["report"] = to_json(report, cache);
        write_json(o.out, j);
        write_text_file(sibling(o.out, ".csv"), eval_csv(report, cache));
        write_text_file(sibling(o.out, ".svg"), per_class_svg(report, cache));
    }
    out << o.method << " accuracy " << pct(report.overall_accuracy) << " on " << report.num_test << " "
        << o.split << " images\n";
    return kExitOk;
}

int emit_sweep(const Options& o, const EmbeddingCache& cache, const TrainConfig& config, const SweepTable& table,
               const char* command, std::ostream& out) {
    if (!o.out.empty()) {
        Json echo;
        echo["command"] = command;
        echo["cache"] = cache_echo(o, cache);
        echo["grid"] = o.grid;
        echo["jobs"] = o.jobs;
        echo["train"] = to_json(config);
        Json j;
        j["config"] = echo;
        j["sweep"] = to_json(table);
        write_json(o.out, j);
        const std::string name = o.name.empty() ? fs::path(o.cache).stem().string() : o.name;
        write_text_file(sibling(o.out, ".csv"), sweep_csv({{name, table}}));
        write_text_file(sibling(o.out, ".svg"), sweep_svg(table));
    }
    for (std::size_t i = 0; i < table.axis_values.size(); ++i) {
        out << table.axis_name << " " << format_double(table.axis_values[i]) << ": "
            << (table.accuracies[i] ? pct(*table.accuracies[i]) : "failed (" + table.errors[i] + ")") << "\n";
    }
    if (table.best_value) out << "best " << table.axis_name << " " << format_double(*table.best_value) << "\n";
    return kExitOk;
}

int cmd_sweep_alpha(Options o, std::ostream& out) {
    if (o.grid.empty()) o.grid = "0,0.2,0.4,0.6,0.8,1";
    const auto cache = load_cache(o.cache);
    const auto grid = parse_double_list(o.grid);
    o.ratio_mode = "fixed";
    const auto config = train_config(o, cache.dim);
    const auto table = sweep_alpha(cache, sample_episode(cache, config.shots, config.seed), config, grid, o.jobs);
    return emit_sweep(o, cache, config, table, "sweep-alpha", out);
}

int cmd_sweep_dim(Options o, std::ostream& out) {
    if (o.grid.empty()) o.grid = "1,2,4,8,16,32";
    const auto cache = load_cache(o.cache);
    const auto ratios = parse_size_list(o.grid);
    const auto config = train_config(o, cache.dim);
    const auto table =
        sweep_bottleneck(cache, sample_episode(cache, config.shots, config.seed), config, ratios, o.jobs);
    return emit_sweep(o, cache, config, table, "sweep-dim", out);
}

int cmd_gradcheck(Options o, std::ostream& out) {
    const auto report = grad_check(o.gradcheck);
    if (!o.out.empty()) {
        const auto& g = o.gradcheck;
        Json echo{{"command", "gradcheck"}, {"trials", g.trials},   {"seed", g.seed},
                  {"dim", g.dim},           {"bottleneck_ratio", g.bottleneck_ratio},
                  {"classes", g.classes},   {"batch", g.batch},     {"step", g.step},
                  {"tolerance", g.tolerance}, {"logit_scale", g.logit_scale},
                  {"spread", g.spread},     {"renormalize", g.renormalize}};
        write_json(o.out, Json{{"config", echo}, {"report", to_json(report)}});
    }
    out << "gradcheck " << (report.passed ? "passed" : "FAILED") << ": max relative error "
        << report.max_relative_error << " (tolerance " << report.tolerance << ") over " << report.trials
        << " trials, " << report.entries.size() << " groups, " << report.seconds << " s\n";
    return report.passed ? kExitOk : kExitRuntime;
}

int cmd_export(const Options& o, std::ostream& out) {
    const auto cache = load_cache(o.cache);
    const auto model = load_adapter(o.model);
    std::optional<SplitTag> split;
    if (o.split != "all") split = parse_split(o.split);
    const auto table = export_adapted_features(cache, model, split);
    write_text_file(o.out, features_csv(table));
    out << "wrote " << table.features.rows() << " rows x " << table.features.cols() + 1 << " columns to " << o.out
        << "\n";
    return kExitOk;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
    err << Json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Residual bottleneck adapters over frozen image/text embeddings"};
    app.require_subcommand(1);

    auto* inspect = app.add_subcommand("inspect", "summarize a cache");
    add_cache(inspect, o);
    add_out(inspect, o, false, "JSON summary");

    auto* synth = app.add_subcommand("synth", "write a synthetic cache");
    synth->add_option("--classes", o.synth.classes)->capture_default_str();
    synth->add_option("--per-class", o.synth.per_class)->capture_default_str();
    synth->add_option("--dim", o.synth.dim)->capture_default_str();
    synth->add_option("--text-noise", o.synth.text_noise)->capture_default_str();
    synth->add_option("--feature-noise", o.synth.feature_noise)->capture_default_str();
    synth->add_option("--seed", o.synth.seed)->capture_default_str();
    add_out(synth, o, true, "EMBC output");

    auto* sample = app.add_subcommand("sample", "draw a K-shot episode");
    add_cache(sample, o);
    add_sampling(sample, o);
    add_out(sample, o, false, "JSON episode");

    auto* train_cmd = app.add_subcommand("train", "fit an adapter; writes the model plus .json/.svg siblings");
    add_cache(train_cmd, o);
    add_training(train_cmd, o);
    add_out(train_cmd, o, true, "ADPT model output");

    auto* eval = app.add_subcommand("eval", "evaluate a method on a split");
    add_cache(eval, o);
    add_training(eval, o);
    add_probe(eval, o);
    eval->add_option("--method", o.method, "zero-shot | linear-probe | adapter | all")->capture_default_str();
    eval->add_option("--model", o.model, "ADPT model (adapter method; trains from flags when absent)");
    eval->add_option("--split", o.split, "train | val | test")->capture_default_str();
    add_out(eval, o, false, "JSON report (.csv/.svg siblings)");

    auto* sweep_a = app.add_subcommand("sweep-alpha", "residual-ratio sweep");
    auto* sweep_d = app.add_subcommand("sweep-dim", "bottleneck-ratio sweep");
    for (auto* cmd : {sweep_a, sweep_d}) {
        add_cache(cmd, o);
        add_training(cmd, o);
        cmd->add_option("--grid", o.grid, "comma-separated axis values");
        cmd->add_option("--jobs", o.jobs, "parallel cells")->capture_default_str();
        cmd->add_option("--name", o.name, "dataset row label (default: cache file stem)");
        add_out(cmd, o, false, "JSON table (.csv/.svg siblings)");
    }

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
    gradcheck->add_option("--trials", o.gradcheck.trials)->capture_default_str();
    gradcheck->add_option("--seed", o.gradcheck.seed)->capture_default_str();
    gradcheck->add_option("--tolerance", o.gradcheck.tolerance)->capture_default_str();
    gradcheck->add_option("--logit-scale", o.gradcheck.logit_scale)->capture_default_str();
    add_out(gradcheck, o, false, "JSON report");

    auto* export_cmd = app.add_subcommand("export-features", "write adapted features as CSV");
    add_cache(export_cmd, o);
    export_cmd->add_option("--model", o.model, "ADPT model")->required();
    export_cmd->add_option("--split", o.split, "train | val | test | all")->capture_default_str();
    add_out(export_cmd, o, true, "CSV output");
    o.split = "test";

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        report_error(err, "UsageError", e.what(), kExitUsage);
        return kExitUsage;
    }
    if (export_cmd->parsed() && export_cmd->count("--split") == 0) o.split = "all";

    try {
        if (inspect->parsed()) return cmd_inspect(o, out);
        if (synth->parsed()) return cmd_synth(o, out);
        if (sample->parsed()) return cmd_sample(o, out);
        if (train_cmd->parsed()) return cmd_train(o, out);
        if (eval->parsed()) return cmd_eval(o, out);
        if (sweep_a->parsed()) return cmd_sweep_alpha(o, out);
        if (sweep_d->parsed()) return cmd_sweep_dim(o, out);
        if (gradcheck->parsed()) return cmd_gradcheck(o, out);
        if (export_cmd->parsed()) return cmd_export(o, out);
    } catch (const InsufficientShotsError& e) {
        report_error(err, e.kind(), e.what(), kExitUsage);
        return kExitUsage;
    } catch (const ArgumentError& e) {
        report_error(err, e.kind(), e.what(), kExitUsage);
        return kExitUsage;
    } catch (const ValidationError& e) {
        report_error(err, e.kind(), e.what(), kExitUsage);
        return kExitUsage;
    } catch (const FormatError& e) {
        report_error(err, e.kind(), e.what(), kExitUsage);
        return kExitUsage;
    } catch (const ShapeError& e) {
        report_error(err, e.kind(), e.what(), kExitUsage);
        return kExitUsage;
    } catch (const Error& e) {
        report_error(err, e.kind(), e.what(), kExitRuntime);
        return kExitRuntime;
    } catch (const std::exception& e) {
        report_error(err, "InternalError", e.what(), kExitRuntime);
        return kExitRuntime;
    }
    report_error(err, "UsageError", "no subcommand", kExitUsage);
    return kExitUsage;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace resadapt
