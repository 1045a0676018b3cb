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

// Acceptance suite: one PASS/FAIL line per top-level criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "resadapt/baselines.hpp"
#include "resadapt/cli.hpp"
#include "resadapt/errors.hpp"
#include "resadapt/report.hpp"
#include "resadapt/trainer.hpp"
#include "support.hpp"

using namespace resadapt;
using resadapt::testing::hash_bytes;
using resadapt::testing::TempDir;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Verdict gradient_correctness() {
    GradCheckOptions o;
    o.trials = 20;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = grad_check(o);
    const double elapsed = seconds_since(t0);
    std::set<std::pair<int, std::string>> combos;
    for (const auto& e : r.entries) combos.insert({static_cast<int>(e.variant), e.ratio_mode});
    const bool pass = r.passed && r.max_relative_error < 1e-4 && combos.size() == 9 && o.renormalize && elapsed < 30.0;
    return {pass, "max rel err " + fmt("%.3g", r.max_relative_error) + ", " + std::to_string(combos.size()) +
                      " variant/mode combos, " + std::to_string(r.entries.size()) + " groups, " + fmt("%.2f", elapsed) +
                      " s"};
}

Verdict zero_shot_equivalence() {
    std::size_t caches = 0, images = 0, mismatches = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng(derive_seed(s, "acceptance/zero-shot"));
        SyntheticSpec spec;
        spec.classes = 2 + rng.below(12);
        spec.per_class = 2 + rng.below(20);
        spec.dim = 4 + rng.below(60);
        spec.text_noise = rng.uniform(0.0, 1.5);
        spec.feature_noise = rng.uniform(0.0, 0.6);
        spec.seed = rng.below(1u << 30);
        const auto cache = make_synthetic_cache(spec);
        const auto zs = eval_zero_shot(cache, LogitScale{}, SplitTag::Test);

        // Random, deliberately large adapter weights.
        auto params = init_params(cache.dim, 1 + rng.below(4), Variant::Both, rng.below(1u << 30));
        for (auto* m : {&params.w1_visual, &params.w2_visual}) {
            for (auto& v : (*m)->values()) v *= 10.0;
        }
        const AdapterModel visual{Variant::VisualOnly, FixedRatio{0.0, 0.7}, params};
        const AdapterModel both{Variant::Both, FixedRatio{0.0, 0.0}, params};
        for (const auto* model : {&visual, &both}) {
            const auto ad = eval_adapter(cache, *model, LogitScale{}, true, SplitTag::Test);
            mismatches += ad.predictions != zs.predictions;
            images += ad.predictions.size();
        }
        ++caches;
    }
    return {mismatches == 0, std::to_string(caches) + " caches, " + std::to_string(images) +
                                 " predictions compared, " + std::to_string(mismatches) + " mismatching reports"};
}

Verdict frozen_backbone() {
    TempDir dir;
    const auto path = dir / "c.embc";
    save_cache(resadapt::testing::fixture_cache(), path);
    const auto file_before = hash_bytes(read_file_bytes(path));
    const auto cache = load_cache(path);
    const auto memory_before = hash_bytes(serialize_cache(cache));
    std::size_t runs = 0, changed = 0;
    for (auto v : {Variant::VisualOnly, Variant::TextOnly, Variant::Both}) {
        for (const char* mode : {"fixed", "learnable", "hypernet"}) {
            for (bool renorm : {true, false}) {
                TrainConfig c;
                c.variant = v;
                c.ratio_mode = make_ratio_mode(mode, 0.6, 0.4, cache.dim);
                c.renormalize = renorm;
                c.epochs = 5;
                c.learning_rate = 1e-3;
                c.weight_decay = 1e-4;
                train(cache, sample_episode(cache, 16, runs), c);
                changed += hash_bytes(serialize_cache(cache)) != memory_before;
                ++runs;
            }
        }
    }
    // Through the command line as well.
    std::ostringstream out, err;
    run({"train", "--cache", path.string(), "--epochs", "5", "--out", (dir / "m.adpt").string()}, out, err);
    ++runs;
    changed += hash_bytes(read_file_bytes(path)) != file_before;
    return {changed == 0, std::to_string(runs) + " training runs, cache hash " + std::to_string(file_before) + " unchanged in " + std::to_string(runs - changed) + "/" +
                              std::to_string(runs)};
}

Verdict learning_works() {
    const auto cache = make_synthetic_cache(SyntheticSpec{10, 40, 64, 0.6, 0.2, 0});
    TrainConfig c;
    c.shots = 16;
    c.seed = 0;
    c.learning_rate = 1e-3;
    c.epochs = 50;
    c.ratio_mode = FixedRatio{0.6, 0.2};
    c.bottleneck_ratio = 4;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = train(cache, sample_episode(cache, c.shots, c.seed), c);
    const auto ad = eval_adapter(cache, AdapterModel{c.variant, r.ratio_mode, r.params}, LogitScale{c.logit_scale},
                                 c.renormalize, SplitTag::Test);
    const double elapsed = seconds_since(t0);
    const auto zs = eval_zero_shot(cache, LogitScale{c.logit_scale}, SplitTag::Test);
    const double gain = 100.0 * (ad.overall_accuracy - zs.overall_accuracy);
    const bool pass = gain >= 5.0 && r.final_loss < 0.5 * r.initial_loss && elapsed < 60.0;
    return {pass, "adapter " + fmt("%.2f", 100 * ad.overall_accuracy) + "% vs zero-shot " +
                      fmt("%.2f", 100 * zs.overall_accuracy) + "% (gain " + fmt("%.2f", gain) + " pts), loss " +
                      fmt("%.4f", r.initial_loss) + " -> " + fmt("%.4f", r.final_loss) + ", " + fmt("%.2f", elapsed) +
                      " s"};
}

// Runs the same command sequence twice from an empty directory and compares
// every output file. The wallclock sidecar is the one file allowed to differ.
Verdict determinism() {
    auto session = [](const TempDir& dir) {
        auto p = [&](const char* name) { return (dir / name).string(); };
        const std::vector<std::vector<std::string>> commands = {
            {"synth", "--seed", "0", "--out", p("c.embc")},
            {"sample", "--cache", p("c.embc"), "--shots", "16", "--seed", "0", "--out", p("episode.json")},
            {"train", "--cache", p("c.embc"), "--shots", "16", "--seed", "0", "--alpha", "0.6", "--variant", "visual",
             "--epochs", "50", "--lr", "1e-3", "--out", p("visual.adpt")},
            {"train", "--cache", p("c.embc"), "--variant", "both", "--ratio-mode", "hypernet", "--epochs", "20", "--lr",
             "1e-3", "--out", p("both.adpt")},
            {"eval", "--cache", p("c.embc"), "--method", "zero-shot", "--out", p("zs.json")},
            {"eval", "--cache", p("c.embc"), "--method", "linear-probe", "--out", p("lp.json")},
            {"eval", "--cache", p("c.embc"), "--method", "adapter", "--model", p("visual.adpt"), "--out", p("ad.json")},
            {"eval", "--cache", p("c.embc"), "--method", "all", "--epochs", "20", "--lr", "1e-3", "--out", p("all.json")},
            {"sweep-alpha", "--cache", p("c.embc"), "--epochs", "20", "--lr", "1e-3", "--jobs", "4", "--out",
             p("alpha.json")},
            {"sweep-dim", "--cache", p("c.embc"), "--epochs", "20", "--lr", "1e-3", "--alpha", "0.6", "--jobs", "3",
             "--out", p("dim.json")},
            {"gradcheck", "--trials", "3", "--out", p("gradcheck.json")},
            {"export-features", "--cache", p("c.embc"), "--model", p("visual.adpt"), "--out", p("features.csv")},
        };
        int failures = 0;
        for (const auto& args : commands) {
            std::ostringstream out, err;
            failures += run(args, out, err) != 0;
        }
        std::map<std::string, std::vector<std::uint8_t>> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir.path())) {
            files[entry.path().filename().string()] = read_file_bytes(entry.path());
        }
        return std::make_pair(failures, files);
    };
    // Same paths both times, since outputs echo their input paths.
    TempDir dir;
    const auto [fa, files_a] = session(dir);
    for (const auto& entry : std::filesystem::directory_iterator(dir.path())) std::filesystem::remove(entry.path());
    const auto [fb, files_b] = session(dir);
    // cache, episode, features, gradcheck, plus json/csv/svg or model/json/svg
    // triples for two trainings, four evals and two sweeps.
    constexpr std::size_t kExpectedFiles = 4 + 3 * 8;
    std::size_t compared = 0, differing = 0;
    std::string first_diff;
    for (const auto& [name, bytes] : files_a) {
        if (name.find(".timing.json") != std::string::npos) continue;
        ++compared;
        const auto it = files_b.find(name);
        if (it == files_b.end() || it->second != bytes) {
            ++differing;
            if (first_diff.empty()) first_diff = name;
        }
    }
    const bool pass = fa == 0 && fb == 0 && files_a.size() == files_b.size() && differing == 0 && compared == kExpectedFiles;
    return {pass, std::to_string(compared) + " JSON/CSV/SVG/model/cache files byte-identical across two runs" +
                      (first_diff.empty() ? "" : ", first difference: " + first_diff) +
                      (fa + fb ? ", " + std::to_string(fa + fb) + " commands failed" : "")};
}

Verdict probe_certificate() {
    const auto cache = resadapt::testing::fixture_cache();
    const auto probe = train_linear_probe(cache, sample_episode(cache, 16, 0), LinearProbeConfig{});

    SyntheticSpec clean;
    clean.text_noise = 0.0;
    clean.feature_noise = 0.0;
    const auto separable = make_synthetic_cache(clean);
    const auto episode = sample_episode(separable, 16, 0);
    const auto sep_probe = train_linear_probe(separable, episode, LinearProbeConfig{});
    const auto train_preds = probe_predict(sep_probe, gather_features(separable, episode.indices));
    const auto labels = gather_labels(separable, episode.indices);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += train_preds[i] == labels[i];
    const double acc = static_cast<double>(correct) / static_cast<double>(labels.size());
    const bool pass = probe.converged && probe.gradient_norm < 1e-6 && acc == 1.0;
    return {pass, "fixture grad norm " + fmt("%.3g", probe.gradient_norm) + " after " +
                      std::to_string(probe.iterations) + " iterations, separable train accuracy " +
                      fmt("%.2f", 100 * acc) + "%"};
}

Verdict parameter_count() {
    const auto p = init_params(1024, 4, Variant::VisualOnly, 0);
    const auto n = trainable_parameter_count(p, FixedRatio{0.2, 0.2}, Variant::VisualOnly);
    return {n == 524288 && p.hidden == 256,
            "D=1024, ratio 4: hidden " + std::to_string(p.hidden) + ", " + std::to_string(n) + " parameters"};
}

Verdict round_trip() {
    TempDir dir;
    std::size_t identical = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto c = resadapt::testing::random_cache(1000 + s);
        const auto first = dir / "first.embc";
        const auto second = dir / "second.embc";
        save_cache(c, first);
        const auto loaded = load_cache(first);
        save_cache(loaded, second);
        identical += loaded == c && read_file_bytes(first) == read_file_bytes(second);
    }
    return {identical == 100, std::to_string(identical) + "/100 randomized caches byte-identical after save-load-save"};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
        {"gradient correctness", gradient_correctness},
        {"zero-shot equivalence at alpha=0", zero_shot_equivalence},
        {"frozen backbone", frozen_backbone},
        {"learning works", learning_works},
        {"determinism", determinism},
        {"linear-probe certificate", probe_certificate},
        {"parameter count", parameter_count},
        {"cache round-trip", round_trip},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failed += !v.pass;
        std::printf("[%s] %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
    return failed == 0 ? 0 : 1;
}
