// Copyright 2026 The convgeom Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "convgeom/agreement.hpp"
#include "convgeom/annotator.hpp"
#include "convgeom/backend.hpp"
#include "convgeom/cache.hpp"
#include "convgeom/corpus.hpp"
#include "convgeom/geometry.hpp"
#include "convgeom/hash.hpp"
#include "convgeom/inference.hpp"
#include "convgeom/pipeline.hpp"
#include "convgeom/report.hpp"
#include "convgeom/synth.hpp"

namespace {

using namespace convgeom;
namespace fs = std::filesystem;

struct Globals {
    int scale_min = -5;
    int scale_max = 5;
    int replications = 4;
    std::uint64_t seed = 0;
    std::string output_dir = "convgeom_out";
    std::string stars_scheme = "conventional";
    bool cr_correction = false;
    std::string pvalue = "t";
    std::string prev_scope = "discussion";
    bool m6_relax = false;
};

struct BackendFlags {
    std::string backend_url;
    std::string api_key_env = "CONVGEOM_API_KEY";
    std::string model_id;
    bool mock = false;
    int concurrency = 1;
    int max_retries = 3;
    int timeout = 120;
};

[[noreturn]] void die(int code, const std::string& message) {
    std::cerr << "convgeom: " << message << "\n";
    std::exit(code);
}

AnnotationScale scale_of(const Globals& g) {
    AnnotationScale s{g.scale_min, g.scale_max};
    s.validate();
    return s;
}

InferenceOptions inference_of(const Globals& g) {
    InferenceOptions o;
    o.cr1_correction = g.cr_correction;
    o.m6_relax_sibling_filter = g.m6_relax;
    const auto pv = parse_pvalue_mode(g.pvalue);
    if (!pv) die(1, "unknown --pvalue " + g.pvalue);
    o.pvalue = *pv;
    const auto st = parse_star_scheme(g.stars_scheme);
    if (!st) die(1, "unknown --stars-scheme " + g.stars_scheme);
    o.stars = *st;
    return o;
}

FeatureOptions features_of(const Globals& g) {
    FeatureOptions o;
    const auto sc = parse_prev_scope(g.prev_scope);
    if (!sc) die(1, "unknown --prev-scope " + g.prev_scope);
    o.prev_scope = *sc;
    return o;
}

ExactMode exact_of(const std::string& s) {
    if (s == "pairwise") return ExactMode::Pairwise;
    if (s == "unanimity") return ExactMode::Unanimity;
    die(1, "unknown --exact-mode " + s);
}

Corpus load_corpus(const std::string& path, bool lenient) {
    std::ifstream in(path);
    if (!in) die(2, "cannot open corpus " + path);
    ParseOptions po;
    po.lenient = lenient;
    try {
        ParseResult r = parse_corpus(in, po);
        for (const Diagnostic& d : r.diagnostics) std::cerr << d.format() << "\n";
        return std::move(r.corpus);
    } catch (const CorpusError& e) {
        die(kExitValidation, e.what());
    }
}

std::string resolve_model_id(const BackendFlags& b, const AnnotationCache* cache) {
    if (!b.model_id.empty()) return b.model_id;
    if (b.mock) return "mock";
    if (cache != nullptr) {
        std::set<std::string> ids;
        for (const CacheEntry& e : cache->entries()) ids.insert(e.model_id);
        if (ids.size() == 1) return *ids.begin();
    }
    die(1, "--model-id is required");
}

std::unique_ptr<ChatBackend> make_backend(const BackendFlags& b, const Globals& g, const std::string& model_id) {
    if (b.mock) return std::make_unique<MockBackend>(g.seed, scale_of(g), model_id);
    if (b.backend_url.empty()) return nullptr;
    BackendConfig c;
    c.endpoint_url = b.backend_url;
    c.api_key_env = b.api_key_env;
    c.model_id = model_id;
    c.timeout_seconds = b.timeout;
    c.max_retries = b.max_retries;
    c.max_concurrency = b.concurrency;
    return std::make_unique<HttpBackend>(c);
}

AnnotateOptions annotate_of(const Globals& g, const BackendFlags& b) {
    AnnotateOptions o;
    o.scale = scale_of(g);
    o.replications = g.replications;
    o.max_retries = b.max_retries;
    o.concurrency = b.concurrency;
    return o;
}

void add_backend_flags(CLI::App* app, BackendFlags& b) {
    app->add_option("--backend-url", b.backend_url, "Chat completions endpoint");
    app->add_option("--api-key-env", b.api_key_env, "Environment variable holding the bearer token");
    app->add_option("--model-id", b.model_id, "Model identifier");
    app->add_flag("--mock", b.mock, "Use the offline hash-based backend");
    app->add_option("--concurrency", b.concurrency, "Parallel backend requests")->check(CLI::PositiveNumber);
    app->add_option("--max-retries", b.max_retries, "Retries per replication")->check(CLI::NonNegativeNumber);
    app->add_option("--timeout", b.timeout, "Request timeout in seconds")->check(CLI::PositiveNumber);
}

void write_text(const std::string& path, const std::string& content) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_if_changed(p, content);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conversation geometry: reply trees, replicated annotation and clustered regressions"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--scale-min", g.scale_min, "Lowest annotation score");
    app.add_option("--scale-max", g.scale_max, "Highest annotation score");
    app.add_option("--replications", g.replications, "Annotation replications per pair")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", g.seed, "Seed for the mock backend and synthetic data");
    app.add_option("--output-dir", g.output_dir, "Output directory");
    app.add_option("--stars-scheme", g.stars_scheme, "conventional|shifted");
    app.add_flag("--cr-correction", g.cr_correction, "Apply the CR1 small-sample factor");
    app.add_option("--pvalue", g.pvalue, "t|normal");
    app.add_option("--prev-scope", g.prev_scope, "discussion|branch");
    app.add_flag("--m6-relax-sibling-filter", g.m6_relax, "Do not require an older sibling for M6");

    // validate
    auto* validate = app.add_subcommand("validate", "Check corpus structure")->fallthrough();
    std::string corpus_path;
    bool lenient = false;
    validate->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    validate->add_flag("--lenient", lenient, "Report violations but exit 0 when usable discussions remain");

    // annotate
    auto* annotate = app.add_subcommand("annotate", "Annotate every reply against its parent")->fallthrough();
    std::string cache_path;
    BackendFlags bf;
    annotate->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    annotate->add_option("--cache", cache_path, "Annotation cache JSONL")->required();
    annotate->add_flag("--lenient", lenient, "Skip invalid discussions");
    add_backend_flags(annotate, bf);

    // features
    auto* features = app.add_subcommand("features", "Compute the per-post feature table")->fallthrough();
    std::string out_path;
    features->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    features->add_option("--annotations", cache_path, "Annotation cache JSONL")->required();
    features->add_option("--out", out_path, "Feature CSV")->required();
    features->add_option("--model-id", bf.model_id, "Model identifier of the cached annotations");
    features->add_flag("--lenient", lenient, "Skip invalid discussions");

    // agreement
    auto* agreement = app.add_subcommand("agreement", "Replication agreement per dimension")->fallthrough();
    std::string exact_mode = "pairwise";
    agreement->add_option("--cache", cache_path, "Annotation cache JSONL")->required();
    agreement->add_option("--out", out_path, "Agreement CSV")->required();
    agreement->add_option("--exact-mode", exact_mode, "pairwise|unanimity");

    // regress
    auto* regress = app.add_subcommand("regress", "Fit models with discussion-clustered errors")->fallthrough();
    std::string features_path, model_sel = "all", dim_sel = "all";
    regress->add_option("--features", features_path, "Feature CSV")->required();
    regress->add_option("--model", model_sel, "M1..M6|all");
    regress->add_option("--dimension", dim_sel, "Dimension name|all");
    regress->add_option("--out", out_path, "Output directory")->required();

    // report
    auto* report = app.add_subcommand("report", "Render tables and scatter figures")->fallthrough();
    report->add_option("--features", features_path, "Feature CSV")->required();
    report->add_option("--out", out_path, "Output directory")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate synthetic corpora")->fallthrough();
    std::string config_path, out_corpus, out_cache;
    synth->add_option("--config", config_path, "Synthetic config JSON")->required();
    synth->add_option("--out-corpus", out_corpus, "Corpus JSONL");
    synth->add_option("--out-cache", out_cache, "Annotation cache JSONL");
    auto* recover = synth->add_subcommand("recover", "Monte-Carlo coefficient recovery")->fallthrough();
    int runs = 100, threads = 1;
    recover->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
    recover->add_option("--out", out_path, "Summary JSON")->required();
    recover->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "Run every stage and write a report bundle")->fallthrough();
    pipeline->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    pipeline->add_option("--cache", cache_path, "Annotation cache JSONL")->required();
    pipeline->add_flag("--lenient", lenient, "Skip invalid discussions");
    pipeline->add_option("--exact-mode", exact_mode, "pairwise|unanimity");
    add_backend_flags(pipeline, bf);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            std::ifstream in(corpus_path);
            if (!in) die(kExitValidation, "cannot open corpus " + corpus_path);
            const ParseResult r = validate_corpus(in);
            for (const Diagnostic& d : r.diagnostics) std::cout << d.format() << "\n";
            std::cerr << r.corpus.discussions.size() << " valid discussions, " << r.corpus.posts.size() << " posts, "
                      << r.diagnostics.size() << " violations\n";
            if (r.diagnostics.empty()) return kExitOk;
            return lenient && !r.corpus.discussions.empty() ? kExitOk : kExitValidation;
        }

        if (annotate->parsed()) {
            const Corpus corpus = load_corpus(corpus_path, lenient);
            AnnotationCache cache(cache_path);
            const std::string model_id = resolve_model_id(bf, nullptr);
            auto backend = make_backend(bf, g, model_id);
            const CorpusAnnotation a = annotate_corpus(corpus, backend.get(), cache, model_id, annotate_of(g, bf));
            std::cerr << a.records.size() << " records, " << a.requests << " backend requests, " << a.failures.size()
                      << " failures\n";
            for (const auto& f : a.failures) std::cout << "failed " << f << "\n";
            return a.failures.empty() ? kExitOk : kExitAnnotation;
        }

        if (features->parsed()) {
            const Corpus corpus = load_corpus(corpus_path, lenient);
            AnnotationCache cache(cache_path);
            const std::string model_id = resolve_model_id(bf, &cache);
            const CorpusAnnotation a = annotate_corpus(corpus, nullptr, cache, model_id, annotate_of(g, bf));
            FeatureTable t;
            try {
                t = compute_feature_table(corpus, post_metrics(a.records), features_of(g));
            } catch (const MissingAnnotationError& e) {
                die(kExitAnnotation, e.what());
            }
            for (const auto& w : t.warnings) std::cerr << w << "\n";
            std::ostringstream ss;
            write_feature_csv(ss, t.rows);
            write_text(out_path, ss.str());
            return kExitOk;
        }

        if (agreement->parsed()) {
            AnnotationCache cache(cache_path);
            const auto entries = cache.entries();
            const AgreementReport r = agreement_report_from_cache(entries, g.replications, exact_of(exact_mode));
            std::ostringstream ss;
            write_agreement_csv(ss, r);
            write_text(out_path, ss.str());
            std::cout << render_agreement(r);
            return kExitOk;
        }

        if (regress->parsed() || report->parsed()) {
            std::ifstream in(features_path);
            if (!in) die(kExitInference, "cannot open features " + features_path);
            const std::vector<FeatureRow> rows = read_feature_csv(in);
            const InferenceOptions opts = inference_of(g);
            std::vector<ModelSpec> specs;
            if (report->parsed() || (model_sel == "all" && dim_sel == "all")) {
                specs = default_grid(opts);
            } else {
                std::vector<ModelId> models;
                std::vector<Dimension> dims;
                if (model_sel == "all") {
                    models.assign(kAllModels.begin(), kAllModels.end());
                } else if (auto m = parse_model_id(model_sel)) {
                    models.push_back(*m);
                } else {
                    die(1, "unknown --model " + model_sel);
                }
                if (dim_sel == "all") {
                    dims.assign(kAllDimensions.begin(), kAllDimensions.end());
                } else if (auto d = parse_dimension(dim_sel)) {
                    dims.push_back(*d);
                } else {
                    die(1, "unknown --dimension " + dim_sel);
                }
                for (ModelId m : models) {
                    for (Dimension d : dims) specs.push_back(make_spec(m, d, opts));
                }
            }
            Bundle bundle;
            const RunAllResult r = render_regressions(rows, specs, opts, report->parsed(), bundle);
            OutputLock lock(out_path);
            write_bundle(out_path, bundle);
            for (const RegressionTable& t : r.tables) std::cout << render_table(t, opts.stars).text << "\n";
            for (const ModelFailure& f : r.failures) std::cerr << "failed: " << f.message << "\n";
            return r.failures.empty() ? kExitOk : kExitInference;
        }

        if (synth->parsed()) {
            SynthConfig cfg = synth_config_from_json(read_file(config_path));
            if (seed_opt->count() > 0) cfg.seed = g.seed;
            if (app.get_option("--replications")->count() > 0) cfg.replications = g.replications;
            if (app.get_option("--scale-min")->count() > 0 || app.get_option("--scale-max")->count() > 0) {
                cfg.scale = scale_of(g);
            }
            if (app.get_option("--prev-scope")->count() > 0) cfg.prev_scope = features_of(g).prev_scope;
            cfg.validate();
            if (recover->parsed()) {
                const RecoverySummary s = recovery_experiment(cfg, runs, inference_of(g), threads);
                write_text(out_path, s.to_json());
                std::cout << s.to_json();
                return kExitOk;
            }
            if (out_corpus.empty()) die(1, "synth needs --out-corpus (or the recover subcommand)");
            const SynthOutput out = generate_corpus(cfg);
            std::ostringstream cs;
            write_corpus(cs, out.corpus);
            write_text(out_corpus, cs.str());
            if (!out_cache.empty()) {
                std::string lines;
                for (const CacheEntry& e : out.cache) lines += e.to_json_line() + "\n";
                write_text(out_cache, lines);
            }
            std::cerr << out.corpus.discussions.size() << " discussions, " << out.corpus.posts.size() << " posts, "
                      << out.truncations << " of " << out.draws << " draws truncated\n";
            return kExitOk;
        }

        if (pipeline->parsed()) {
            PipelineConfig c;
            c.corpus_path = corpus_path;
            c.cache_path = cache_path;
            c.output_dir = g.output_dir;
            c.lenient = lenient;
            c.mock = bf.mock;
            c.seed = g.seed;
            c.backend_url = bf.backend_url;
            c.annotate = annotate_of(g, bf);
            c.features = features_of(g);
            c.inference = inference_of(g);
            c.exact_mode = exact_of(exact_mode);
            std::unique_ptr<AnnotationCache> probe;
            if (bf.model_id.empty() && !bf.mock) probe = std::make_unique<AnnotationCache>(cache_path);
            c.model_id = resolve_model_id(bf, probe.get());
            probe.reset();
            auto backend = make_backend(bf, g, c.model_id);
            const PipelineResult r = run_pipeline(c, backend.get());
            for (const auto& line : r.log) std::cerr << line << "\n";
            std::cerr << r.tables << " tables, " << r.backend_requests << " backend requests -> " << c.output_dir
                      << "\n";
            return r.exit_code;
        }
    } catch (const std::exception& e) {
        die(1, e.what());
    }
    return kExitOk;
}
