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

#include "convgeom/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <system_error>

#include "convgeom/csv.hpp"
#include "convgeom/hash.hpp"
#include "convgeom/report.hpp"
#include "json.hpp"

namespace convgeom {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".convgeom.lock") {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        throw std::runtime_error("output directory " + dir.string() + " is locked by another run (" +
                                 path_.string() + ")");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

OutputLock::~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

bool write_if_changed(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (fs::exists(path, ec) && fs::file_size(path, ec) == content.size()) {
        if (read_file(path.string()) == content) return false;
    }
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    return true;
}

void write_bundle(const fs::path& dir, const Bundle& bundle) {
    for (const auto& [rel, content] : bundle) write_if_changed(dir / rel, content);
}

RunAllResult render_regressions(std::span<const FeatureRow> rows, std::span<const ModelSpec> specs,
                                const InferenceOptions& options, bool figures, Bundle& bundle) {
    RunAllResult result = run_specs(specs, rows, options);
    std::string all_text;
    for (const RegressionTable& t : result.tables) {
        const RenderedTable r = render_table(t, options.stars);
        bundle["tables/" + table_basename(t) + ".csv"] = r.csv;
        bundle["tables/" + table_basename(t) + ".txt"] = r.text;
        if (figures && has_scatter(t.model)) {
            const auto spec_it = std::find_if(specs.begin(), specs.end(), [&](const ModelSpec& s) {
                return s.id == t.model && s.response == t.response;
            });
            bundle["figures/" + figure_basename(t) + ".svg"] = emit_scatter(rows, *spec_it, t);
        }
    }
    bundle["tables/summary.json"] = summary_json(result, options);
    return result;
}

namespace {

std::string annotations_csv(const std::vector<AnnotationRecord>& records, int replications) {
    std::ostringstream ss;
    ss << "post_id,dimension";
    for (int r = 0; r < replications; ++r) ss << ",r" << r;
    ss << ",mean\n";
    for (const AnnotationRecord& rec : records) {
        std::vector<std::string> f = {rec.pair_id, std::string(name(rec.dimension))};
        for (int s : rec.raw_scores) f.push_back(std::to_string(s));
        f.push_back(csv::format_exact(rec.mean));
        ss << csv::join(f) << '\n';
    }
    return ss.str();
}

ordered_json config_json(const PipelineConfig& c) {
    ordered_json j;
    j["corpus"] = c.corpus_path;
    j["model_id"] = c.model_id;
    j["mock"] = c.mock;
    j["seed"] = c.seed;
    j["backend_url"] = c.backend_url;
    j["scale_min"] = c.annotate.scale.min;
    j["scale_max"] = c.annotate.scale.max;
    j["replications"] = c.annotate.replications;
    j["max_retries"] = c.annotate.max_retries;
    j["lenient"] = c.lenient;
    j["prev_scope"] = c.features.prev_scope == PrevScope::Discussion ? "discussion" : "branch";
    j["cr_correction"] = c.inference.cr1_correction;
    j["pvalue"] = c.inference.pvalue == PValueMode::StudentT ? "t" : "normal";
    j["m6_relax_sibling_filter"] = c.inference.m6_relax_sibling_filter;
    j["stars_scheme"] = c.inference.stars == StarScheme::Conventional ? "conventional" : "shifted";
    j["exact_mode"] = c.exact_mode == ExactMode::Pairwise ? "pairwise" : "unanimity";
    return j;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, ChatBackend* backend) {
    PipelineResult result;
    const fs::path out_dir = config.output_dir;
    OutputLock lock(out_dir);
    Bundle bundle;
    std::string report;
    ordered_json manifest;
    manifest["tool"] = "convgeom";
    manifest["version"] = kToolVersion;
    manifest["config"] = config_json(config);

    auto fail = [&](int code, std::string stage, const std::string& message) {
        result.exit_code = code;
        result.failed_stage = std::move(stage);
        result.log.push_back(result.failed_stage + ": " + message);
        manifest["failed_stage"] = result.failed_stage;
    };
    auto finish = [&]() {
        report += "\n";
        bundle["report.md"] = report;
        ordered_json files = ordered_json::object();
        for (const auto& [rel, content] : bundle) files[rel] = sha256_hex(content);
        manifest["outputs"] = files;
        bundle["manifest.json"] = manifest.dump(2) + "\n";
        write_bundle(out_dir, bundle);
        return result;
    };

    // validate
    const std::string corpus_bytes = read_file(config.corpus_path);
    manifest["inputs"]["corpus_sha256"] = sha256_hex(corpus_bytes);
    std::istringstream corpus_in(corpus_bytes);
    ParseResult parsed = validate_corpus(corpus_in);
    {
        std::string text;
        for (const Diagnostic& d : parsed.diagnostics) text += d.format() + "\n";
        bundle["validation.txt"] = text;
        report += "# Validation\n\n" + std::to_string(parsed.corpus.discussions.size()) + " discussions, " +
                  std::to_string(parsed.corpus.posts.size()) + " posts, " +
                  std::to_string(parsed.diagnostics.size()) + " diagnostics\n";
    }
    if (!parsed.diagnostics.empty() && !config.lenient) {
        fail(kExitValidation, "validate", std::to_string(parsed.diagnostics.size()) + " structural violations");
        return finish();
    }
    const Corpus& corpus = parsed.corpus;

    // annotate
    AnnotationCache cache(config.cache_path);
    CorpusAnnotation ann = annotate_corpus(corpus, backend, cache, config.model_id, config.annotate);
    result.backend_requests = ann.requests;
    const std::string ann_csv = annotations_csv(ann.records, config.annotate.replications);
    bundle["annotations.csv"] = ann_csv;
    manifest["inputs"]["annotations_sha256"] = sha256_hex(ann_csv);
    if (!ann.failures.empty()) {
        std::string text;
        for (const auto& f : ann.failures) text += f + "\n";
        bundle["annotation_failures.txt"] = text;
        fail(kExitAnnotation, "annotate", std::to_string(ann.failures.size()) + " pairs could not be annotated");
        return finish();
    }
    const PostMetrics metrics = post_metrics(ann.records);

    // features
    FeatureTable features;
    try {
        features = compute_feature_table(corpus, metrics, config.features);
    } catch (const MissingAnnotationError& e) {
        fail(kExitAnnotation, "features", e.what());
        return finish();
    }
    {
        std::ostringstream ss;
        write_feature_csv(ss, features.rows);
        bundle["features.csv"] = ss.str();
        std::string w;
        for (const auto& s : features.warnings) w += s + "\n";
        bundle["feature_warnings.txt"] = w;
        report += std::to_string(features.rows.size()) + " feature rows, " + std::to_string(features.warnings.size()) +
                  " excluded\n";
    }

    // agreement
    {
        const AgreementReport agreement =
            agreement_report(ann.records, config.annotate.replications, config.annotate.scale, config.exact_mode);
        std::ostringstream ss;
        write_agreement_csv(ss, agreement);
        bundle["agreement.csv"] = ss.str();
        report += "\n# Agreement across replications\n\n```\n" + render_agreement(agreement) + "```\n";
        try {
            const Eigen::Matrix3d rho = correlation_report(metrics);
            std::ostringstream cs;
            write_correlation_csv(cs, rho);
            bundle["correlations.csv"] = cs.str();
            report += "\n# Spearman correlations between dimensions\n\n```\n" + format_correlation(rho) + "```\n";
        } catch (const std::exception& e) {
            report += "\ncorrelations unavailable: " + std::string(e.what()) + "\n";
        }
    }

    // regress + render
    const auto grid = default_grid(config.inference);
    const RunAllResult reg = render_regressions(features.rows, grid, config.inference, true, bundle);
    result.tables = reg.tables.size();
    report += "\n# Regressions (discussion-clustered standard errors)\n";
    for (const RegressionTable& t : reg.tables) {
        report += "\n```\n" + render_table(t, config.inference.stars).text + "```\n";
    }
    for (const ModelFailure& f : reg.failures) report += "\nfailed: " + f.message + "\n";
    if (!reg.failures.empty()) {
        fail(kExitInference, "regress", std::to_string(reg.failures.size()) + " models failed");
    }
    return finish();
}

}  // namespace convgeom
