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

#ifndef CONVGEOM_ANNOTATOR_HPP
#define CONVGEOM_ANNOTATOR_HPP

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "convgeom/backend.hpp"
#include "convgeom/cache.hpp"
#include "convgeom/corpus.hpp"
#include "convgeom/types.hpp"

namespace convgeom {

/// Operator-supplied wording of the annotation prompt.
struct PromptTemplate {
    std::string role;          // frames the model as a human annotator
    std::string instructions;  // relative-to-parent reading and output rules
    PerDimension<std::string> definitions;
};

const PromptTemplate& default_prompt_template();

/// Loads {"role": ..., "instructions": ..., "definitions": {<dimension>: ...}};
/// missing entries fall back to the defaults.
PromptTemplate load_prompt_template(const std::string& json_text);

class EmptyTextError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

PromptDocument build_prompt(std::string_view parent_text, std::string_view child_text,
                            std::span<const Dimension> dimensions, const AnnotationScale& scale,
                            const PromptTemplate& tmpl = default_prompt_template());

enum class ResponseErrorKind { NotJson, MissingKey, ExtraKey, OutOfRange, NonInteger };

std::string_view to_string(ResponseErrorKind kind);

class ResponseError : public std::runtime_error {
public:
    ResponseError(ResponseErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ResponseErrorKind kind() const { return kind_; }

private:
    ResponseErrorKind kind_;
};

/// Accepts exactly one JSON object whose keys are exactly the dimension
/// names, each holding an integer inside the scale.
std::map<Dimension, int> parse_annotation_json(std::string_view text, std::span<const Dimension> dimensions,
                                               const AnnotationScale& scale);

/// Replicated scores of one parent-child pair on one dimension.
struct AnnotationRecord {
    std::string pair_id;  // child post_id
    Dimension dimension = Dimension::DisagreeVsAgree;
    std::vector<int> raw_scores;  // in replication order
    double mean = 0.0;

    bool operator==(const AnnotationRecord&) const = default;
};

double mean_of(std::span<const int> scores);

class AnnotationFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AnnotateOptions {
    AnnotationScale scale;
    int replications = 4;
    int max_retries = 3;
    int concurrency = 1;
    const PromptTemplate* prompt = nullptr;  // default template when null
};

/// Annotates one pair with `replications` independent requests, cache first.
/// Successful replications are written through to the cache even when
/// another replication fails, in which case AnnotationFailed is thrown.
PerDimension<AnnotationRecord> annotate_pair(const Post& parent, const Post& child, ChatBackend& backend,
                                             AnnotationCache& cache, const AnnotateOptions& options);

struct CorpusAnnotation {
    std::vector<AnnotationRecord> records;  // (discussion, chronological, dimension) order
    std::vector<std::string> failures;      // child post_ids that could not be annotated
    std::size_t requests = 0;               // backend calls issued
};

/// Annotates every non-root post against its parent. A null backend means
/// cache-only: misses become failures.
CorpusAnnotation annotate_corpus(const Corpus& corpus, ChatBackend* backend, AnnotationCache& cache,
                                 const std::string& model_id, const AnnotateOptions& options);

/// Replication means keyed by child post_id; only posts with all three
/// dimensions present are included.
PostMetrics post_metrics(std::span<const AnnotationRecord> records);

}  // namespace convgeom

#endif  // CONVGEOM_ANNOTATOR_HPP
