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

#include "convgeom/annotator.hpp"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace convgeom {

using nlohmann::json;

const PromptTemplate& default_prompt_template() {
    static const PromptTemplate kDefault = {
        "You are a human annotator taking part in a study of online discussion threads.",
        "You will receive a PARENT post and a CHILD post that replies to it. Score the CHILD post in relation to "
        "its PARENT post, not in isolation. Answer with a single JSON object whose keys are exactly the dimension "
        "names listed below, each mapped to an integer inside that dimension's range. Do not produce explanations, "
        "reasoning, or any text outside the JSON object.",
        {
            "Does the child post disagree or agree with the parent post?",
            "Is the child post attacking or respectful toward the author of the parent post?",
            "Is the child post's argument based on emotion or on facts?",
        },
    };
    return kDefault;
}

PromptTemplate load_prompt_template(const std::string& json_text) {
    const auto j = json::parse(json_text);
    PromptTemplate t = default_prompt_template();
    if (j.contains("role")) t.role = j["role"].get<std::string>();
    if (j.contains("instructions")) t.instructions = j["instructions"].get<std::string>();
    if (j.contains("definitions")) {
        for (const auto& [key, value] : j["definitions"].items()) {
            auto dim = parse_dimension(key);
            if (!dim) throw std::invalid_argument("prompt template: unknown dimension '" + key + "'");
            t.definitions[index(*dim)] = value.get<std::string>();
        }
    }
    return t;
}

PromptDocument build_prompt(std::string_view parent_text, std::string_view child_text,
                            std::span<const Dimension> dimensions, const AnnotationScale& scale,
                            const PromptTemplate& tmpl) {
    if (parent_text.empty()) throw EmptyTextError("parent text is empty");
    if (child_text.empty()) throw EmptyTextError("child text is empty");

    std::ostringstream sys;
    sys << tmpl.role << "\n\n" << tmpl.instructions << "\n\nDimensions:\n";
    for (Dimension d : dimensions) {
        const auto& di = info(d);
        sys << "- " << di.name << ": " << tmpl.definitions[index(d)] << " Integer from " << scale.min << " ("
            << di.negative_pole << ") to " << scale.max << " (" << di.positive_pole << ").\n";
    }

    std::string user;
    user.reserve(parent_text.size() + child_text.size() + 128);
    user += "<<<PARENT POST>>>\n";
    user += parent_text;
    user += "\n<<<END PARENT POST>>>\n\n<<<CHILD POST>>>\n";
    user += child_text;
    user += "\n<<<END CHILD POST>>>";
    return {sys.str(), std::move(user)};
}

std::string_view to_string(ResponseErrorKind kind) {
    switch (kind) {
        case ResponseErrorKind::NotJson: return "NotJson";
        case ResponseErrorKind::MissingKey: return "MissingKey";
        case ResponseErrorKind::ExtraKey: return "ExtraKey";
        case ResponseErrorKind::OutOfRange: return "OutOfRange";
        case ResponseErrorKind::NonInteger: return "NonInteger";
    }
    return "Unknown";
}

std::map<Dimension, int> parse_annotation_json(std::string_view text, std::span<const Dimension> dimensions,
                                               const AnnotationScale& scale) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ResponseError(ResponseErrorKind::NotJson, std::string("not a JSON document: ") + e.what());
    }
    if (!j.is_object()) throw ResponseError(ResponseErrorKind::NotJson, "response is not a JSON object");

    for (const auto& [key, _] : j.items()) {
        auto dim = parse_dimension(key);
        if (!dim || std::find(dimensions.begin(), dimensions.end(), *dim) == dimensions.end()) {
            throw ResponseError(ResponseErrorKind::ExtraKey, "unexpected key '" + key + "'");
        }
    }
    std::map<Dimension, int> out;
    for (Dimension d : dimensions) {
        const std::string key(name(d));
        if (!j.contains(key)) throw ResponseError(ResponseErrorKind::MissingKey, "missing key '" + key + "'");
        const auto& v = j[key];
        if (!v.is_number_integer()) {
            throw ResponseError(ResponseErrorKind::NonInteger, "'" + key + "' is not an integer: " + v.dump());
        }
        const long long score = v.is_number_unsigned() ? static_cast<long long>(std::min<std::uint64_t>(
                                                             v.get<std::uint64_t>(), 1ull << 40))
                                                       : v.get<long long>();
        if (score < scale.min || score > scale.max) {
            throw ResponseError(ResponseErrorKind::OutOfRange, "'" + key + "' = " + std::to_string(score) +
                                                                   " outside [" + std::to_string(scale.min) + ", " +
                                                                   std::to_string(scale.max) + "]");
        }
        out[d] = static_cast<int>(score);
    }
    return out;
}

double mean_of(std::span<const int> scores) {
    if (scores.empty()) return 0.0;
    long long sum = 0;
    for (int s : scores) sum += s;
    return static_cast<double>(sum) / static_cast<double>(scores.size());
}

namespace {

struct PairInput {
    const Post* parent;
    const Post* child;
};

struct Slot {
    std::optional<PerDimension<int>> scores;
    std::string error;
};

struct BatchResult {
    std::vector<std::vector<Slot>> slots;  // [pair][replication]
    std::size_t requests = 0;
};

BatchResult run_batch(std::span<const PairInput> pairs, ChatBackend* backend, AnnotationCache& cache,
                      const std::string& model_id, const AnnotateOptions& options) {
    options.scale.validate();
    if (options.replications < 1) throw std::invalid_argument("replications must be >= 1");
    if (options.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
    const PromptTemplate& tmpl = options.prompt ? *options.prompt : default_prompt_template();

    const std::size_t reps = static_cast<std::size_t>(options.replications);
    BatchResult result;
    result.slots.assign(pairs.size(), std::vector<Slot>(reps));
    std::vector<std::string> hashes(pairs.size());

    struct Job {
        std::size_t pair;
        int replication;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        hashes[i] = pair_hash(pairs[i].parent->text, pairs[i].child->text);
        for (int r = 0; r < options.replications; ++r) {
            PerDimension<int> scores{};
            bool hit = true;
            for (Dimension d : kAllDimensions) {
                auto s = cache.lookup(hashes[i], model_id, options.scale, d, r);
                if (!s) {
                    hit = false;
                    break;
                }
                scores[index(d)] = *s;
            }
            if (hit) {
                result.slots[i][static_cast<std::size_t>(r)].scores = scores;
            } else {
                jobs.push_back({i, r});
            }
        }
    }
    if (jobs.empty()) return result;

    if (!backend) {
        for (const Job& job : jobs) {
            result.slots[job.pair][static_cast<std::size_t>(job.replication)].error = "not cached and no backend";
        }
        return result;
    }

    std::vector<std::optional<PromptDocument>> prompts(pairs.size());
    for (const Job& job : jobs) {
        if (!prompts[job.pair]) {
            prompts[job.pair] = build_prompt(pairs[job.pair].parent->text, pairs[job.pair].child->text,
                                             kAllDimensions, options.scale, tmpl);
        }
    }

    const std::int64_t stamp = backend->deterministic() ? 0 : static_cast<std::int64_t>(std::time(nullptr));
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> requests{0};

    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            const Job& job = jobs[j];
            Slot& slot = result.slots[job.pair][static_cast<std::size_t>(job.replication)];
            AnnotationRequest request{*prompts[job.pair], pairs[job.pair].parent->text, pairs[job.pair].child->text,
                                      job.replication};
            for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
                ++requests;
                try {
                    auto parsed = parse_annotation_json(backend->complete(request), kAllDimensions, options.scale);
                    PerDimension<int> scores{};
                    std::vector<CacheEntry> entries;
                    for (Dimension d : kAllDimensions) {
                        scores[index(d)] = parsed.at(d);
                        entries.push_back({hashes[job.pair], model_id, options.scale, d, job.replication,
                                           parsed.at(d), stamp});
                    }
                    cache.append(entries);
                    slot.scores = scores;
                    slot.error.clear();
                    break;
                } catch (const BackendError& e) {
                    slot.error = e.what();
                } catch (const ResponseError& e) {
                    slot.error = std::string(to_string(e.kind())) + ": " + e.what();
                }
            }
        }
    };

    const std::size_t n_threads =
        std::min<std::size_t>(jobs.size(), static_cast<std::size_t>(std::max(1, options.concurrency)));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    result.requests = requests.load();
    return result;
}

// Builds the per-dimension records of one pair, or returns the first error.
std::optional<PerDimension<AnnotationRecord>> assemble(const std::string& child_id, const std::vector<Slot>& slots,
                                                       std::string& error) {
    for (std::size_t r = 0; r < slots.size(); ++r) {
        if (!slots[r].scores) {
            error = "replication " + std::to_string(r) + ": " + slots[r].error;
            return std::nullopt;
        }
    }
    PerDimension<AnnotationRecord> out;
    for (Dimension d : kAllDimensions) {
        AnnotationRecord& rec = out[index(d)];
        rec.pair_id = child_id;
        rec.dimension = d;
        for (const Slot& s : slots) rec.raw_scores.push_back((*s.scores)[index(d)]);
        rec.mean = mean_of(rec.raw_scores);
    }
    return out;
}

}  // namespace

PerDimension<AnnotationRecord> annotate_pair(const Post& parent, const Post& child, ChatBackend& backend,
                                             AnnotationCache& cache, const AnnotateOptions& options) {
    const PairInput pair{&parent, &child};
    BatchResult batch = run_batch({&pair, 1}, &backend, cache, backend.model_id(), options);
    std::string error;
    auto records = assemble(child.post_id, batch.slots.front(), error);
    if (!records) throw AnnotationFailed("pair " + child.post_id + ": " + error);
    return std::move(*records);
}

CorpusAnnotation annotate_corpus(const Corpus& corpus, ChatBackend* backend, AnnotationCache& cache,
                                 const std::string& model_id, const AnnotateOptions& options) {
    std::vector<PairInput> pairs;
    for (const auto& [did, tree] : corpus.discussions) {
        for (const std::string& id : tree.chronological) {
            auto p = tree.parent.find(id);
            if (p == tree.parent.end()) continue;
            pairs.push_back({&corpus.post(p->second), &corpus.post(id)});
        }
    }
    BatchResult batch = run_batch(pairs, backend, cache, model_id, options);

    CorpusAnnotation out;
    out.requests = batch.requests;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::string error;
        auto records = assemble(pairs[i].child->post_id, batch.slots[i], error);
        if (!records) {
            out.failures.push_back(pairs[i].child->post_id + ": " + error);
            continue;
        }
        for (auto& rec : *records) out.records.push_back(std::move(rec));
    }
    return out;
}

PostMetrics post_metrics(std::span<const AnnotationRecord> records) {
    std::map<std::string, std::pair<PerDimension<double>, int>> acc;
    for (const AnnotationRecord& r : records) {
        auto& [values, mask] = acc[r.pair_id];
        values[index(r.dimension)] = r.mean;
        mask |= 1 << index(r.dimension);
    }
    PostMetrics out;
    for (const auto& [id, entry] : acc) {
        if (entry.second == (1 << kNumDimensions) - 1) out.emplace(id, entry.first);
    }
    return out;
}

}  // namespace convgeom
