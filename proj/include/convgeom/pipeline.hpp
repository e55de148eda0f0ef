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

#ifndef CONVGEOM_PIPELINE_HPP
#define CONVGEOM_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "convgeom/agreement.hpp"
#include "convgeom/annotator.hpp"
#include "convgeom/geometry.hpp"
#include "convgeom/inference.hpp"

namespace convgeom {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitAnnotation = 3;
inline constexpr int kExitInference = 4;

inline constexpr const char* kToolVersion = "0.1.0";

/// Holds `<dir>/.convgeom.lock` for its lifetime; a second holder fails.
class OutputLock {
public:
    explicit OutputLock(const std::filesystem::path& dir);
    ~OutputLock();
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    std::filesystem::path path_;
};

/// Writes `content` unless the file already holds exactly these bytes.
/// Returns true when the file was (re)written.
bool write_if_changed(const std::filesystem::path& path, const std::string& content);

/// Files produced by a run, relative path -> bytes.
using Bundle = std::map<std::string, std::string>;

/// Regression tables (CSV + text), summary JSON and scatter figures for the
/// given specs, added to `bundle` under tables/ and figures/.
RunAllResult render_regressions(std::span<const FeatureRow> rows, std::span<const ModelSpec> specs,
                                const InferenceOptions& options, bool figures, Bundle& bundle);

/// Writes every bundle entry below `dir` (creating directories).
void write_bundle(const std::filesystem::path& dir, const Bundle& bundle);

struct PipelineConfig {
    std::string corpus_path;
    std::string cache_path;
    std::string output_dir;
    bool lenient = false;
    std::string model_id;
    std::string backend_url;  // recorded in the manifest; never the token
    bool mock = false;
    std::uint64_t seed = 0;
    AnnotateOptions annotate;
    FeatureOptions features;
    InferenceOptions inference;
    ExactMode exact_mode = ExactMode::Pairwise;
};

struct PipelineResult {
    int exit_code = kExitOk;
    std::string failed_stage;
    std::vector<std::string> log;
    std::size_t backend_requests = 0;
    std::size_t tables = 0;
};

/// validate -> annotate (cache first) -> features -> agreement -> regress ->
/// render. Outputs of completed stages are kept when a later stage fails.
/// `backend` may be null for cache-only runs.
PipelineResult run_pipeline(const PipelineConfig& config, ChatBackend* backend);

}  // namespace convgeom

#endif  // CONVGEOM_PIPELINE_HPP
