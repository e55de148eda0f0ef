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

#include "convgeom/backend.hpp"

#include <cstdlib>

#include "convgeom/hash.hpp"
#include "httplib.h"
#include "json.hpp"

namespace convgeom {

using nlohmann::ordered_json;

void BackendConfig::validate() const {
    if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
    if (max_concurrency < 1) throw std::invalid_argument("max_concurrency must be >= 1");
    if (timeout_seconds < 1) throw std::invalid_argument("timeout must be >= 1 s");
}

int mock_annotate(std::string_view parent_text, std::string_view child_text, Dimension dim, int replication,
                  std::uint64_t seed, const AnnotationScale& scale) {
    const std::string rep = std::to_string(replication);
    const std::string sd = std::to_string(seed);
    const std::uint64_t h = stable_hash64({"convgeom.mock.v1", parent_text, child_text, name(dim), rep, sd});
    return scale.min + static_cast<int>(h % static_cast<std::uint64_t>(scale.size()));
}

std::string MockBackend::complete(const AnnotationRequest& request) {
    ++calls_;
    ordered_json j = ordered_json::object();
    for (Dimension d : kAllDimensions) {
        j[std::string(name(d))] =
            mock_annotate(request.parent_text, request.child_text, d, request.replication, seed_, scale_);
    }
    return j.dump();
}

std::string build_request_body(const BackendConfig& config, const PromptDocument& prompt) {
    ordered_json body;
    body["model"] = config.model_id;
    body["messages"] = ordered_json::array({
        {{"role", "system"}, {"content", prompt.system}},
        {{"role", "user"}, {"content", prompt.user}},
    });
    body["reasoning_effort"] = config.effort;
    body["verbosity"] = config.verbosity;
    return body.dump();
}

std::string extract_assistant_text(const std::string& response_body) {
    ordered_json j;
    try {
        j = ordered_json::parse(response_body);
    } catch (const ordered_json::parse_error& e) {
        throw BackendError(std::string("response is not JSON: ") + e.what());
    }
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
        const auto& msg = j["choices"][0];
        if (msg.contains("message") && msg["message"].contains("content") && msg["message"]["content"].is_string()) {
            return msg["message"]["content"].get<std::string>();
        }
    }
    if (j.contains("output_text") && j["output_text"].is_string()) return j["output_text"].get<std::string>();
    throw BackendError("response carries no assistant text");
}

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
    const std::string& url = config_.endpoint_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("backend URL needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpBackend::complete(const AnnotationRequest& request) {
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* token = std::getenv(config_.api_key_env.c_str());
        if (!token || !*token) throw BackendError("environment variable " + config_.api_key_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    auto res = client.Post(path_, headers, build_request_body(config_, request.prompt), "application/json");
    if (!res) throw BackendError("request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw BackendError("backend returned HTTP " + std::to_string(res->status));
    return extract_assistant_text(res->body);
}

}  // namespace convgeom
