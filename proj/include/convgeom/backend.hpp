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

#ifndef CONVGEOM_BACKEND_HPP
#define CONVGEOM_BACKEND_HPP

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "convgeom/types.hpp"

namespace convgeom {

/// System message plus the delimited parent/child user content.
struct PromptDocument {
    std::string system;
    std::string user;

    bool operator==(const PromptDocument&) const = default;
};

/// One replication of one parent-child pair. Only `prompt` is ever sent to a
/// remote service; the raw texts are there for offline test doubles.
struct AnnotationRequest {
    PromptDocument prompt;
    std::string parent_text;
    std::string child_text;
    int replication = 0;
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A chat-style model endpoint. Implementations must be safe to call from
/// several threads at once.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    /// Returns the assistant text. Throws BackendError on transport failure.
    virtual std::string complete(const AnnotationRequest& request) = 0;
    virtual std::string model_id() const = 0;
    /// True when identical requests always produce identical text.
    virtual bool deterministic() const { return false; }
};

struct BackendConfig {
    std::string endpoint_url;
    std::string api_key_env;  // name of the environment variable holding the token
    std::string model_id;
    std::string effort = "high";
    std::string verbosity = "low";
    int timeout_seconds = 120;
    int max_retries = 3;
    int max_concurrency = 4;

    void validate() const;
};

/// Maps (parent, child, dimension, replication, seed) uniformly onto the
/// scale through a stable hash.
int mock_annotate(std::string_view parent_text, std::string_view child_text, Dimension dim, int replication,
                  std::uint64_t seed, const AnnotationScale& scale);

/// Offline backend answering with well-formed JSON built from mock_annotate.
class MockBackend : public ChatBackend {
public:
    MockBackend(std::uint64_t seed, AnnotationScale scale, std::string model_id = "mock")
        : seed_(seed), scale_(scale), model_id_(std::move(model_id)) {}

    std::string complete(const AnnotationRequest& request) override;
    std::string model_id() const override { return model_id_; }
    bool deterministic() const override { return true; }

    std::size_t calls() const { return calls_.load(); }

private:
    std::uint64_t seed_;
    AnnotationScale scale_;
    std::string model_id_;
    std::atomic<std::size_t> calls_{0};
};

/// JSON body of one chat request: model, system and user messages, effort
/// and verbosity.
std::string build_request_body(const BackendConfig& config, const PromptDocument& prompt);

/// Pulls the assistant text out of a chat-completions style response.
/// Throws BackendError when no text is present.
std::string extract_assistant_text(const std::string& response_body);

/// Posts requests over HTTP(S). The bearer token is read from the configured
/// environment variable on every call and never logged.
class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(BackendConfig config);

    std::string complete(const AnnotationRequest& request) override;
    std::string model_id() const override { return config_.model_id; }

private:
    BackendConfig config_;
    std::string origin_;  // scheme://host[:port]
    std::string path_;
};

}  // namespace convgeom

#endif  // CONVGEOM_BACKEND_HPP
