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

#ifndef CONVGEOM_CORPUS_HPP
#define CONVGEOM_CORPUS_HPP

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace convgeom {

/// One forum message.
struct Post {
    std::string post_id;
    std::string discussion_id;
    std::optional<std::string> parent_id;  // absent for the discussion root
    std::optional<std::string> author;
    std::int64_t timestamp = 0;  // seconds since the Unix epoch
    std::string text;

    bool operator==(const Post&) const = default;
};

/// Rooted reply tree of one discussion. Every node has an entry in
/// `children` and `depth`; `branch_root_of` covers nodes with depth >= 1.
struct DiscussionTree {
    std::string discussion_id;
    std::string root_id;
    std::map<std::string, std::vector<std::string>> children;  // sorted by (timestamp, post_id)
    std::map<std::string, std::string> parent;
    std::map<std::string, int> depth;
    std::map<std::string, std::string> branch_root_of;
    std::vector<std::string> chronological;  // all nodes by (timestamp, post_id)

    std::size_t node_count() const { return depth.size(); }
    std::size_t edge_count() const { return parent.size(); }

    bool operator==(const DiscussionTree&) const = default;
};

/// Immutable once built; safe to share across readers.
struct Corpus {
    std::map<std::string, DiscussionTree> discussions;
    std::map<std::string, Post> posts;

    const Post& post(const std::string& id) const;
    bool operator==(const Corpus&) const = default;
};

enum class CorpusErrorKind {
    MalformedRecord,
    DuplicateId,
    OrphanPost,
    MultipleRoots,
    CycleDetected,
    MissingTimestamp,
};

std::string_view to_string(CorpusErrorKind kind);

struct Diagnostic {
    CorpusErrorKind kind;
    std::size_t line = 0;  // 1-based input line; 0 when not tied to one line
    std::string discussion_id;
    std::string post_id;
    std::string message;

    std::string format() const;
};

class CorpusError : public std::runtime_error {
public:
    explicit CorpusError(Diagnostic d) : std::runtime_error(d.format()), diagnostic_(std::move(d)) {}
    CorpusErrorKind kind() const { return diagnostic_.kind; }
    const Diagnostic& diagnostic() const { return diagnostic_; }

private:
    Diagnostic diagnostic_;
};

struct ParseOptions {
    /// Drop structurally invalid discussions (reported as diagnostics)
    /// instead of failing.
    bool lenient = false;
};

struct ParseResult {
    Corpus corpus;
    std::vector<Diagnostic> diagnostics;  // every violation found, in input order
};

/// Reads the line-delimited JSON interchange format. In strict mode throws
/// CorpusError on the first violation; in lenient mode offending discussions
/// are dropped and reported in `diagnostics`.
ParseResult parse_corpus(std::istream& source, const ParseOptions& options = {});

/// Collects every violation without throwing; offending discussions are
/// dropped from the returned corpus.
ParseResult validate_corpus(std::istream& source);

/// Builds the reply tree of one discussion. Throws CorpusError.
DiscussionTree build_tree(std::span<const Post> posts);

/// Writes the corpus back in the interchange format, ordered by
/// (discussion_id, timestamp, post_id).
void write_corpus(std::ostream& out, const Corpus& corpus);
std::string post_to_json_line(const Post& post);

/// Assembles a corpus from in-memory posts, validating every discussion.
Corpus make_corpus(std::vector<Post> posts);

}  // namespace convgeom

#endif  // CONVGEOM_CORPUS_HPP
