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

#include "convgeom/corpus.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace convgeom {

using nlohmann::ordered_json;

const Post& Corpus::post(const std::string& id) const {
    auto it = posts.find(id);
    if (it == posts.end()) throw std::out_of_range("unknown post_id '" + id + "'");
    return it->second;
}

std::string_view to_string(CorpusErrorKind kind) {
    switch (kind) {
        case CorpusErrorKind::MalformedRecord: return "MalformedRecord";
        case CorpusErrorKind::DuplicateId: return "DuplicateId";
        case CorpusErrorKind::OrphanPost: return "OrphanPost";
        case CorpusErrorKind::MultipleRoots: return "MultipleRoots";
        case CorpusErrorKind::CycleDetected: return "CycleDetected";
        case CorpusErrorKind::MissingTimestamp: return "MissingTimestamp";
    }
    return "Unknown";
}

std::string Diagnostic::format() const {
    std::ostringstream ss;
    if (line > 0) ss << "line " << line << ": ";
    ss << to_string(kind);
    if (!discussion_id.empty()) ss << " [discussion " << discussion_id << "]";
    if (!post_id.empty()) ss << " [post " << post_id << "]";
    ss << ": " << message;
    return ss.str();
}

namespace {

bool chrono_less(const Post& a, const Post& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.post_id < b.post_id;
}

// Appends every structural violation of one discussion to `diags`; returns
// the tree only when there are none.
std::optional<DiscussionTree> check_tree(std::span<const Post> posts, std::vector<Diagnostic>& diags) {
    const std::size_t before = diags.size();
    if (posts.empty()) return std::nullopt;
    const std::string& did = posts.front().discussion_id;

    std::unordered_map<std::string, const Post*> by_id;
    for (const Post& p : posts) {
        if (p.discussion_id != did) {
            throw std::invalid_argument("build_tree: posts span several discussions");
        }
        if (!by_id.emplace(p.post_id, &p).second) {
            diags.push_back({CorpusErrorKind::DuplicateId, 0, did, p.post_id, "post_id appears more than once"});
        }
    }

    std::vector<const Post*> roots;
    for (const Post& p : posts) {
        if (!p.parent_id) {
            roots.push_back(&p);
        } else if (!by_id.count(*p.parent_id)) {
            diags.push_back({CorpusErrorKind::OrphanPost, 0, did, p.post_id,
                             "parent_id '" + *p.parent_id + "' not found in this discussion"});
        }
    }
    if (roots.size() > 1) {
        std::string ids;
        for (const Post* r : roots) ids += (ids.empty() ? "" : ", ") + r->post_id;
        diags.push_back({CorpusErrorKind::MultipleRoots, 0, did, "",
                         std::to_string(roots.size()) + " posts without parent_id: " + ids});
    }
    if (diags.size() != before) return std::nullopt;

    if (roots.empty()) {
        diags.push_back({CorpusErrorKind::CycleDetected, 0, did, "",
                         "no root post; parent links form a cycle"});
        return std::nullopt;
    }

    DiscussionTree tree;
    tree.discussion_id = did;
    tree.root_id = roots.front()->post_id;

    std::vector<const Post*> ordered;
    ordered.reserve(posts.size());
    for (const Post& p : posts) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(), [](const Post* a, const Post* b) { return chrono_less(*a, *b); });

    for (const Post* p : ordered) {
        tree.children[p->post_id];
        tree.chronological.push_back(p->post_id);
    }
    for (const Post* p : ordered) {
        if (p->parent_id) {
            tree.children[*p->parent_id].push_back(p->post_id);
            tree.parent[p->post_id] = *p->parent_id;
        }
    }

    std::deque<std::string> queue{tree.root_id};
    tree.depth[tree.root_id] = 0;
    while (!queue.empty()) {
        std::string id = std::move(queue.front());
        queue.pop_front();
        const int d = tree.depth[id];
        for (const std::string& c : tree.children[id]) {
            if (tree.depth.count(c)) continue;
            tree.depth[c] = d + 1;
            tree.branch_root_of[c] = d == 0 ? c : tree.branch_root_of[id];
            queue.push_back(c);
        }
    }

    if (tree.depth.size() != posts.size()) {
        std::string ids;
        for (const Post* p : ordered) {
            if (!tree.depth.count(p->post_id)) ids += (ids.empty() ? "" : ", ") + p->post_id;
        }
        diags.push_back({CorpusErrorKind::CycleDetected, 0, did, "",
                         "posts unreachable from root (cycle): " + ids});
        return std::nullopt;
    }
    return tree;
}

struct RawLine {
    std::size_t line;
    Post post;
};

std::optional<Post> decode_line(const std::string& text, std::size_t line_no, std::vector<Diagnostic>& diags,
                                std::string& discussion_hint) {
    auto malformed = [&](std::string msg, std::string pid = {}) {
        diags.push_back({CorpusErrorKind::MalformedRecord, line_no, discussion_hint, std::move(pid), std::move(msg)});
        return std::nullopt;
    };

    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        return malformed(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) return malformed("record is not a JSON object");

    if (j.contains("discussion_id") && j["discussion_id"].is_string()) {
        discussion_hint = j["discussion_id"].get<std::string>();
    }
    static const std::set<std::string> kAllowed = {"post_id", "discussion_id", "parent_id", "author", "timestamp", "text"};
    for (const auto& [key, _] : j.items()) {
        if (!kAllowed.count(key)) return malformed("unexpected field '" + key + "'");
    }
    for (const char* key : {"post_id", "discussion_id", "text"}) {
        if (!j.contains(key) || !j[key].is_string()) return malformed(std::string("missing or non-string field '") + key + "'");
    }

    Post p;
    p.post_id = j["post_id"].get<std::string>();
    p.discussion_id = j["discussion_id"].get<std::string>();
    p.text = j["text"].get<std::string>();
    if (p.post_id.empty()) return malformed("empty post_id");
    for (const char* key : {"parent_id", "author"}) {
        if (!j.contains(key) || j[key].is_null()) continue;
        if (!j[key].is_string()) return malformed(std::string("field '") + key + "' must be a string or null", p.post_id);
        (std::string(key) == "parent_id" ? p.parent_id : p.author) = j[key].get<std::string>();
    }
    if (!j.contains("timestamp") || j["timestamp"].is_null()) {
        diags.push_back({CorpusErrorKind::MissingTimestamp, line_no, p.discussion_id, p.post_id, "timestamp absent"});
        return std::nullopt;
    }
    const auto& ts = j["timestamp"];
    if (!ts.is_number_integer()) return malformed("timestamp must be an integer", p.post_id);
    if (ts.is_number_unsigned()) {
        p.timestamp = static_cast<std::int64_t>(ts.get<std::uint64_t>());
    } else {
        p.timestamp = ts.get<std::int64_t>();
    }
    if (p.timestamp < 0) {
        diags.push_back({CorpusErrorKind::MissingTimestamp, line_no, p.discussion_id, p.post_id, "timestamp is negative"});
        return std::nullopt;
    }
    return p;
}

ParseResult parse_impl(std::istream& source) {
    ParseResult result;
    auto& diags = result.diagnostics;

    std::vector<RawLine> lines;
    std::set<std::string> bad_discussions;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(source, text)) {
        ++line_no;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.find_first_not_of(" \t") == std::string::npos) continue;
        std::string hint;
        auto post = decode_line(text, line_no, diags, hint);
        if (post) {
            lines.push_back({line_no, std::move(*post)});
        } else if (!hint.empty()) {
            bad_discussions.insert(hint);
        }
    }

    std::unordered_map<std::string, const RawLine*> first_seen;
    for (const RawLine& r : lines) {
        auto [it, inserted] = first_seen.emplace(r.post.post_id, &r);
        if (!inserted) {
            diags.push_back({CorpusErrorKind::DuplicateId, r.line, r.post.discussion_id, r.post.post_id,
                             "post_id already used on line " + std::to_string(it->second->line)});
            bad_discussions.insert(r.post.discussion_id);
            bad_discussions.insert(it->second->post.discussion_id);
        }
    }

    std::map<std::string, std::vector<Post>> grouped;
    for (const RawLine& r : lines) grouped[r.post.discussion_id].push_back(r.post);

    for (auto& [did, posts] : grouped) {
        if (bad_discussions.count(did)) continue;
        auto tree = check_tree(posts, diags);
        if (!tree) continue;
        for (Post& p : posts) result.corpus.posts.emplace(p.post_id, std::move(p));
        result.corpus.discussions.emplace(did, std::move(*tree));
    }

    std::stable_sort(diags.begin(), diags.end(), [](const Diagnostic& a, const Diagnostic& b) {
        if ((a.line == 0) != (b.line == 0)) return a.line != 0;
        return a.line < b.line;
    });
    return result;
}

}  // namespace

ParseResult validate_corpus(std::istream& source) { return parse_impl(source); }

ParseResult parse_corpus(std::istream& source, const ParseOptions& options) {
    ParseResult result = parse_impl(source);
    if (!options.lenient && !result.diagnostics.empty()) {
        throw CorpusError(result.diagnostics.front());
    }
    return result;
}

DiscussionTree build_tree(std::span<const Post> posts) {
    if (posts.empty()) throw std::invalid_argument("build_tree: no posts");
    std::vector<Diagnostic> diags;
    auto tree = check_tree(posts, diags);
    if (!tree) throw CorpusError(diags.front());
    return std::move(*tree);
}

std::string post_to_json_line(const Post& post) {
    ordered_json j;
    j["post_id"] = post.post_id;
    j["discussion_id"] = post.discussion_id;
    j["parent_id"] = post.parent_id ? ordered_json(*post.parent_id) : ordered_json(nullptr);
    j["author"] = post.author ? ordered_json(*post.author) : ordered_json(nullptr);
    j["timestamp"] = post.timestamp;
    j["text"] = post.text;
    return j.dump(-1, ' ', false, ordered_json::error_handler_t::strict);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& [did, tree] : corpus.discussions) {
        for (const std::string& id : tree.chronological) {
            out << post_to_json_line(corpus.post(id)) << '\n';
        }
    }
}

Corpus make_corpus(std::vector<Post> posts) {
    std::map<std::string, std::vector<Post>> grouped;
    std::unordered_set<std::string> ids;
    for (Post& p : posts) {
        if (!ids.insert(p.post_id).second) {
            throw CorpusError({CorpusErrorKind::DuplicateId, 0, p.discussion_id, p.post_id, "post_id appears more than once"});
        }
        grouped[p.discussion_id].push_back(std::move(p));
    }
    Corpus corpus;
    for (auto& [did, group] : grouped) {
        DiscussionTree tree = build_tree(group);
        for (Post& p : group) corpus.posts.emplace(p.post_id, std::move(p));
        corpus.discussions.emplace(did, std::move(tree));
    }
    return corpus;
}

}  // namespace convgeom
