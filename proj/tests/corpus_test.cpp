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

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "testing.hpp"

using namespace convgeom;
using convgeom::testing::jsonl;
using convgeom::testing::random_posts;

namespace {

ParseResult parse_text(const std::string& text, bool lenient = false) {
    std::istringstream in(text);
    return parse_corpus(in, {lenient});
}

CorpusErrorKind strict_error(const std::string& text) {
    try {
        parse_text(text);
    } catch (const CorpusError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return CorpusErrorKind::MalformedRecord;
}

const char* kSmall =
    R"({"post_id":"a","discussion_id":"d","parent_id":null,"author":"x","timestamp":100,"text":"root"})"
    "\n"
    R"({"post_id":"b","discussion_id":"d","parent_id":"a","author":null,"timestamp":200,"text":"reply"})"
    "\n"
    R"({"post_id":"c","discussion_id":"d","parent_id":"b","author":"y","timestamp":150,"text":"deeper"})"
    "\n"
    R"({"post_id":"e","discussion_id":"d","parent_id":"a","author":"y","timestamp":150,"text":"second"})"
    "\n";

}  // namespace

TEST(corpus, parses_small_tree) {
    const ParseResult r = parse_text(kSmall);
    ASSERT_TRUE(r.diagnostics.empty());
    ASSERT_EQ(r.corpus.discussions.size(), 1u);
    const DiscussionTree& t = r.corpus.discussions.at("d");
    EXPECT_EQ(t.root_id, "a");
    EXPECT_EQ(t.node_count(), 4u);
    EXPECT_EQ(t.edge_count(), 3u);
    EXPECT_EQ(t.depth.at("a"), 0);
    EXPECT_EQ(t.depth.at("b"), 1);
    EXPECT_EQ(t.depth.at("c"), 2);
    EXPECT_EQ(t.branch_root_of.at("c"), "b");
    EXPECT_EQ(t.branch_root_of.at("e"), "e");
    EXPECT_EQ(t.chronological, (std::vector<std::string>{"a", "c", "e", "b"}));
    EXPECT_EQ(t.children.at("a"), (std::vector<std::string>{"e", "b"}));
    EXPECT_FALSE(r.corpus.post("b").author.has_value());
    EXPECT_EQ(*r.corpus.post("c").author, "y");
}

TEST(corpus, strict_errors) {
    const std::string root = R"({"post_id":"a","discussion_id":"d","parent_id":null,"author":null,"timestamp":1,"text":"r"})";
    auto line = [](const std::string& id, const std::string& parent, const std::string& ts = "2") {
        return R"({"post_id":")" + id + R"(","discussion_id":"d","parent_id":)" + parent +
               R"(,"author":null,"timestamp":)" + ts + R"(,"text":"t"})";
    };
    EXPECT_EQ(strict_error("{not json\n"), CorpusErrorKind::MalformedRecord);
    EXPECT_EQ(strict_error("[1,2]\n"), CorpusErrorKind::MalformedRecord);
    EXPECT_EQ(strict_error(R"({"post_id":"a","discussion_id":"d","parent_id":null,"author":null,"timestamp":1,"text":"r","extra":1})"
                           "\n"),
              CorpusErrorKind::MalformedRecord);
    EXPECT_EQ(strict_error(R"({"post_id":"a","discussion_id":"d","parent_id":null,"author":null,"timestamp":1})"
                           "\n"),
              CorpusErrorKind::MalformedRecord);
    EXPECT_EQ(strict_error(root + "\n" + line("b", "\"a\"", "1.5") + "\n"), CorpusErrorKind::MalformedRecord);
    EXPECT_EQ(strict_error(root + "\n" + line("b", "\"a\"", "null") + "\n"), CorpusErrorKind::MissingTimestamp);
    EXPECT_EQ(strict_error(root + "\n" + root + "\n"), CorpusErrorKind::DuplicateId);
    EXPECT_EQ(strict_error(root + "\n" + line("b", "\"zz\"") + "\n"), CorpusErrorKind::OrphanPost);
    EXPECT_EQ(strict_error(root + "\n" + line("b", "null") + "\n"), CorpusErrorKind::MultipleRoots);
    EXPECT_EQ(strict_error(root + "\n" + line("b", "\"c\"") + "\n" + line("c", "\"b\"") + "\n"),
              CorpusErrorKind::CycleDetected);
    EXPECT_EQ(strict_error(line("b", "\"c\"") + "\n" + line("c", "\"b\"") + "\n"), CorpusErrorKind::CycleDetected);
}

TEST(corpus, validate_reports_every_violation_and_keeps_good_discussions) {
    std::string text = kSmall;
    text += R"({"post_id":"x1","discussion_id":"bad","parent_id":null,"author":null,"timestamp":1,"text":"r"})" "\n";
    text += R"({"post_id":"x2","discussion_id":"bad","parent_id":"nope","author":null,"timestamp":2,"text":"t"})" "\n";
    text += "garbage\n";
    text += R"({"post_id":"y1","discussion_id":"bad2","parent_id":null,"author":null,"timestamp":1,"text":"r"})" "\n";
    text += R"({"post_id":"y2","discussion_id":"bad2","parent_id":null,"author":null,"timestamp":1,"text":"r"})" "\n";
    std::istringstream in(text);
    const ParseResult r = validate_corpus(in);
    ASSERT_EQ(r.diagnostics.size(), 3u);
    EXPECT_EQ(r.diagnostics[0].kind, CorpusErrorKind::MalformedRecord);
    EXPECT_EQ(r.diagnostics[0].line, 7u);
    EXPECT_EQ(r.diagnostics[0].format().rfind("line 7: MalformedRecord", 0), 0u);
    EXPECT_EQ(r.diagnostics[1].kind, CorpusErrorKind::OrphanPost);
    EXPECT_EQ(r.diagnostics[2].kind, CorpusErrorKind::MultipleRoots);
    EXPECT_EQ(r.corpus.discussions.size(), 1u);
    EXPECT_TRUE(r.corpus.discussions.count("d"));

    const ParseResult lenient = parse_text(text, true);
    EXPECT_EQ(lenient.corpus, r.corpus);
    EXPECT_THROW(parse_text(text), CorpusError);
}

TEST(corpus, blank_lines_and_crlf_are_accepted) {
    std::string text = "\n";
    for (char c : std::string(kSmall)) {
        if (c == '\n') text += "\r\n\n";
        else text += c;
    }
    EXPECT_EQ(parse_text(text).corpus, parse_text(kSmall).corpus);
}

TEST(corpus, round_trip) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto posts = random_posts(rng, 5, 40, trial % 2 == 1);
        const ParseResult a = parse_text(jsonl(posts));
        std::ostringstream out;
        write_corpus(out, a.corpus);
        const ParseResult b = parse_text(out.str());
        EXPECT_EQ(a.corpus, b.corpus);
        std::ostringstream again;
        write_corpus(again, b.corpus);
        EXPECT_EQ(out.str(), again.str());
        EXPECT_EQ(make_corpus(posts), a.corpus);
    }
}

TEST(corpus, input_order_does_not_matter) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto posts = random_posts(rng, 4, 30, true);
        const Corpus a = make_corpus(posts);
        std::shuffle(posts.begin(), posts.end(), rng);
        EXPECT_EQ(make_corpus(posts), a);
    }
}

TEST(corpus, tree_invariants_and_branch_root_oracle) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 200)(rng);
        const auto posts = convgeom::testing::random_discussion(rng, "t", n, trial % 3 == 0);
        const DiscussionTree tree = build_tree(posts);
        ASSERT_EQ(tree.node_count(), static_cast<std::size_t>(n));
        ASSERT_EQ(tree.edge_count(), static_cast<std::size_t>(n - 1));
        std::size_t roots = 0;
        for (const Post& p : posts) {
            if (!p.parent_id) {
                ++roots;
                continue;
            }
            // Walk to the root by parent links; the node just below it is the branch root.
            std::string cur = p.post_id;
            std::string below_root = cur;
            int steps = 0;
            while (tree.parent.count(cur)) {
                below_root = cur;
                cur = tree.parent.at(cur);
                ASSERT_LE(++steps, n) << "cycle";
            }
            EXPECT_EQ(cur, tree.root_id);
            EXPECT_EQ(tree.depth.at(p.post_id), steps);
            EXPECT_EQ(tree.branch_root_of.at(p.post_id), below_root);
        }
        EXPECT_EQ(roots, 1u);

        // Chronological order and child order are the (timestamp, post_id) total order.
        auto key = [&](const std::string& id) {
            const auto it = std::find_if(posts.begin(), posts.end(), [&](const Post& p) { return p.post_id == id; });
            return std::pair{it->timestamp, it->post_id};
        };
        for (std::size_t i = 1; i < tree.chronological.size(); ++i) {
            EXPECT_LT(key(tree.chronological[i - 1]), key(tree.chronological[i]));
        }
        for (const auto& [id, kids] : tree.children) {
            for (std::size_t i = 1; i < kids.size(); ++i) EXPECT_LT(key(kids[i - 1]), key(kids[i]));
        }
    }
}

TEST(corpus, make_corpus_rejects_duplicates) {
    Post a{"a", "d", std::nullopt, std::nullopt, 1, "x"};
    EXPECT_THROW(make_corpus({a, a}), CorpusError);
    Post b{"a", "e", std::nullopt, std::nullopt, 1, "x"};
    EXPECT_THROW(make_corpus({a, b}), CorpusError);
}
