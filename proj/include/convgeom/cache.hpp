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

#ifndef CONVGEOM_CACHE_HPP
#define CONVGEOM_CACHE_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "convgeom/types.hpp"

namespace convgeom {

/// One cached replication score, stored as one JSON line.
struct CacheEntry {
    std::string pair_hash;
    std::string model_id;
    AnnotationScale scale;
    Dimension dimension = Dimension::DisagreeVsAgree;
    int replication = 0;
    int score = 0;
    std::int64_t timestamp = 0;

    std::string to_json_line() const;
    static CacheEntry from_json_line(const std::string& line);
};

/// Content hash identifying a parent-child pair.
std::string pair_hash(std::string_view parent_text, std::string_view child_text);

/// Append-only annotation cache backed by a line-delimited JSON file. An
/// empty path keeps the cache in memory only. Appends are serialised by an
/// internal mutex. For a repeated key the first entry wins.
class AnnotationCache {
public:
    AnnotationCache() = default;
    explicit AnnotationCache(std::filesystem::path path);

    AnnotationCache(const AnnotationCache&) = delete;
    AnnotationCache& operator=(const AnnotationCache&) = delete;

    std::optional<int> lookup(const std::string& pair_hash, const std::string& model_id, const AnnotationScale& scale,
                              Dimension dim, int replication) const;

    void append(const std::vector<CacheEntry>& entries);

    /// Unique entries in key order.
    std::vector<CacheEntry> entries() const;
    std::size_t size() const;
    const std::filesystem::path& path() const { return path_; }

private:
    using Key = std::tuple<std::string, std::string, int, int, std::size_t, int>;
    static Key key_of(const std::string& pair_hash, const std::string& model_id, const AnnotationScale& scale,
                      Dimension dim, int replication);

    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::map<Key, CacheEntry> index_;
};

}  // namespace convgeom

#endif  // CONVGEOM_CACHE_HPP
