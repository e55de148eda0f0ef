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

#include "convgeom/cache.hpp"

#include <fstream>
#include <stdexcept>

#include "convgeom/hash.hpp"
#include "json.hpp"

namespace convgeom {

using nlohmann::ordered_json;

std::string CacheEntry::to_json_line() const {
    ordered_json j;
    j["pair_hash"] = pair_hash;
    j["model_id"] = model_id;
    j["scale_min"] = scale.min;
    j["scale_max"] = scale.max;
    j["dimension"] = std::string(name(dimension));
    j["replication"] = replication;
    j["score"] = score;
    j["timestamp"] = timestamp;
    return j.dump();
}

CacheEntry CacheEntry::from_json_line(const std::string& line) {
    const auto j = ordered_json::parse(line);
    CacheEntry e;
    e.pair_hash = j.at("pair_hash").get<std::string>();
    e.model_id = j.at("model_id").get<std::string>();
    e.scale.min = j.at("scale_min").get<int>();
    e.scale.max = j.at("scale_max").get<int>();
    auto dim = parse_dimension(j.at("dimension").get<std::string>());
    if (!dim) throw std::runtime_error("cache: unknown dimension " + j.at("dimension").dump());
    e.dimension = *dim;
    e.replication = j.at("replication").get<int>();
    e.score = j.at("score").get<int>();
    e.timestamp = j.value("timestamp", std::int64_t{0});
    return e;
}

std::string pair_hash(std::string_view parent_text, std::string_view child_text) {
    return sha256_fields_hex({"convgeom.pair.v1", parent_text, child_text});
}

AnnotationCache::AnnotationCache(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    const std::string data = read_file(path_.string());
    std::size_t pos = 0;
    std::size_t n = 0;
    while (pos < data.size()) {
        const std::size_t end = data.find('\n', pos);
        const bool last = end == std::string::npos;
        const std::string line = data.substr(pos, last ? std::string::npos : end - pos);
        ++n;
        if (!line.empty()) {
            try {
                CacheEntry e = CacheEntry::from_json_line(line);
                index_.try_emplace(key_of(e.pair_hash, e.model_id, e.scale, e.dimension, e.replication), std::move(e));
            } catch (const std::exception& ex) {
                if (!last) {
                    throw std::runtime_error("cache " + path_.string() + " line " + std::to_string(n) + ": " +
                                             ex.what());
                }
                // Torn final line from an interrupted append: drop it so later appends start clean.
                std::filesystem::resize_file(path_, pos);
                break;
            }
            if (last) {
                std::ofstream(path_, std::ios::app) << '\n';
            }
        }
        if (last) break;
        pos = end + 1;
    }
}

AnnotationCache::Key AnnotationCache::key_of(const std::string& pair_hash, const std::string& model_id,
                                             const AnnotationScale& scale, Dimension dim, int replication) {
    return {pair_hash, model_id, scale.min, scale.max, index(dim), replication};
}

std::optional<int> AnnotationCache::lookup(const std::string& pair_hash, const std::string& model_id,
                                           const AnnotationScale& scale, Dimension dim, int replication) const {
    std::lock_guard lock(mutex_);
    auto it = index_.find(key_of(pair_hash, model_id, scale, dim, replication));
    if (it == index_.end()) return std::nullopt;
    return it->second.score;
}

void AnnotationCache::append(const std::vector<CacheEntry>& entries) {
    std::lock_guard lock(mutex_);
    std::string buffer;
    for (const CacheEntry& e : entries) {
        auto [it, inserted] = index_.try_emplace(key_of(e.pair_hash, e.model_id, e.scale, e.dimension, e.replication), e);
        if (inserted) buffer += e.to_json_line() + '\n';
    }
    if (path_.empty() || buffer.empty()) return;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to cache " + path_.string());
    out << buffer;
    out.flush();
}

std::vector<CacheEntry> AnnotationCache::entries() const {
    std::lock_guard lock(mutex_);
    std::vector<CacheEntry> out;
    out.reserve(index_.size());
    for (const auto& [_, e] : index_) out.push_back(e);
    return out;
}

std::size_t AnnotationCache::size() const {
    std::lock_guard lock(mutex_);
    return index_.size();
}

}  // namespace convgeom
