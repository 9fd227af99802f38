#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace shotforge {

/// Hex SHA-256 of model name and prompt.
std::string prompt_digest(std::string_view prompt, std::string_view model_name);

struct CacheEntry {
    std::string digest;
    std::string model;
    std::string response;
    double estimate = 0.0;
    bool fallback = false;
    std::string timestamp;  ///< ISO-8601 UTC

    nlohmann::json to_json() const;
    static CacheEntry from_json(const nlohmann::json& j);
};

std::string utc_timestamp();

struct CacheStats {
    std::size_t entries = 0;
    std::size_t fallbacks = 0;
    std::size_t skipped_lines = 0;
};

/// Response cache keyed by prompt digest, optionally persisted as an
/// append-only JSON-lines file. Lookups take a shared lock; inserts are
/// serialised and appended to the file immediately. A torn final line left
/// by an interrupted write is skipped on load.
class ResponseCache {
public:
    /// In-memory only.
    ResponseCache() = default;
    /// Loads `path` if it exists; new entries are appended to it.
    explicit ResponseCache(std::filesystem::path path);

    std::optional<CacheEntry> lookup(const std::string& digest) const;
    /// First write for a digest wins; later inserts for it are ignored.
    void insert(CacheEntry entry);

    std::size_t size() const;
    CacheStats stats() const;
    const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

    /// Rewrites a cache file, dropping every entry (or only fallback entries).
    /// Returns the number of entries removed.
    static std::size_t purge(const std::filesystem::path& path, bool fallback_only);

private:
    std::optional<std::filesystem::path> path_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, CacheEntry> entries_;
    std::ofstream out_;
    std::size_t skipped_lines_ = 0;
};

}  // namespace shotforge
