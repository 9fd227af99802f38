#include "shotforge/cache.hpp"

#include <array>
#include <chrono>
#include <ctime>
#include <memory>
#include <vector>

#include <openssl/evp.h>

#include "shotforge/errors.hpp"

namespace shotforge {

std::string prompt_digest(std::string_view prompt, std::string_view model_name) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                &EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    const char sep = '\n';
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), model_name.data(), model_name.size()) != 1 ||
        EVP_DigestUpdate(ctx.get(), &sep, 1) != 1 ||
        EVP_DigestUpdate(ctx.get(), prompt.data(), prompt.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
        throw Error("sha256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json CacheEntry::to_json() const {
    return {{"digest", digest},     {"model", model},       {"response", response},
            {"estimate", estimate}, {"fallback", fallback}, {"timestamp", timestamp}};
}

CacheEntry CacheEntry::from_json(const nlohmann::json& j) {
    CacheEntry e;
    e.digest = j.at("digest").get<std::string>();
    e.model = j.value("model", "");
    e.response = j.at("response").get<std::string>();
    e.estimate = j.at("estimate").get<double>();
    e.fallback = j.value("fallback", false);
    e.timestamp = j.value("timestamp", "");
    return e;
}

namespace {

std::vector<CacheEntry> read_entries(const std::filesystem::path& path, std::size_t& skipped) {
    std::vector<CacheEntry> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(CacheEntry::from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception&) {
            ++skipped;
        }
    }
    return out;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(*path_)) {
        for (auto& e : read_entries(*path_, skipped_lines_)) {
            entries_.try_emplace(e.digest, std::move(e));
        }
    } else if (path_->has_parent_path()) {
        std::filesystem::create_directories(path_->parent_path());
    }
    bool torn_tail = false;
    if (std::filesystem::exists(*path_) && std::filesystem::file_size(*path_) > 0) {
        std::ifstream in(*path_, std::ios::binary);
        in.seekg(-1, std::ios::end);
        torn_tail = in.get() != '\n';
    }
    out_.open(*path_, std::ios::app | std::ios::binary);
    if (!out_) {
        throw Error("cannot open cache file " + path_->string());
    }
    if (torn_tail) out_ << '\n';
}

std::optional<CacheEntry> ResponseCache::lookup(const std::string& digest) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(digest);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::insert(CacheEntry entry) {
    std::unique_lock lock(mutex_);
    if (entries_.contains(entry.digest)) return;
    if (out_.is_open()) {
        out_ << entry.to_json().dump() << '\n';
        out_.flush();
    }
    entries_.emplace(entry.digest, std::move(entry));
}

std::size_t ResponseCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

CacheStats ResponseCache::stats() const {
    std::shared_lock lock(mutex_);
    CacheStats s;
    s.entries = entries_.size();
    s.skipped_lines = skipped_lines_;
    for (const auto& [_, e] : entries_) s.fallbacks += e.fallback ? 1 : 0;
    return s;
}

std::size_t ResponseCache::purge(const std::filesystem::path& path, bool fallback_only) {
    if (!std::filesystem::exists(path)) return 0;
    std::size_t skipped = 0;
    const auto entries = read_entries(path, skipped);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    std::size_t removed = 0;
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        for (const auto& e : entries) {
            if (!fallback_only || e.fallback) {
                ++removed;
                continue;
            }
            out << e.to_json().dump() << '\n';
        }
    }
    std::filesystem::rename(tmp, path);
    return removed;
}

}  // namespace shotforge
