#pragma once

// Run configuration: a flat key = value file, overridable key by key from the
// command line, persisted as a flat JSON snapshot in every run directory.
//
// Keys (defaults in parentheses):
//   dataset, format (json), split, test_truncation (30; "none" keeps all)
//   population_size (50), generations (20), crossover_rate (0.2),
//   mutation_rate (0.8), max_init_len (8), seed (42),
//   mutation_scheme (categorical|independent), seed_zero_shot (false)
//   p (0.95), k (1)
//   backend (llm|mock_similarity|replay), endpoint_url (llm), model (llm and
//   replay), temperature (0),
//   max_retries (2), timeout_ms (60000), requests_per_minute (60),
//   retry_backoff_ms (1000), fallback (true), snap_to_allowed (false),
//   replay_fixture
//   output_dir (runs), run_id, cache, parallelism (4), archive (false),
//   random_guess (exact|sampled), random_draws (1000)

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "shotforge/baselines.hpp"
#include "shotforge/estimator.hpp"
#include "shotforge/evolve.hpp"
#include "shotforge/pipeline.hpp"
#include "shotforge/stats.hpp"

namespace shotforge {

enum class BackendKind { llm, mock_similarity, replay };

std::string to_string(BackendKind kind);

using KeyValues = std::map<std::string, std::string>;

struct RunConfig {
    std::string dataset;
    std::string format = "json";
    std::string split;
    std::optional<std::size_t> test_truncation = 30;
    evolve::EvolutionConfig evolution{.rng_seed = 42};
    stats::CiConfig ci;
    EstimatorConfig estimator;
    BackendKind backend = BackendKind::llm;
    std::string replay_fixture;
    std::string output_dir = "runs";
    std::string run_id;
    std::string cache;
    std::size_t parallelism = 4;
    bool archive = false;
    bool random_guess_exact = true;
    std::size_t random_draws = 1000;

    /// Applies key/value pairs on top of the current values. Throws
    /// ConfigError naming the key on unknown keys or malformed values.
    void apply(const KeyValues& kv);
    /// Every key with its current value, as written to the snapshot.
    KeyValues to_key_values() const;

    /// Throws ConfigError naming the first missing or invalid field.
    void validate() const;

    nlohmann::json snapshot() const;
    static RunConfig from_snapshot(const nlohmann::json& j);

    pipeline::RunSettings run_settings() const;
    /// run_id when set, otherwise "<project>-s<seed>-<8 hex digits of the snapshot digest>".
    std::string resolved_run_id(const std::string& project) const;
};

/// Parses "key = value" lines; '#' starts a comment, values may be quoted.
KeyValues parse_config_text(const std::string& text);

/// Loads a flat config file, or a JSON snapshot when the file is a JSON object.
KeyValues load_config_file(const std::filesystem::path& path);

}  // namespace shotforge
