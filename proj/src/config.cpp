#include "shotforge/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "shotforge/cache.hpp"
#include "shotforge/errors.hpp"

namespace shotforge {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
    }
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + value + "'");
}

std::string real_text(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

BackendKind parse_backend(const std::string& value) {
    if (value == "llm") return BackendKind::llm;
    if (value == "mock_similarity") return BackendKind::mock_similarity;
    if (value == "replay") return BackendKind::replay;
    throw ConfigError("config key 'backend': expected llm, mock_similarity or replay, got '" +
                      value + "'");
}

}  // namespace

std::string to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::llm: return "llm";
        case BackendKind::mock_similarity: return "mock_similarity";
        case BackendKind::replay: return "replay";
    }
    return "unknown";
}

void RunConfig::apply(const KeyValues& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "dataset") dataset = value;
        else if (key == "format") format = value;
        else if (key == "split") split = value;
        else if (key == "test_truncation") {
            test_truncation = value == "none" || value.empty()
                                  ? std::nullopt
                                  : std::optional(parse_integer<std::size_t>(key, value));
        }
        else if (key == "population_size") evolution.population_size = parse_integer<std::size_t>(key, value);
        else if (key == "generations") evolution.generations = parse_integer<std::size_t>(key, value);
        else if (key == "crossover_rate") evolution.crossover_rate = parse_real(key, value);
        else if (key == "mutation_rate") evolution.mutation_rate = parse_real(key, value);
        else if (key == "max_init_len") evolution.max_init_len = parse_integer<std::size_t>(key, value);
        else if (key == "seed") evolution.rng_seed = parse_integer<std::uint64_t>(key, value);
        else if (key == "mutation_scheme") {
            if (value == "categorical") evolution.mutation_scheme = evolve::MutationScheme::categorical;
            else if (value == "independent") evolution.mutation_scheme = evolve::MutationScheme::independent;
            else throw ConfigError("config key 'mutation_scheme': expected categorical or independent");
        }
        else if (key == "seed_zero_shot") evolution.seed_zero_shot = parse_bool(key, value);
        else if (key == "p") ci.p = parse_real(key, value);
        else if (key == "k") ci.k = parse_integer<long>(key, value);
        else if (key == "backend") backend = parse_backend(value);
        else if (key == "endpoint_url") estimator.endpoint_url = value;
        else if (key == "model") estimator.model_name = value;
        else if (key == "temperature") estimator.temperature = parse_real(key, value);
        else if (key == "max_retries") estimator.max_retries = parse_integer<int>(key, value);
        else if (key == "timeout_ms") estimator.timeout = std::chrono::milliseconds(parse_integer<long>(key, value));
        else if (key == "requests_per_minute") estimator.requests_per_minute = parse_integer<int>(key, value);
        else if (key == "retry_backoff_ms") estimator.retry_backoff = std::chrono::milliseconds(parse_integer<long>(key, value));
        else if (key == "fallback") estimator.fallback_enabled = parse_bool(key, value);
        else if (key == "snap_to_allowed") estimator.snap_to_allowed = parse_bool(key, value);
        else if (key == "replay_fixture") replay_fixture = value;
        else if (key == "output_dir") output_dir = value;
        else if (key == "run_id") run_id = value;
        else if (key == "cache") cache = value;
        else if (key == "parallelism") parallelism = parse_integer<std::size_t>(key, value);
        else if (key == "archive") archive = parse_bool(key, value);
        else if (key == "random_guess") {
            if (value == "exact") random_guess_exact = true;
            else if (value == "sampled") random_guess_exact = false;
            else throw ConfigError("config key 'random_guess': expected exact or sampled");
        }
        else if (key == "random_draws") random_draws = parse_integer<std::size_t>(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    }
}

KeyValues RunConfig::to_key_values() const {
    return {
        {"dataset", dataset},
        {"format", format},
        {"split", split},
        {"test_truncation", test_truncation ? std::to_string(*test_truncation) : "none"},
        {"population_size", std::to_string(evolution.population_size)},
        {"generations", std::to_string(evolution.generations)},
        {"crossover_rate", real_text(evolution.crossover_rate)},
        {"mutation_rate", real_text(evolution.mutation_rate)},
        {"max_init_len", std::to_string(evolution.max_init_len)},
        {"seed", std::to_string(evolution.rng_seed)},
        {"mutation_scheme", evolution.mutation_scheme == evolve::MutationScheme::categorical
                                ? "categorical"
                                : "independent"},
        {"seed_zero_shot", evolution.seed_zero_shot ? "true" : "false"},
        {"p", real_text(ci.p)},
        {"k", std::to_string(ci.k)},
        {"backend", to_string(backend)},
        {"endpoint_url", estimator.endpoint_url},
        {"model", estimator.model_name},
        {"temperature", real_text(estimator.temperature)},
        {"max_retries", std::to_string(estimator.max_retries)},
        {"timeout_ms", std::to_string(estimator.timeout.count())},
        {"requests_per_minute", std::to_string(estimator.requests_per_minute)},
        {"retry_backoff_ms", std::to_string(estimator.retry_backoff.count())},
        {"fallback", estimator.fallback_enabled ? "true" : "false"},
        {"snap_to_allowed", estimator.snap_to_allowed ? "true" : "false"},
        {"replay_fixture", replay_fixture},
        {"output_dir", output_dir},
        {"run_id", run_id},
        {"cache", cache},
        {"parallelism", std::to_string(parallelism)},
        {"archive", archive ? "true" : "false"},
        {"random_guess", random_guess_exact ? "exact" : "sampled"},
        {"random_draws", std::to_string(random_draws)},
    };
}

void RunConfig::validate() const {
    if (dataset.empty()) throw ConfigError("missing required field 'dataset'");
    parse_dataset_format(format);
    if (format == "csv" && split.empty()) {
        throw ConfigError("missing required field 'split' (csv datasets need a split file)");
    }
    if (test_truncation && *test_truncation == 0) {
        throw ConfigError("field 'test_truncation' must be positive");
    }
    evolve::validate(evolution);
    try {
        stats::validate(ci);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("field 'p'/'k': ") + e.what());
    }
    shotforge::validate(estimator);
    if (backend == BackendKind::llm && estimator.endpoint_url.empty()) {
        throw ConfigError("missing required field 'endpoint_url' for the llm backend");
    }
    if (backend != BackendKind::mock_similarity && estimator.model_name.empty()) {
        throw ConfigError("missing required field 'model' for the " + to_string(backend) + " backend");
    }
    if (backend == BackendKind::replay && replay_fixture.empty()) {
        throw ConfigError("missing required field 'replay_fixture' for the replay backend");
    }
    if (parallelism == 0) throw ConfigError("field 'parallelism' must be positive");
    if (!random_guess_exact && random_draws == 0) {
        throw ConfigError("field 'random_draws' must be positive");
    }
}

nlohmann::json RunConfig::snapshot() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, value] : to_key_values()) j[key] = value;
    return j;
}

RunConfig RunConfig::from_snapshot(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config snapshot must be a JSON object");
    KeyValues kv;
    for (const auto& [key, value] : j.items()) {
        kv[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    RunConfig cfg;
    cfg.apply(kv);
    return cfg;
}

pipeline::RunSettings RunConfig::run_settings() const {
    pipeline::RunSettings s;
    s.evolution = evolution;
    s.ci = ci;
    s.parallelism = parallelism;
    s.archive = archive;
    s.random_guess = random_guess_exact
                         ? baselines::RandomGuessMode::expectation()
                         : baselines::RandomGuessMode::sampled(evolution.rng_seed, random_draws);
    return s;
}

std::string RunConfig::resolved_run_id(const std::string& project) const {
    if (!run_id.empty()) return run_id;
    RunConfig identity = *this;
    identity.output_dir.clear();
    identity.parallelism = 0;
    const auto digest = prompt_digest(identity.snapshot().dump(), "run-config");
    return project + "-s" + std::to_string(evolution.rng_seed) + "-" + digest.substr(0, 8);
}

KeyValues parse_config_text(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // Strip comments outside quotes.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        kv[key] = value;
    }
    return kv;
}

KeyValues load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            const auto j = nlohmann::json::parse(text);
            KeyValues kv;
            for (const auto& [key, value] : j.items()) {
                kv[key] = value.is_string() ? value.get<std::string>() : value.dump();
            }
            return kv;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }
    return parse_config_text(text);
}

}  // namespace shotforge
