#include "shotforge/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "shotforge/backends.hpp"
#include "shotforge/baselines.hpp"
#include "shotforge/cache.hpp"
#include "shotforge/config.hpp"
#include "shotforge/errors.hpp"
#include "shotforge/pipeline.hpp"
#include "shotforge/report.hpp"

namespace shotforge {

namespace fs = std::filesystem;

namespace {

/// Options shared by every command that needs a run configuration.
struct ConfigOptions {
    std::string config_file;
    std::vector<std::string> sets;
    std::string dataset;
    std::string backend;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "flat key = value config file");
        cmd->add_option("--set", sets, "override one config key (key=value)");
        cmd->add_option("--dataset", dataset, "dataset path");
        cmd->add_option("--backend", backend, "llm, mock_similarity or replay");
        cmd->add_option("--seed", seed, "RNG seed");
    }
};

std::string absolute_from(const fs::path& base, const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return fs::absolute(base / p).lexically_normal().string();
}

/// Config file first, then --set pairs, then dedicated flags. Paths from a
/// config file are taken relative to that file.
RunConfig resolve_config(const ConfigOptions& opts, KeyValues flags) {
    RunConfig cfg;
    if (!opts.config_file.empty()) {
        auto kv = load_config_file(opts.config_file);
        const fs::path base = fs::path(opts.config_file).parent_path();
        for (const char* key : {"dataset", "split", "replay_fixture", "cache", "output_dir"}) {
            if (auto it = kv.find(key); it != kv.end()) it->second = absolute_from(base, it->second);
        }
        cfg.apply(kv);
    }
    KeyValues overrides;
    for (const auto& s : opts.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("--set expects key=value, got '" + s + "'");
        }
        overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    cfg.apply(overrides);
    if (!opts.dataset.empty()) flags["dataset"] = opts.dataset;
    if (!opts.backend.empty()) flags["backend"] = opts.backend;
    if (opts.seed) flags["seed"] = std::to_string(*opts.seed);
    cfg.apply(flags);
    return cfg;
}

Dataset load_configured_dataset(const RunConfig& cfg) {
    std::optional<fs::path> split;
    if (!cfg.split.empty()) split = fs::path(cfg.split);
    const Dataset d = load_dataset(cfg.dataset, parse_dataset_format(cfg.format), split);
    return d.with_truncation(cfg.test_truncation);
}

std::shared_ptr<EstimatorBackend> make_backend(const RunConfig& cfg) {
    switch (cfg.backend) {
        case BackendKind::llm:
            try {
                return llm_backend(cfg.estimator);
            } catch (const AuthError& e) {
                throw ConfigError(e.what());
            }
        case BackendKind::mock_similarity:
            return std::make_shared<MockSimilarityBackend>();
        case BackendKind::replay:
            return ReplayBackend::from_file(cfg.replay_fixture, cfg.estimator.model_name);
    }
    throw ConfigError("unknown backend");
}

std::shared_ptr<ResponseCache> make_cache(const std::string& path) {
    if (path.empty()) return std::make_shared<ResponseCache>();
    return std::make_shared<ResponseCache>(fs::path(path));
}

std::string shot_keys(const Dataset& d, const Chromosome& c) {
    std::string s;
    for (std::size_t i = 0; i < c.genes.size(); ++i) {
        if (i > 0) s += ',';
        s += d.train().at(c.genes[i]).key;
    }
    return s;
}

void print_front(std::ostream& out, const Dataset& d,
                 const std::vector<pipeline::EvaluatedIndividual>& front) {
    out << "n_shots  sae        ci         mae        shots\n";
    for (const auto& ind : front) {
        char line[128];
        std::snprintf(line, sizeof line, "%-8zu %-10.4f %-10.4f %-10.4f ", ind.objectives.n_shots,
                      ind.objectives.sae, ind.objectives.ci, ind.mae());
        out << line << (ind.chromosome.empty() ? "-" : shot_keys(d, ind.chromosome)) << '\n';
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::json read_json(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

struct OptimizeOptions {
    ConfigOptions config;
    std::string output;
    std::string run_id;
    std::optional<std::size_t> generations;
    std::optional<std::size_t> population;
    std::string resume;
    bool archive = false;
    std::optional<std::size_t> halt_after;
};

int cmd_optimize(const OptimizeOptions& opts, std::ostream& out) {
    RunConfig cfg;
    fs::path run_dir;
    if (!opts.resume.empty()) {
        run_dir = opts.resume;
        const pipeline::RunPaths paths{run_dir};
        if (!fs::exists(paths.config_snapshot())) {
            throw ConfigError("no config.snapshot.json in " + run_dir.string());
        }
        cfg = RunConfig::from_snapshot(read_json(paths.config_snapshot()));
    } else {
        KeyValues flags;
        if (!opts.output.empty()) flags["output_dir"] = opts.output;
        if (!opts.run_id.empty()) flags["run_id"] = opts.run_id;
        if (opts.generations) flags["generations"] = std::to_string(*opts.generations);
        if (opts.population) flags["population_size"] = std::to_string(*opts.population);
        if (opts.archive) flags["archive"] = "true";
        cfg = resolve_config(opts.config, flags);
    }
    cfg.validate();
    cfg.dataset = fs::absolute(cfg.dataset).lexically_normal().string();
    for (std::string* p : {&cfg.split, &cfg.replay_fixture, &cfg.cache}) {
        if (!p->empty()) *p = fs::absolute(*p).lexically_normal().string();
    }
    const Dataset dataset = load_configured_dataset(cfg);
    effective_test_set(dataset);

    if (opts.resume.empty()) {
        cfg.output_dir = fs::absolute(cfg.output_dir).lexically_normal().string();
        run_dir = fs::path(cfg.output_dir) / cfg.resolved_run_id(dataset.project());
    }
    const pipeline::RunPaths paths{run_dir};
    fs::create_directories(run_dir);
    if (opts.resume.empty()) {
        pipeline::write_atomic(paths.config_snapshot(), cfg.snapshot().dump(2) + "\n");
    }

    auto backend = make_backend(cfg);
    auto cache = make_cache(cfg.cache.empty() ? paths.cache().string() : cfg.cache);
    Estimator estimator(backend, cache, cfg.estimator);

    auto settings = cfg.run_settings();
    settings.halt_after = opts.halt_after;
    const bool resume = fs::exists(paths.state());
    const auto result = pipeline::run_optimization(dataset, estimator, settings, paths, resume);

    if (!result.completed) {
        out << "halted after generation " << result.generation << "; continue with --resume "
            << run_dir.string() << "\n";
        return kExitOk;
    }
    out << "Pareto front (" << result.front.size() << " members) for " << dataset.project()
        << ", seed " << cfg.evolution.rng_seed << ":\n";
    print_front(out, dataset, result.front);
    out << "backend calls: " << result.backend_calls << ", cache hits: " << result.cache_hits
        << ", fallbacks: " << result.fallback_estimates << "\n";
    out << "report: " << paths.report().string() << "\n";
    return kExitOk;
}

int cmd_baselines(const ConfigOptions& opts, const std::string& json_out, std::ostream& out) {
    RunConfig cfg = resolve_config(opts, {});
    if (cfg.dataset.empty()) throw ConfigError("missing required field 'dataset'");
    const Dataset dataset = load_configured_dataset(cfg);
    const auto mode = cfg.random_guess_exact
                          ? baselines::RandomGuessMode::expectation()
                          : baselines::RandomGuessMode::sampled(cfg.evolution.rng_seed,
                                                                cfg.random_draws);
    const auto rep = baselines::run_baselines(dataset, mode);
    out << "Baselines for " << rep.project << " (train " << rep.n_train << ", test " << rep.n_test
        << ")\n";
    out << "| Method | MAE |\n|---|---|\n";
    for (const auto& r : rep.results) {
        out << "| " << baselines::to_string(r.name) << " | " << report::format_fixed(r.mae, 4);
        if (r.standard_error) out << " (SE " << report::format_fixed(*r.standard_error, 4) << ")";
        out << " |\n";
    }
    const std::string json = rep.to_json().dump(2);
    if (json_out.empty()) {
        out << json << "\n";
    } else {
        pipeline::write_atomic(json_out, json + "\n");
        out << "json: " << json_out << "\n";
    }
    return kExitOk;
}

int cmd_evaluate(const ConfigOptions& opts, const std::string& shots, std::ostream& out) {
    RunConfig cfg = resolve_config(opts, {});
    if (cfg.dataset.empty()) throw ConfigError("missing required field 'dataset'");
    const Dataset dataset = load_configured_dataset(cfg);

    std::map<std::string, std::size_t> train_index;
    for (std::size_t i = 0; i < dataset.train().size(); ++i) {
        train_index.emplace(dataset.train()[i].key, i);
    }
    Chromosome c;
    std::stringstream list(shots);
    std::string key;
    while (std::getline(list, key, ',')) {
        if (key.empty()) continue;
        const auto it = train_index.find(key);
        if (it == train_index.end()) {
            throw ValidationError("shot key '" + key + "' is not a train issue");
        }
        c.genes.push_back(it->second);
    }
    if (has_duplicates(c)) throw ValidationError("shot list repeats a key (duplicate gene)");

    auto backend = make_backend(cfg);
    auto cache = make_cache(cfg.cache);
    Estimator estimator(backend, cache, cfg.estimator);
    const auto ind =
        pipeline::evaluate_individual(c, dataset, estimator, cfg.ci, cfg.parallelism);

    out << "SAE " << report::format_fixed(ind.objectives.sae, 4) << "  MAE "
        << report::format_fixed(ind.mae(), 4) << "  CI "
        << report::format_fixed(ind.objectives.ci, 4) << "  N " << ind.objectives.n_shots
        << "\n";
    out << "key,actual,estimate,fallback\n";
    for (const auto& e : ind.estimates) {
        out << e.key << ',' << format_points(e.actual) << ',' << format_points(e.estimate) << ','
            << (e.fallback ? "true" : "false") << '\n';
    }
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& published,
               const std::string& out_path, std::ostream& out) {
    if (run_dirs.empty() && published.empty()) {
        throw ConfigError("report needs at least one run directory or --published fixture");
    }
    std::vector<report::ResultsRow> rows;
    if (!published.empty()) rows = report::rows_from_fixture(read_json(published));
    for (const auto& dir : run_dirs) {
        const pipeline::RunPaths paths{dir};
        if (!fs::exists(paths.pareto())) {
            throw ConfigError("missing " + paths.pareto().string() + " (run not completed?)");
        }
        rows.push_back(report::row_from_pareto(read_json(paths.pareto())));
    }
    std::string text = report::render_results_table(rows);
    if (auto improvement = report::average_improvement(rows)) {
        text += "\nAverage improvement of best-SAE over zero-shot MAE: " +
                report::format_fixed(*improvement) + "%\n";
    } else {
        text += "\nAverage improvement: no zero-shot figure available\n";
    }
    out << text;
    if (!out_path.empty()) pipeline::write_atomic(out_path, text);
    return kExitOk;
}

int cmd_cache_stats(const std::string& path, std::ostream& out) {
    if (!fs::exists(path)) throw ConfigError("no cache file at " + path);
    const ResponseCache cache{fs::path(path)};
    const auto s = cache.stats();
    out << "entries: " << s.entries << "\nfallback entries: " << s.fallbacks
        << "\nskipped lines: " << s.skipped_lines << "\n";
    return kExitOk;
}

int cmd_cache_purge(const std::string& path, bool fallback_only, std::ostream& out) {
    if (!fs::exists(path)) throw ConfigError("no cache file at " + path);
    const auto removed = ResponseCache::purge(path, fallback_only);
    out << "removed " << removed << (fallback_only ? " fallback" : "") << " entries\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-objective few-shot selection for story-point estimation", "shotforge"};
    app.require_subcommand(1);

    OptimizeOptions optimize;
    auto* opt_cmd = app.add_subcommand("optimize", "run the shot optimisation");
    optimize.config.attach(opt_cmd);
    opt_cmd->add_option("--output", optimize.output, "output directory for runs");
    opt_cmd->add_option("--run-id", optimize.run_id, "run directory name");
    opt_cmd->add_option("--generations", optimize.generations);
    opt_cmd->add_option("--population", optimize.population);
    opt_cmd->add_option("--resume", optimize.resume, "continue the run in this directory");
    opt_cmd->add_flag("--archive", optimize.archive, "report the archive of all evaluations");
    opt_cmd->add_option("--halt-after", optimize.halt_after,
                        "stop after checkpointing this many generations");

    ConfigOptions base_opts;
    std::string json_out;
    auto* base_cmd = app.add_subcommand("baselines", "mean, median and random-guess MAE");
    base_opts.attach(base_cmd);
    base_cmd->add_option("--json-out", json_out, "write the JSON report here");

    ConfigOptions eval_opts;
    std::string shots;
    auto* eval_cmd = app.add_subcommand("evaluate", "score one explicit shot list");
    eval_opts.attach(eval_cmd);
    eval_cmd->add_option("--shots", shots, "comma-separated train keys (empty for zero-shot)");

    std::vector<std::string> run_dirs;
    std::string published;
    std::string report_out;
    auto* report_cmd = app.add_subcommand("report", "results table across runs");
    report_cmd->add_option("run_dirs", run_dirs, "completed run directories");
    report_cmd->add_option("--published", published, "JSON fixture with published rows");
    report_cmd->add_option("--out", report_out, "also write the table here");

    auto* cache_cmd = app.add_subcommand("cache", "inspect or purge a response cache");
    cache_cmd->require_subcommand(1);
    std::string stats_path;
    auto* stats_cmd = cache_cmd->add_subcommand("stats", "entry counts");
    stats_cmd->add_option("path", stats_path)->required();
    std::string purge_path;
    bool fallback_only = false;
    auto* purge_cmd = cache_cmd->add_subcommand("purge", "drop cached entries");
    purge_cmd->add_option("path", purge_path)->required();
    purge_cmd->add_flag("--fallback-only", fallback_only, "drop only fallback entries");

    std::vector<std::string> argv_store;
    argv_store.reserve(args.size() + 1);
    argv_store.emplace_back("shotforge");
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*opt_cmd) return cmd_optimize(optimize, out);
        if (*base_cmd) return cmd_baselines(base_opts, json_out, out);
        if (*eval_cmd) return cmd_evaluate(eval_opts, shots, out);
        if (*report_cmd) return cmd_report(run_dirs, published, report_out, out);
        if (*stats_cmd) return cmd_cache_stats(stats_path, out);
        if (*purge_cmd) return cmd_cache_purge(purge_path, fallback_only, out);
    } catch (const BackendError& e) {
        err << "backend failure: " << e.what() << "\n";
        return kExitBackend;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}

}  // namespace shotforge
