// Writes a synthetic story-point dataset whose wording tracks effort: every
// story-point class draws most of its words from its own vocabulary, so
// lexical similarity between issues carries information about their points.
//
//   make_synthetic OUT.json [--seed S] [--train N] [--test M] [--project NAME]

#include <CLI11.hpp>

#include <array>
#include <iostream>
#include <string>
#include <vector>

#include "shotforge/domain.hpp"
#include "shotforge/rng.hpp"

namespace {

struct PointClass {
    double points;
    std::vector<std::string> words;
};

const std::array<PointClass, 6>& classes() {
    static const std::array<PointClass, 6> table{{
        {1, {"typo", "label", "tooltip", "wording", "colour", "icon", "spacing", "copy"}},
        {2, {"validation", "field", "form", "default", "placeholder", "checkbox", "dropdown", "hint"}},
        {3, {"endpoint", "query", "filter", "pagination", "sorting", "export", "column", "search"}},
        {5, {"workflow", "notification", "scheduler", "retry", "queue", "webhook", "audit", "digest"}},
        {8, {"migration", "schema", "index", "replication", "backfill", "partition", "rollback", "shard"}},
        {13, {"architecture", "cluster", "federation", "protocol", "consensus", "multitenant", "sharding", "failover"}},
    }};
    return table;
}

const std::vector<std::string>& generic_words() {
    static const std::vector<std::string> words{
        "user", "page", "update", "support", "should", "when", "the", "admin",
        "improve", "allow", "add", "fix", "view", "data", "service", "screen"};
    return words;
}

std::string pick(shotforge::Rng& rng, const std::vector<std::string>& words) {
    return words[rng.below(words.size())];
}

shotforge::Issue make_issue(shotforge::Rng& rng, const std::string& key) {
    const auto& cls = classes()[rng.below(classes().size())];
    std::string title = pick(rng, generic_words()) + " " + pick(rng, cls.words) + " " +
                        pick(rng, cls.words);
    // A quarter of the description words stray into another class.
    auto topical = [&] {
        const auto& source = rng.bernoulli(0.25) ? classes()[rng.below(classes().size())] : cls;
        return pick(rng, source.words);
    };
    std::string description = "The " + topical();
    for (int i = 0; i < 4; ++i) description += " " + topical();
    description += " " + pick(rng, generic_words()) + " " + pick(rng, generic_words());
    return {key, title, description, cls.points};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic story-point dataset generator", "make_synthetic"};
    std::string out;
    std::uint64_t seed = 7;
    std::size_t n_train = 60;
    std::size_t n_test = 30;
    std::string project = "SYNTH";
    app.add_option("out", out, "output JSON path")->required();
    app.add_option("--seed", seed);
    app.add_option("--train", n_train);
    app.add_option("--test", n_test);
    app.add_option("--project", project);
    CLI11_PARSE(app, argc, argv);

    shotforge::Rng rng(seed);
    std::vector<shotforge::Issue> issues;
    shotforge::SplitSpec split;
    for (std::size_t i = 0; i < n_train + n_test; ++i) {
        const std::string key = project + "-" + std::to_string(i + 1);
        issues.push_back(make_issue(rng, key));
        (i < n_train ? split.train_keys : split.test_keys).push_back(key);
    }
    try {
        const shotforge::Dataset d(project, std::move(issues), std::move(split));
        shotforge::save_dataset(d, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
