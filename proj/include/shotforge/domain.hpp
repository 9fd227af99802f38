#pragma once

// Core data types: issues, datasets with their train/test split, shot-set
// chromosomes and the story-point vocabulary shown to the estimator.

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace shotforge {

/// One agile work item with its actual story points.
struct Issue {
    std::string key;
    std::string title;
    std::string description;
    double story_points = 0.0;

    /// Text handed to the estimator: "title. description" (title alone when
    /// the description is empty).
    std::string text() const;

    bool operator==(const Issue&) const = default;
};

struct SplitSpec {
    std::vector<std::string> train_keys;
    std::vector<std::string> test_keys;
    std::optional<std::size_t> test_truncation;

    bool operator==(const SplitSpec&) const = default;
};

/// Validated, immutable-after-load collection of issues plus their split.
class Dataset {
public:
    Dataset() = default;
    /// Throws ValidationError on any invariant violation.
    Dataset(std::string project, std::vector<Issue> issues, SplitSpec split);

    const std::string& project() const noexcept { return project_; }
    const std::vector<Issue>& issues() const noexcept { return issues_; }
    const SplitSpec& split() const noexcept { return split_; }

    /// Train issues in split order. Chromosome genes index into this list.
    const std::vector<Issue>& train() const noexcept { return train_; }
    /// All test issues in split order, before truncation.
    const std::vector<Issue>& test() const noexcept { return test_; }

    const Issue* find(const std::string& key) const;

    /// Copy with a different truncation; truncation is run configuration,
    /// never read from the dataset file.
    Dataset with_truncation(std::optional<std::size_t> truncation) const;

    bool operator==(const Dataset& other) const {
        return project_ == other.project_ && issues_ == other.issues_ && split_ == other.split_;
    }

private:
    std::string project_;
    std::vector<Issue> issues_;
    SplitSpec split_;
    std::vector<Issue> train_;
    std::vector<Issue> test_;
};

/// Ordered, duplicate-free list of train-set indices. Empty means zero-shot.
struct Chromosome {
    std::vector<std::size_t> genes;

    std::size_t size() const noexcept { return genes.size(); }
    bool empty() const noexcept { return genes.empty(); }

    auto operator<=>(const Chromosome&) const = default;
    bool operator==(const Chromosome&) const = default;
};

bool has_duplicates(const Chromosome& c);
/// Throws ValidationError if a gene repeats or is >= train_size.
void validate_chromosome(const Chromosome& c, std::size_t train_size);

/// Sorted distinct story-point values observed in the train split.
struct AllowedValues {
    std::vector<double> values;

    /// Sample median; even counts average the two middle values.
    double median() const;
    /// Nearest allowed value, ties resolved towards the smaller one.
    double snap(double estimate) const;

    bool operator==(const AllowedValues&) const = default;
};

enum class DatasetFormat { json, csv };

DatasetFormat parse_dataset_format(const std::string& name);

/// Loads and validates a dataset. The CSV form needs `split_path` pointing
/// at a JSON object {"project": ..., "train": [...], "test": [...]}.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const std::optional<std::filesystem::path>& split_path = std::nullopt);

Dataset dataset_from_json(const nlohmann::json& j);
nlohmann::json dataset_to_json(const Dataset& d);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

/// First min(truncation, |test|) test issues; throws ValidationError when
/// fewer than two remain.
std::vector<Issue> effective_test_set(const Dataset& d);

AllowedValues allowed_values(const Dataset& d);

/// Renders a story-point value in shortest round-trip form ("3", "0.5").
std::string format_points(double value);

}  // namespace shotforge
