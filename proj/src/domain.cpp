#include "shotforge/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "shotforge/errors.hpp"

namespace shotforge {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::json parse_json_file(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

template <typename T>
T required(const nlohmann::json& obj, const char* field, const std::string& where) {
    if (!obj.is_object() || !obj.contains(field)) {
        throw ParseError(where + ": missing field '" + field + "'");
    }
    try {
        return obj.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(where + ": field '" + field + "' has the wrong type");
    }
}

// RFC 4180 records: quoted fields may contain commas, quotes ("") and newlines.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                if (field_started) {
                    throw ParseError("csv: stray quote inside unquoted field");
                }
                quoted = true;
                field_started = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                field_started = false;
                break;
            case '\r':
                break;
            case '\n':
                row.push_back(std::move(field));
                field.clear();
                field_started = false;
                if (!(row.size() == 1 && row.front().empty())) {
                    rows.push_back(std::move(row));
                }
                row.clear();
                break;
            default:
                field.push_back(ch);
                field_started = true;
        }
    }
    if (quoted) {
        throw ParseError("csv: unterminated quoted field");
    }
    if (field_started || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

double parse_points(const std::string& s, const std::string& where) {
    double value = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first != last && *first == ' ') ++first;
    while (last != first && *(last - 1) == ' ') --last;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ParseError(where + ": story_points '" + s + "' is not a number");
    }
    return value;
}

Dataset load_csv(const std::filesystem::path& path, const std::filesystem::path& split_path) {
    const auto rows = parse_csv(read_file(path));
    if (rows.empty()) {
        throw ParseError(path.string() + ": empty csv");
    }
    const auto& header = rows.front();
    const std::vector<std::string> expected{"key", "title", "description", "story_points"};
    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
    for (const auto& name : expected) {
        if (!column.contains(name)) {
            throw ParseError(path.string() + ": missing column '" + name + "'");
        }
    }
    std::vector<Issue> issues;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) {
            throw ParseError(path.string() + ": row " + std::to_string(r) + " has " +
                             std::to_string(row.size()) + " fields, expected " +
                             std::to_string(header.size()));
        }
        const std::string where = path.string() + ":" + std::to_string(r);
        issues.push_back(Issue{row[column["key"]], row[column["title"]], row[column["description"]],
                               parse_points(row[column["story_points"]], where)});
    }

    const auto split_json = parse_json_file(split_path);
    SplitSpec split;
    split.train_keys = required<std::vector<std::string>>(split_json, "train", split_path.string());
    split.test_keys = required<std::vector<std::string>>(split_json, "test", split_path.string());
    std::string project = split_json.value("project", path.stem().string());
    return Dataset(std::move(project), std::move(issues), std::move(split));
}

}  // namespace

std::string Issue::text() const {
    if (description.empty()) return title;
    return title + ". " + description;
}

Dataset::Dataset(std::string project, std::vector<Issue> issues, SplitSpec split)
    : project_(std::move(project)), issues_(std::move(issues)), split_(std::move(split)) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < issues_.size(); ++i) {
        const Issue& issue = issues_[i];
        if (issue.key.empty()) {
            throw ValidationError("issue #" + std::to_string(i) + " has an empty key");
        }
        if (!std::isfinite(issue.story_points) || issue.story_points <= 0.0) {
            throw ValidationError("issue " + issue.key + " has non-positive story points");
        }
        if (!index.emplace(issue.key, i).second) {
            throw ValidationError("duplicate issue key " + issue.key);
        }
    }
    std::unordered_set<std::string> seen;
    auto resolve = [&](const std::vector<std::string>& keys, const char* side,
                       std::vector<Issue>& out) {
        for (const auto& key : keys) {
            auto it = index.find(key);
            if (it == index.end()) {
                throw ValidationError(std::string(side) + " split references unknown key " + key);
            }
            if (!seen.insert(key).second) {
                throw ValidationError("key " + key + " appears twice in the split");
            }
            out.push_back(issues_[it->second]);
        }
    };
    resolve(split_.train_keys, "train", train_);
    resolve(split_.test_keys, "test", test_);
    if (split_.test_truncation && *split_.test_truncation == 0) {
        throw ValidationError("test truncation must be positive");
    }
}

const Issue* Dataset::find(const std::string& key) const {
    auto it = std::find_if(issues_.begin(), issues_.end(),
                           [&](const Issue& i) { return i.key == key; });
    return it == issues_.end() ? nullptr : &*it;
}

Dataset Dataset::with_truncation(std::optional<std::size_t> truncation) const {
    SplitSpec split = split_;
    split.test_truncation = truncation;
    return Dataset(project_, issues_, std::move(split));
}

bool has_duplicates(const Chromosome& c) {
    std::unordered_set<std::size_t> seen;
    for (auto g : c.genes) {
        if (!seen.insert(g).second) return true;
    }
    return false;
}

void validate_chromosome(const Chromosome& c, std::size_t train_size) {
    for (auto g : c.genes) {
        if (g >= train_size) {
            throw ValidationError("gene " + std::to_string(g) + " out of range for train size " +
                                  std::to_string(train_size));
        }
    }
    if (has_duplicates(c)) {
        throw ValidationError("chromosome contains a duplicate gene");
    }
}

double AllowedValues::median() const {
    if (values.empty()) {
        throw EmptyInput("allowed values are empty");
    }
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double AllowedValues::snap(double estimate) const {
    if (values.empty()) {
        throw EmptyInput("allowed values are empty");
    }
    double best = values.front();
    for (double v : values) {
        if (std::abs(v - estimate) < std::abs(best - estimate)) best = v;
    }
    return best;
}

DatasetFormat parse_dataset_format(const std::string& name) {
    if (name == "json") return DatasetFormat::json;
    if (name == "csv") return DatasetFormat::csv;
    throw ConfigError("unknown dataset format '" + name + "' (expected json or csv)");
}

Dataset dataset_from_json(const nlohmann::json& j) {
    const std::string where = "dataset";
    std::string project = required<std::string>(j, "project", where);
    const auto& issues_json = j.contains("issues") ? j.at("issues") : nlohmann::json();
    if (!issues_json.is_array()) {
        throw ParseError(where + ": field 'issues' must be an array");
    }
    std::vector<Issue> issues;
    issues.reserve(issues_json.size());
    for (std::size_t i = 0; i < issues_json.size(); ++i) {
        const auto& item = issues_json[i];
        const std::string at = where + ".issues[" + std::to_string(i) + "]";
        issues.push_back(Issue{required<std::string>(item, "key", at),
                               required<std::string>(item, "title", at),
                               required<std::string>(item, "description", at),
                               required<double>(item, "story_points", at)});
    }
    if (!j.contains("split")) {
        throw ParseError(where + ": missing field 'split'");
    }
    SplitSpec split;
    split.train_keys = required<std::vector<std::string>>(j.at("split"), "train", where + ".split");
    split.test_keys = required<std::vector<std::string>>(j.at("split"), "test", where + ".split");
    return Dataset(std::move(project), std::move(issues), std::move(split));
}

nlohmann::json dataset_to_json(const Dataset& d) {
    nlohmann::json issues = nlohmann::json::array();
    for (const auto& issue : d.issues()) {
        issues.push_back({{"key", issue.key},
                          {"title", issue.title},
                          {"description", issue.description},
                          {"story_points", issue.story_points}});
    }
    return {{"project", d.project()},
            {"issues", std::move(issues)},
            {"split", {{"train", d.split().train_keys}, {"test", d.split().test_keys}}}};
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << dataset_to_json(d).dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const std::optional<std::filesystem::path>& split_path) {
    if (format == DatasetFormat::csv) {
        if (!split_path) {
            throw ParseError(path.string() + ": csv datasets need a split file");
        }
        return load_csv(path, *split_path);
    }
    return dataset_from_json(parse_json_file(path));
}

std::vector<Issue> effective_test_set(const Dataset& d) {
    const auto& test = d.test();
    std::size_t n = test.size();
    if (d.split().test_truncation) n = std::min(n, *d.split().test_truncation);
    if (n < 2) {
        throw ValidationError("effective test set has " + std::to_string(n) +
                              " issue(s); at least 2 are required");
    }
    return {test.begin(), test.begin() + static_cast<std::ptrdiff_t>(n)};
}

AllowedValues allowed_values(const Dataset& d) {
    std::set<double> distinct;
    for (const auto& issue : d.train()) distinct.insert(issue.story_points);
    if (distinct.empty()) {
        throw ValidationError("train split is empty; no story-point values to offer");
    }
    return AllowedValues{{distinct.begin(), distinct.end()}};
}

std::string format_points(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    if (ec != std::errc{}) return std::to_string(value);
    return std::string(buf, ptr);
}

}  // namespace shotforge
