#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace milwsi {

struct SlideRecord {
    std::string slide_id;
    std::filesystem::path bag_path;
    std::string raw_label;
};

// Dataset roster in file order. Slide ids are unique.
struct Manifest {
    std::vector<SlideRecord> records;
};

// A binary task. Labels are compared case-insensitively after trimming.
// With catch_all_negative set, any label outside positive_labels maps to
// class 0 and negative_labels may be empty.
struct TaskSpec {
    std::string name;
    std::set<std::string> positive_labels;
    std::set<std::string> negative_labels;
    bool catch_all_negative = false;

    void validate() const;
};

struct LabeledItem {
    std::string slide_id;
    std::filesystem::path bag_path;
    int label = 0;
};

struct LabeledDataset {
    std::vector<LabeledItem> items;
    TaskSpec task;

    std::vector<int> labels() const;
    std::size_t positives() const;
};

// Trim ASCII whitespace and lower-case.
std::string normalize_label(std::string_view label);

// Parses the `slide_id,bag_path,label` CSV format. Relative bag paths are
// kept as written; resolve them against the manifest directory if needed.
Manifest parse_manifest(const std::filesystem::path& path);
Manifest parse_manifest_text(std::string_view text);

LabeledDataset resolve_task(const Manifest& manifest, const TaskSpec& task);

} // namespace milwsi
