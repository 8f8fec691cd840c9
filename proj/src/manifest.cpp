#include <milwsi/manifest.hpp>

#include <milwsi/error.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace milwsi {

namespace {

std::string_view trim(std::string_view s)
{
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::set<std::string> normalized(const std::set<std::string>& labels)
{
    std::set<std::string> out;
    for (const auto& l : labels)
        out.insert(normalize_label(l));
    return out;
}

} // namespace

std::string normalize_label(std::string_view label)
{
    std::string out(trim(label));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

void TaskSpec::validate() const
{
    const auto pos = normalized(positive_labels);
    const auto neg = normalized(negative_labels);
    if (pos.empty())
        throw ValidationError("task '" + name + "': positive label set is empty");
    if (neg.empty() && !catch_all_negative)
        throw ValidationError("task '" + name + "': negative label set is empty");
    for (const auto& l : pos)
        if (neg.count(l))
            throw ValidationError("task '" + name + "': label '" + l + "' is both positive and negative");
}

std::vector<int> LabeledDataset::labels() const
{
    std::vector<int> out;
    out.reserve(items.size());
    for (const auto& it : items)
        out.push_back(it.label);
    return out;
}

std::size_t LabeledDataset::positives() const
{
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [](const LabeledItem& it) { return it.label == 1; }));
}

Manifest parse_manifest_text(std::string_view text)
{
    Manifest manifest;
    std::unordered_map<std::string, std::size_t> seen;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);

        if (!header_seen) {
            if (line != "slide_id,bag_path,label")
                throw FormatError("manifest line 1: expected header 'slide_id,bag_path,label'");
            header_seen = true;
            continue;
        }
        if (trim(line).empty())
            continue;

        const auto fields = split_commas(line);
        if (fields.size() != 3)
            throw FormatError("manifest line " + std::to_string(line_no) + ": expected 3 fields, got " +
                              std::to_string(fields.size()));
        SlideRecord rec{std::string(trim(fields[0])), std::filesystem::path(std::string(trim(fields[1]))),
                        std::string(trim(fields[2]))};
        if (rec.slide_id.empty())
            throw FormatError("manifest line " + std::to_string(line_no) + ": empty slide_id");
        if (rec.raw_label.empty())
            throw FormatError("manifest line " + std::to_string(line_no) + ": empty label");
        if (rec.bag_path.empty())
            throw FormatError("manifest line " + std::to_string(line_no) + ": empty bag_path");
        if (auto [it, inserted] = seen.emplace(rec.slide_id, line_no); !inserted)
            throw FormatError("manifest line " + std::to_string(line_no) + ": duplicate slide_id '" +
                              rec.slide_id + "' (first seen on line " + std::to_string(it->second) + ")");
        manifest.records.push_back(std::move(rec));
    }
    if (!header_seen)
        throw FormatError("manifest is empty");
    return manifest;
}

Manifest parse_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open manifest '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest_text(buf.str());
}

LabeledDataset resolve_task(const Manifest& manifest, const TaskSpec& task)
{
    task.validate();
    const auto pos = normalized(task.positive_labels);
    const auto neg = normalized(task.negative_labels);

    LabeledDataset ds;
    ds.task = task;
    ds.items.reserve(manifest.records.size());
    std::vector<std::string> unresolved;
    for (const auto& rec : manifest.records) {
        const auto label = normalize_label(rec.raw_label);
        int y = -1;
        if (pos.count(label))
            y = 1;
        else if (neg.count(label) || task.catch_all_negative)
            y = 0;
        if (y < 0) {
            unresolved.push_back(rec.slide_id + " ('" + rec.raw_label + "')");
            continue;
        }
        ds.items.push_back({rec.slide_id, rec.bag_path, y});
    }
    if (!unresolved.empty()) {
        std::string msg = "task '" + task.name + "': unresolved labels for slides:";
        for (const auto& u : unresolved)
            msg += " " + u;
        throw ValidationError(msg);
    }
    const auto n_pos = ds.positives();
    if (n_pos == 0 || n_pos == ds.items.size())
        throw ValidationError("task '" + task.name + "': dataset needs at least one slide of each class");
    return ds;
}

} // namespace milwsi
