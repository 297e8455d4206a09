#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iosvqa {

enum class ScanType { SingleArch, OccludedArches };
enum class Applicability { SingleArch, OccludedArches, Both };

std::string_view to_string(ScanType type);
std::string_view to_string(Applicability applicability);
std::optional<ScanType> parse_scan_type(std::string_view text);
std::optional<Applicability> parse_applicability(std::string_view text);

// Lowercase (ASCII), trim, collapse internal whitespace runs to one space and
// strip trailing . , ! ? ; : characters. Used for labels, aliases and answers.
std::string normalize_text(std::string_view text);

struct LabelEntry {
    std::string label;
    std::vector<std::string> aliases;
};

struct Disease {
    int id = 0;
    std::string name;
    Applicability applicability = Applicability::Both;
    std::vector<LabelEntry> labels;

    bool applies_to(ScanType scan) const;
    // Canonical label whose normalized label or alias equals normalize_text(text).
    std::optional<std::string> canonical_label(std::string_view text) const;
    bool has_label(std::string_view label) const;
    std::string display_name() const;
};

// Ordered disease set with ids 1..C.
class DiseaseSchema {
public:
    DiseaseSchema() = default;
    explicit DiseaseSchema(std::vector<Disease> diseases);

    const std::vector<Disease>& diseases() const { return diseases_; }
    std::size_t size() const { return diseases_.size(); }
    const Disease* find(int id) const;
    const Disease& at(int id) const; // throws UnknownDisease
    std::size_t count(Applicability applicability) const;

private:
    std::vector<Disease> diseases_;
};

DiseaseSchema parse_schema(std::string_view json_text);
DiseaseSchema load_schema(const std::filesystem::path& path);
std::string schema_to_json(const DiseaseSchema& schema);

// Location of the bundled data files (default schema, templates, policy).
std::filesystem::path default_data_dir();

} // namespace iosvqa
