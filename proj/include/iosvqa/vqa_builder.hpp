#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "iosvqa/schema.hpp"

namespace iosvqa {

enum class Quality { High, Noisy };
enum class Stage { Stage1 = 0, Stage2 = 1, Test = 2 };

inline constexpr std::array<Stage, 3> kStages{Stage::Stage1, Stage::Stage2, Stage::Test};

std::string_view to_string(Quality quality);
std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view text);

struct CaseRecord {
    std::string case_id;
    std::string source;
    ScanType scan_type = ScanType::SingleArch;
    std::string mesh_path;
    std::map<int, std::string> labels; // disease id -> label in that disease's label set
    Quality quality = Quality::Noisy;
};

struct VqaSample {
    std::string sample_id;
    std::string case_id;
    int disease_id = 0;
    std::string question;
    std::string answer_label;
    std::optional<std::string> rationale;
    bool has_rationale_slot = false;
    // Who is expected to fill the rationale slot; unset when there is no slot.
    std::optional<std::string> rationale_source;
    Stage stage = Stage::Stage1;
};

// ---------------------------------------------------------------------------
// Manifest

std::vector<CaseRecord> parse_manifest(std::string_view text, const DiseaseSchema& schema);
std::vector<CaseRecord> load_manifest(const std::filesystem::path& path, const DiseaseSchema& schema);
std::string case_to_json_line(const CaseRecord& record);
std::string write_manifest(const std::vector<CaseRecord>& records);

// ---------------------------------------------------------------------------
// Label mapping rules

struct MatchExpr {
    enum class Kind { Equals, InSet, Pattern, Range };
    Kind kind = Kind::Equals;
    std::string value;              // Equals
    std::vector<std::string> set;   // InSet
    std::string pattern;            // Pattern (ECMAScript, full match)
    std::optional<double> gt, gte, lt, lte; // Range, numeric values only

    bool matches(std::string_view text) const;
    bool operator==(const MatchExpr& other) const;

    std::shared_ptr<const std::regex> compiled;
};

struct MappingRule {
    std::string source_field;
    MatchExpr predicate;
    int disease_id = 0;
    std::string label;
    int priority = 0;
};

using RawRecord = std::map<std::string, std::string>;

// Parses a JSON array of rules; validates diseases, labels and patterns.
std::vector<MappingRule> parse_rules(std::string_view json_text, const DiseaseSchema& schema);

// Static check: two rules with the same disease, priority, field and predicate
// but different labels can never be resolved. Throws RuleConflict.
void validate_rules(const std::vector<MappingRule>& rules);

// Highest-priority matching rule per disease. Throws RuleConflict when two
// rules tie at the top priority for a disease and disagree on the label.
std::map<int, std::string> apply_mapping(const RawRecord& record, const std::vector<MappingRule>& rules);

// ---------------------------------------------------------------------------
// Question generation, splits, rationale slots

using QuestionTemplates = std::map<int, std::vector<std::string>>;

QuestionTemplates parse_templates(std::string_view json_text);
QuestionTemplates load_templates(const std::filesystem::path& path);

// One sample per (labeled disease, question draw). Templates may contain the
// placeholder "{disease}".
std::vector<VqaSample> generate_qa(const CaseRecord& record, const DiseaseSchema& schema,
                                   const QuestionTemplates& templates, std::size_t k_questions, std::uint64_t seed,
                                   Stage stage = Stage::Stage1);

struct StageFractions {
    double stage1 = 0.8;
    double stage2 = 0.1;
    double test = 0.1;

    double operator[](Stage s) const { return s == Stage::Stage1 ? stage1 : s == Stage::Stage2 ? stage2 : test; }
};

struct SplitPolicy {
    StageFractions default_fractions;
    std::map<std::string, StageFractions> per_source;
    // High-quality cases of these sources go to stage2 before the split.
    std::set<std::string> force_high_quality_to_stage2;

    const StageFractions& fractions(const std::string& source) const;
};

std::map<std::string, Stage> split_stages(const std::vector<CaseRecord>& cases, const SplitPolicy& policy,
                                          std::uint64_t seed);

// Flags floor(fraction * n) of the n stage2 samples. Returns the flag count.
std::size_t flag_rationales(std::vector<VqaSample>& samples, double fraction, std::uint64_t seed);

struct QuestionPolicy {
    std::array<std::size_t, 3> default_k{1, 1, 1};
    std::map<std::string, std::array<std::size_t, 3>> per_source;

    std::size_t k(const std::string& source, Stage stage) const;
};

struct BuildPolicy {
    SplitPolicy split;
    QuestionPolicy questions;
    double rationale_fraction = 0.5;
};

BuildPolicy parse_build_policy(std::string_view json_text);
BuildPolicy load_build_policy(const std::filesystem::path& path);

struct BuiltDataset {
    std::map<std::string, Stage> assignment;
    std::vector<VqaSample> samples;
};

BuiltDataset build_dataset(const std::vector<CaseRecord>& cases, const DiseaseSchema& schema,
                           const QuestionTemplates& templates, const BuildPolicy& policy, std::uint64_t seed);

std::string sample_to_json_line(const VqaSample& sample);
std::string write_samples(const std::vector<VqaSample>& samples);
std::vector<VqaSample> parse_samples(std::string_view text);
std::vector<VqaSample> load_samples(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Statistics

struct SourceStats {
    std::size_t cases = 0;
    std::size_t single_arch = 0;
    std::size_t occluded = 0;
    std::size_t high_quality = 0;
    std::size_t qa_pairs = 0;
    std::set<int> single_arch_diseases;
    std::set<int> occluded_diseases;
    std::array<std::size_t, 3> cases_per_stage{};
    std::array<std::size_t, 3> qa_per_stage{};
};

struct DatasetStats {
    std::size_t total_cases = 0;
    std::size_t total_qa = 0;
    std::size_t rationale_slots = 0;
    std::map<std::string, SourceStats> per_source;
    std::array<std::size_t, 3> cases_per_stage{};
    std::array<std::size_t, 3> qa_per_stage{};
    std::map<int, std::map<std::string, std::size_t>> label_histogram; // over cases
    std::map<int, std::size_t> qa_per_disease;
};

DatasetStats dataset_stats(const std::vector<VqaSample>& samples, const std::vector<CaseRecord>& cases,
                           const DiseaseSchema& schema);
std::string stats_to_json(const DatasetStats& stats);
std::string format_stats_table(const DatasetStats& stats, const DiseaseSchema& schema);

// ---------------------------------------------------------------------------
// Synthetic manifests

struct SynthSource {
    std::string name;
    std::size_t n_cases = 0;
    double single_arch_fraction = 0.5;
    std::vector<int> single_arch_diseases;
    std::vector<int> occluded_diseases;
    std::size_t high_quality_cases = 0;
    double label_coverage = 1.0; // probability each applicable disease is labeled
};

struct SynthConfig {
    std::vector<SynthSource> sources;
};

// Three sources with the case counts 14,630 / 4,172 / 200.
SynthConfig reference_synth_config(const DiseaseSchema& schema);
// Same three sources scaled to n_cases in total.
SynthConfig scaled_synth_config(std::size_t n_cases, const DiseaseSchema& schema);

std::vector<CaseRecord> synth_cases(std::uint64_t seed, const SynthConfig& config, const DiseaseSchema& schema);
std::string synth_manifest(std::uint64_t seed, std::size_t n_cases, const DiseaseSchema& schema);

} // namespace iosvqa
