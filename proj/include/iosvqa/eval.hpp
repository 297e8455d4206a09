#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iosvqa/schema.hpp"
#include "iosvqa/vqa_builder.hpp"

namespace iosvqa {

enum class ParseOutcome { Label, Empty, NoMatch, Ambiguous };

std::string_view to_string(ParseOutcome outcome);

struct ParsedAnswer {
    ParseOutcome outcome = ParseOutcome::Empty;
    std::string label; // set only when outcome == Label

    bool parsable() const { return outcome == ParseOutcome::Label; }
};

// Maps free-form model output onto the disease's closed label set.
//
// The text is normalized (see normalize_text) and matched in order:
//   1. exact equality with a label or alias,
//   2. whole-word containment of exactly one label (through any of its forms).
// Zero containment hits give NoMatch, hits for two or more labels give
// Ambiguous, blank text gives Empty. When a line starts with "Answer:", the
// cascade first runs on that line's remainder (up to any "Rationale:").
ParsedAnswer parse_answer(std::string_view text, const Disease& disease);

struct Prediction {
    std::string sample_id;
    std::string generated_text;
};

std::vector<Prediction> parse_predictions(std::string_view text);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);
std::string prediction_to_json_line(const Prediction& prediction);

struct ClassMetrics {
    std::string label;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct DiseaseMetrics {
    int disease_id = 0;
    std::size_t total = 0;
    std::size_t parsable = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double parsing_rate = 0.0;
    // Classes of the label set that occur in the gold labels or parsed predictions.
    std::vector<ClassMetrics> classes;
};

struct MetricSummary {
    double accuracy = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double parsing_rate = 0.0;
};

struct MetricsReport {
    std::map<int, DiseaseMetrics> per_disease;
    // Headline: mean over diseases of the per-disease (class-macro) values.
    MetricSummary macro;
    // Alternative aggregation: P/R/F1 averaged over every (disease, class)
    // pair at once; accuracy and parsing rate pooled over samples.
    MetricSummary pooled;
};

struct AuditEntry {
    std::string sample_id;
    int disease_id = 0;
    std::string gold;
    ParsedAnswer parsed;
    bool predicted = false; // false when the sample had no prediction
    bool correct = false;
};

struct Evaluation {
    MetricsReport report;
    std::vector<AuditEntry> audit;
};

// Missing predictions count as empty (unparsable) answers. An unparsable
// answer adds a false negative for the gold class and no false positive.
Evaluation compute_metrics(const std::vector<Prediction>& predictions, const std::vector<VqaSample>& gold,
                           const DiseaseSchema& schema);

Evaluation evaluate_run(const std::filesystem::path& predictions, const std::filesystem::path& gold,
                        const std::filesystem::path& schema);

std::string report_to_json(const MetricsReport& report, const DiseaseSchema& schema, std::string_view audit_path = {});
std::string audit_to_jsonl(const std::vector<AuditEntry>& audit);
// Plain-text table with columns Acc, F1, Preci, Recall, PR in percent.
std::string format_report_table(const MetricsReport& report, const DiseaseSchema& schema, bool per_disease = true);

} // namespace iosvqa
