#include <cstdio>
#include <unordered_map>

#include <json.hpp>

#include "iosvqa/error.hpp"
#include "iosvqa/eval.hpp"
#include "iosvqa/mesh_io.hpp"

namespace iosvqa {

using nlohmann::json;

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

json summary_json(const MetricSummary& m) {
    return {{"accuracy", m.accuracy}, {"f1", m.f1}, {"precision", m.precision}, {"recall", m.recall},
            {"parsing_rate", m.parsing_rate}};
}

// Per-disease confusion tally, indexed by position in the label set.
struct Tally {
    std::vector<std::size_t> tp, fp, fn;
    std::vector<bool> seen;
    std::size_t total = 0, parsable = 0, correct = 0;

    explicit Tally(std::size_t classes) : tp(classes), fp(classes), fn(classes), seen(classes) {}
};

std::size_t label_index(const Disease& d, std::string_view label) {
    for (std::size_t i = 0; i < d.labels.size(); ++i)
        if (d.labels[i].label == label) return i;
    throw Error(ErrorCode::SchemaViolation, "label '" + std::string(label) + "' is not in the label set of disease " +
                                                std::to_string(d.id));
}

} // namespace

std::vector<Prediction> parse_predictions(std::string_view text) {
    std::vector<Prediction> out;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const json obj = json::parse(line);
            Prediction p;
            p.sample_id = obj.at("sample_id").get<std::string>();
            const auto& text_field = obj.at("generated_text");
            p.generated_text = text_field.is_null() ? std::string() : text_field.get<std::string>();
            out.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::SchemaViolation, "predictions line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) { return parse_predictions(read_text(path)); }

std::string prediction_to_json_line(const Prediction& p) {
    return json{{"sample_id", p.sample_id}, {"generated_text", p.generated_text}}.dump();
}

Evaluation compute_metrics(const std::vector<Prediction>& predictions, const std::vector<VqaSample>& gold,
                           const DiseaseSchema& schema) {
    std::unordered_map<std::string, std::size_t> gold_index;
    for (std::size_t i = 0; i < gold.size(); ++i)
        if (!gold_index.emplace(gold[i].sample_id, i).second)
            throw Error(ErrorCode::SchemaViolation, "duplicate gold sample_id '" + gold[i].sample_id + "'");

    std::vector<const Prediction*> by_gold(gold.size(), nullptr);
    for (const auto& p : predictions) {
        const auto it = gold_index.find(p.sample_id);
        if (it == gold_index.end()) throw Error(ErrorCode::UnknownSampleId, "prediction for unknown sample '" + p.sample_id + "'");
        if (by_gold[it->second]) throw Error(ErrorCode::DuplicatePrediction, "second prediction for '" + p.sample_id + "'");
        by_gold[it->second] = &p;
    }

    Evaluation result;
    std::map<int, Tally> tallies;
    result.audit.reserve(gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const VqaSample& g = gold[i];
        const Disease& disease = schema.at(g.disease_id);
        auto [it, inserted] = tallies.try_emplace(g.disease_id, disease.labels.size());
        Tally& t = it->second;
        const std::size_t gi = label_index(disease, g.answer_label);

        AuditEntry entry;
        entry.sample_id = g.sample_id;
        entry.disease_id = g.disease_id;
        entry.gold = g.answer_label;
        entry.predicted = by_gold[i] != nullptr;
        entry.parsed = entry.predicted ? parse_answer(by_gold[i]->generated_text, disease) : ParsedAnswer{};

        ++t.total;
        t.seen[gi] = true;
        if (entry.parsed.parsable()) {
            ++t.parsable;
            const std::size_t pi = label_index(disease, entry.parsed.label);
            t.seen[pi] = true;
            if (pi == gi) {
                ++t.correct;
                ++t.tp[gi];
                entry.correct = true;
            } else {
                ++t.fp[pi];
                ++t.fn[gi];
            }
        } else {
            ++t.fn[gi];
        }
        result.audit.push_back(std::move(entry));
    }

    MetricsReport& report = result.report;
    std::size_t total = 0, parsable = 0, correct = 0, class_count = 0;
    double class_p = 0.0, class_r = 0.0, class_f1 = 0.0;
    for (const auto& [id, t] : tallies) {
        const Disease& disease = schema.at(id);
        DiseaseMetrics dm;
        dm.disease_id = id;
        dm.total = t.total;
        dm.parsable = t.parsable;
        dm.correct = t.correct;
        dm.accuracy = ratio(t.correct, t.total);
        dm.parsing_rate = ratio(t.parsable, t.total);
        for (std::size_t c = 0; c < disease.labels.size(); ++c) {
            if (!t.seen[c]) continue;
            ClassMetrics cm;
            cm.label = disease.labels[c].label;
            cm.tp = t.tp[c];
            cm.fp = t.fp[c];
            cm.fn = t.fn[c];
            cm.precision = ratio(cm.tp, cm.tp + cm.fp);
            cm.recall = ratio(cm.tp, cm.tp + cm.fn);
            cm.f1 = cm.precision + cm.recall > 0.0 ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;
            dm.macro_precision += cm.precision;
            dm.macro_recall += cm.recall;
            dm.macro_f1 += cm.f1;
            class_p += cm.precision;
            class_r += cm.recall;
            class_f1 += cm.f1;
            ++class_count;
            dm.classes.push_back(std::move(cm));
        }
        const auto n = static_cast<double>(dm.classes.size());
        dm.macro_precision /= n;
        dm.macro_recall /= n;
        dm.macro_f1 /= n;

        report.macro.accuracy += dm.accuracy;
        report.macro.precision += dm.macro_precision;
        report.macro.recall += dm.macro_recall;
        report.macro.f1 += dm.macro_f1;
        report.macro.parsing_rate += dm.parsing_rate;
        total += t.total;
        parsable += t.parsable;
        correct += t.correct;
        report.per_disease.emplace(id, std::move(dm));
    }
    if (!report.per_disease.empty()) {
        const auto n = static_cast<double>(report.per_disease.size());
        report.macro.accuracy /= n;
        report.macro.precision /= n;
        report.macro.recall /= n;
        report.macro.f1 /= n;
        report.macro.parsing_rate /= n;
    }
    if (class_count > 0) {
        const auto n = static_cast<double>(class_count);
        report.pooled.precision = class_p / n;
        report.pooled.recall = class_r / n;
        report.pooled.f1 = class_f1 / n;
    }
    report.pooled.accuracy = ratio(correct, total);
    report.pooled.parsing_rate = ratio(parsable, total);
    return result;
}

Evaluation evaluate_run(const std::filesystem::path& predictions, const std::filesystem::path& gold,
                        const std::filesystem::path& schema_path) {
    const DiseaseSchema schema = load_schema(schema_path);
    return compute_metrics(load_predictions(predictions), load_samples(gold), schema);
}

std::string report_to_json(const MetricsReport& report, const DiseaseSchema& schema, std::string_view audit_path) {
    json doc;
    doc["macro"] = summary_json(report.macro);
    doc["pooled"] = summary_json(report.pooled);
    json diseases = json::array();
    for (const auto& [id, dm] : report.per_disease) {
        json classes = json::array();
        for (const auto& c : dm.classes)
            classes.push_back({{"label", c.label}, {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"precision", c.precision},
                               {"recall", c.recall}, {"f1", c.f1}});
        diseases.push_back({{"disease_id", id},
                            {"name", schema.at(id).name},
                            {"samples", dm.total},
                            {"parsable", dm.parsable},
                            {"correct", dm.correct},
                            {"accuracy", dm.accuracy},
                            {"f1", dm.macro_f1},
                            {"precision", dm.macro_precision},
                            {"recall", dm.macro_recall},
                            {"parsing_rate", dm.parsing_rate},
                            {"classes", classes}});
    }
    doc["per_disease"] = diseases;
    doc["audit_log"] = audit_path.empty() ? json(nullptr) : json(std::string(audit_path));
    return doc.dump(2) + "\n";
}

std::string audit_to_jsonl(const std::vector<AuditEntry>& audit) {
    std::string out;
    for (const auto& e : audit) {
        json obj = {{"sample_id", e.sample_id},
                    {"disease_id", e.disease_id},
                    {"gold", e.gold},
                    {"parsed", e.parsed.parsable() ? json(e.parsed.label) : json(nullptr)},
                    {"outcome", std::string(to_string(e.parsed.outcome))},
                    {"predicted", e.predicted},
                    {"correct", e.correct}};
        out += obj.dump();
        out += '\n';
    }
    return out;
}

std::string format_report_table(const MetricsReport& report, const DiseaseSchema& schema, bool per_disease) {
    std::string out;
    char line[256];
    auto row = [&](const std::string& name, double acc, double f1, double p, double r, double pr) {
        std::snprintf(line, sizeof(line), "%-28s %7.2f %7.2f %7.2f %7.2f %7.2f\n", name.c_str(), 100 * acc, 100 * f1,
                      100 * p, 100 * r, 100 * pr);
        out += line;
    };
    std::snprintf(line, sizeof(line), "%-28s %7s %7s %7s %7s %7s\n", "", "Acc", "F1", "Preci", "Recall", "PR");
    out += line;
    if (per_disease) {
        for (const auto& [id, dm] : report.per_disease)
            row(std::to_string(id) + " " + schema.at(id).name, dm.accuracy, dm.macro_f1, dm.macro_precision,
                dm.macro_recall, dm.parsing_rate);
    }
    row("macro", report.macro.accuracy, report.macro.f1, report.macro.precision, report.macro.recall,
        report.macro.parsing_rate);
    return out;
}

} // namespace iosvqa
