#include <set>

#include <json.hpp>

#include "iosvqa/error.hpp"
#include "iosvqa/mesh_io.hpp"
#include "iosvqa/vqa_builder.hpp"

namespace iosvqa {

using nlohmann::json;

namespace {

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        fn(line_no, line);
    }
}

std::string text_of(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

std::string required_string(const json& obj, const char* key) {
    if (!obj.contains(key) || !obj.at(key).is_string())
        throw Error(ErrorCode::SchemaViolation, std::string("field '") + key + "' missing or not a string");
    return obj.at(key).get<std::string>();
}

CaseRecord parse_case(const json& obj, const DiseaseSchema& schema) {
    if (!obj.is_object()) throw Error(ErrorCode::SchemaViolation, "record is not an object");
    CaseRecord rec;
    rec.case_id = required_string(obj, "case_id");
    if (rec.case_id.empty()) throw Error(ErrorCode::SchemaViolation, "empty case_id");
    rec.source = required_string(obj, "source");
    if (rec.source.empty()) throw Error(ErrorCode::SchemaViolation, "empty source");
    const auto scan = parse_scan_type(required_string(obj, "scan_type"));
    if (!scan) throw Error(ErrorCode::SchemaViolation, "scan_type must be single-arch or occluded-arches");
    rec.scan_type = *scan;
    rec.mesh_path = required_string(obj, "mesh_path");
    const std::string quality = required_string(obj, "quality");
    if (quality == "high") rec.quality = Quality::High;
    else if (quality == "noisy") rec.quality = Quality::Noisy;
    else throw Error(ErrorCode::SchemaViolation, "quality must be high or noisy");

    if (!obj.contains("labels") || !obj.at("labels").is_object())
        throw Error(ErrorCode::SchemaViolation, "field 'labels' missing or not an object");
    for (const auto& [key, value] : obj.at("labels").items()) {
        int id = 0;
        try {
            std::size_t used = 0;
            id = std::stoi(key, &used);
            if (used != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
            throw Error(ErrorCode::SchemaViolation, "label key '" + key + "' is not a disease id");
        }
        const Disease* disease = schema.find(id);
        if (!disease) throw Error(ErrorCode::UnknownDisease, "disease id " + key);
        if (!disease->applies_to(rec.scan_type))
            throw Error(ErrorCode::InapplicableDisease, "disease " + key + " (" + disease->name + ") does not apply to " +
                                                            std::string(to_string(rec.scan_type)) + " scans");
        if (!value.is_string()) throw Error(ErrorCode::SchemaViolation, "label for disease " + key + " is not a string");
        const auto label = disease->canonical_label(value.get<std::string>());
        if (!label)
            throw Error(ErrorCode::SchemaViolation,
                        "label '" + value.get<std::string>() + "' is not in the label set of disease " + key);
        rec.labels[id] = *label;
    }
    return rec;
}

} // namespace

std::string_view to_string(Quality quality) { return quality == Quality::High ? "high" : "noisy"; }

std::string_view to_string(Stage stage) {
    switch (stage) {
    case Stage::Stage1: return "stage1";
    case Stage::Stage2: return "stage2";
    case Stage::Test: return "test";
    }
    return "stage1";
}

std::optional<Stage> parse_stage(std::string_view text) {
    for (Stage s : kStages)
        if (to_string(s) == text) return s;
    return std::nullopt;
}

std::vector<CaseRecord> parse_manifest(std::string_view text, const DiseaseSchema& schema) {
    std::vector<CaseRecord> records;
    std::set<std::string> seen;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        try {
            json obj;
            try {
                obj = json::parse(line);
            } catch (const json::exception& e) {
                throw Error(ErrorCode::SchemaViolation, std::string("invalid JSON: ") + e.what());
            }
            CaseRecord rec = parse_case(obj, schema);
            if (!seen.insert(rec.case_id).second)
                throw Error(ErrorCode::SchemaViolation, "duplicate case_id '" + rec.case_id + "'");
            records.push_back(std::move(rec));
        } catch (const Error& e) {
            throw Error(e.code(), "manifest line " + std::to_string(line_no) + ": " + e.detail());
        }
    });
    return records;
}

std::vector<CaseRecord> load_manifest(const std::filesystem::path& path, const DiseaseSchema& schema) {
    return parse_manifest(text_of(path), schema);
}

std::string case_to_json_line(const CaseRecord& record) {
    json labels = json::object();
    for (const auto& [id, label] : record.labels) labels[std::to_string(id)] = label;
    json obj = {{"case_id", record.case_id},
                {"source", record.source},
                {"scan_type", std::string(to_string(record.scan_type))},
                {"mesh_path", record.mesh_path},
                {"labels", labels},
                {"quality", std::string(to_string(record.quality))}};
    return obj.dump();
}

std::string write_manifest(const std::vector<CaseRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += case_to_json_line(r);
        out += '\n';
    }
    return out;
}

std::string sample_to_json_line(const VqaSample& s) {
    json obj = {{"sample_id", s.sample_id},
                {"case_id", s.case_id},
                {"disease_id", s.disease_id},
                {"question", s.question},
                {"answer_label", s.answer_label},
                {"rationale", s.rationale ? json(*s.rationale) : json(nullptr)},
                {"has_rationale_slot", s.has_rationale_slot},
                {"rationale_source", s.rationale_source ? json(*s.rationale_source) : json(nullptr)},
                {"stage", std::string(to_string(s.stage))}};
    return obj.dump();
}

std::string write_samples(const std::vector<VqaSample>& samples) {
    std::string out;
    for (const auto& s : samples) {
        out += sample_to_json_line(s);
        out += '\n';
    }
    return out;
}

std::vector<VqaSample> parse_samples(std::string_view text) {
    std::vector<VqaSample> samples;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        try {
            const json obj = json::parse(line);
            VqaSample s;
            s.sample_id = obj.at("sample_id").get<std::string>();
            s.case_id = obj.at("case_id").get<std::string>();
            s.disease_id = obj.at("disease_id").get<int>();
            s.question = obj.at("question").get<std::string>();
            s.answer_label = obj.at("answer_label").get<std::string>();
            if (obj.contains("rationale") && !obj.at("rationale").is_null())
                s.rationale = obj.at("rationale").get<std::string>();
            s.has_rationale_slot = obj.value("has_rationale_slot", false);
            if (obj.contains("rationale_source") && !obj.at("rationale_source").is_null())
                s.rationale_source = obj.at("rationale_source").get<std::string>();
            const auto stage = parse_stage(obj.at("stage").get<std::string>());
            if (!stage) throw Error(ErrorCode::SchemaViolation, "unknown stage");
            s.stage = *stage;
            if (s.rationale && !s.has_rationale_slot)
                throw Error(ErrorCode::SchemaViolation, "rationale present without a rationale slot");
            samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::SchemaViolation, "dataset line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.code(), "dataset line " + std::to_string(line_no) + ": " + e.detail());
        }
    });
    return samples;
}

std::vector<VqaSample> load_samples(const std::filesystem::path& path) { return parse_samples(text_of(path)); }

} // namespace iosvqa
