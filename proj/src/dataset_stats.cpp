#include <cstdio>
#include <unordered_map>

#include <json.hpp>

#include "iosvqa/vqa_builder.hpp"

namespace iosvqa {

using nlohmann::json;

namespace {

constexpr const char* kUnknownSource = "(unknown)";

json stage_counts(const std::array<std::size_t, 3>& counts) {
    json j = json::object();
    for (Stage s : kStages) j[std::string(to_string(s))] = counts[static_cast<std::size_t>(s)];
    return j;
}

} // namespace

DatasetStats dataset_stats(const std::vector<VqaSample>& samples, const std::vector<CaseRecord>& cases,
                           const DiseaseSchema& schema) {
    DatasetStats stats;
    std::unordered_map<std::string, const CaseRecord*> by_id;
    for (const auto& c : cases) {
        by_id.emplace(c.case_id, &c);
        auto& src = stats.per_source[c.source];
        ++src.cases;
        ++stats.total_cases;
        if (c.scan_type == ScanType::SingleArch) ++src.single_arch;
        else ++src.occluded;
        if (c.quality == Quality::High) ++src.high_quality;
        for (const auto& [id, label] : c.labels) {
            (c.scan_type == ScanType::SingleArch ? src.single_arch_diseases : src.occluded_diseases).insert(id);
            ++stats.label_histogram[id][label];
        }
    }
    // Diseases in the schema with no labeled case still get an (empty) row.
    for (const auto& d : schema.diseases()) stats.label_histogram.try_emplace(d.id);

    std::unordered_map<std::string, Stage> case_stage;
    for (const auto& s : samples) {
        const auto it = by_id.find(s.case_id);
        const std::string source = it == by_id.end() ? kUnknownSource : it->second->source;
        auto& src = stats.per_source[source];
        const auto st = static_cast<std::size_t>(s.stage);
        ++src.qa_pairs;
        ++src.qa_per_stage[st];
        ++stats.total_qa;
        ++stats.qa_per_stage[st];
        ++stats.qa_per_disease[s.disease_id];
        if (s.has_rationale_slot) ++stats.rationale_slots;
        if (case_stage.emplace(s.case_id, s.stage).second) {
            ++src.cases_per_stage[st];
            ++stats.cases_per_stage[st];
            if (it == by_id.end()) {
                ++src.cases;
                ++stats.total_cases;
            }
        }
    }
    return stats;
}

std::string stats_to_json(const DatasetStats& stats) {
    json doc;
    doc["total_cases"] = stats.total_cases;
    doc["total_qa"] = stats.total_qa;
    doc["rationale_slots"] = stats.rationale_slots;
    doc["cases_per_stage"] = stage_counts(stats.cases_per_stage);
    doc["qa_per_stage"] = stage_counts(stats.qa_per_stage);
    json sources = json::object();
    for (const auto& [name, s] : stats.per_source) {
        sources[name] = {{"cases", s.cases},
                         {"single_arch_cases", s.single_arch},
                         {"occluded_cases", s.occluded},
                         {"high_quality_cases", s.high_quality},
                         {"single_arch_diseases", s.single_arch_diseases.size()},
                         {"occluded_diseases", s.occluded_diseases.size()},
                         {"qa_pairs", s.qa_pairs},
                         {"cases_per_stage", stage_counts(s.cases_per_stage)},
                         {"qa_per_stage", stage_counts(s.qa_per_stage)}};
    }
    doc["per_source"] = sources;
    json diseases = json::object();
    for (const auto& [id, hist] : stats.label_histogram) {
        json h = json::object();
        for (const auto& [label, n] : hist) h[label] = n;
        const auto qa = stats.qa_per_disease.find(id);
        diseases[std::to_string(id)] = {{"labels", h}, {"qa_pairs", qa == stats.qa_per_disease.end() ? 0 : qa->second}};
    }
    doc["per_disease"] = diseases;
    return doc.dump(2) + "\n";
}

std::string format_stats_table(const DatasetStats& stats, const DiseaseSchema& schema) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-16s %8s %8s %8s %5s %5s %9s %9s %9s %9s\n", "source", "#cases", "single",
                  "occluded", "#SD", "#OD", "#VQA", "stage1", "stage2", "test");
    out += line;
    std::set<int> all_sd, all_od;
    std::size_t single = 0, occluded = 0;
    for (const auto& [name, s] : stats.per_source) {
        std::snprintf(line, sizeof(line), "%-16s %8zu %8zu %8zu %5zu %5zu %9zu %9zu %9zu %9zu\n", name.c_str(), s.cases,
                      s.single_arch, s.occluded, s.single_arch_diseases.size(), s.occluded_diseases.size(), s.qa_pairs,
                      s.qa_per_stage[0], s.qa_per_stage[1], s.qa_per_stage[2]);
        out += line;
        all_sd.insert(s.single_arch_diseases.begin(), s.single_arch_diseases.end());
        all_od.insert(s.occluded_diseases.begin(), s.occluded_diseases.end());
        single += s.single_arch;
        occluded += s.occluded;
    }
    std::snprintf(line, sizeof(line), "%-16s %8zu %8zu %8zu %5zu %5zu %9zu %9zu %9zu %9zu\n", "total", stats.total_cases,
                  single, occluded, all_sd.size(), all_od.size(), stats.total_qa, stats.qa_per_stage[0],
                  stats.qa_per_stage[1], stats.qa_per_stage[2]);
    out += line;
    std::snprintf(line, sizeof(line), "cases per stage: stage1 %zu, stage2 %zu, test %zu; rationale slots %zu; schema C=%zu\n",
                  stats.cases_per_stage[0], stats.cases_per_stage[1], stats.cases_per_stage[2], stats.rationale_slots,
                  schema.size());
    out += line;
    return out;
}

} // namespace iosvqa
