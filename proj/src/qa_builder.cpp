#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "iosvqa/error.hpp"
#include "iosvqa/mesh_io.hpp"
#include "iosvqa/random.hpp"
#include "iosvqa/vqa_builder.hpp"

namespace iosvqa {

using nlohmann::json;

namespace {

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

// Largest-remainder apportionment of `total` items over the three stages.
std::array<std::size_t, 3> apportion(std::size_t total, const StageFractions& f) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (Stage s : kStages) {
        const double exact = f[s] * static_cast<double>(total);
        const auto i = static_cast<std::size_t>(s);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        remainder[i] = exact - std::floor(exact);
        assigned += counts[i];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total; k = (k + 1) % 3, ++assigned) ++counts[order[k]];
    return counts;
}

void check_fractions(const StageFractions& f, const std::string& source) {
    const double sum = f.stage1 + f.stage2 + f.test;
    for (Stage s : kStages) {
        if (!std::isfinite(f[s]) || f[s] <= 0.0 || f[s] > 1.0)
            throw Error(ErrorCode::InfeasiblePolicy, "source '" + source + "': every stage fraction must lie in (0, 1]");
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw Error(ErrorCode::InfeasiblePolicy, "source '" + source + "': stage fractions sum to " + std::to_string(sum));
}

StageFractions parse_fractions(const json& j) {
    StageFractions f;
    f.stage1 = j.at("stage1").get<double>();
    f.stage2 = j.at("stage2").get<double>();
    f.test = j.at("test").get<double>();
    return f;
}

std::array<std::size_t, 3> parse_counts(const json& j) {
    return {j.at("stage1").get<std::size_t>(), j.at("stage2").get<std::size_t>(), j.at("test").get<std::size_t>()};
}

} // namespace

QuestionTemplates parse_templates(std::string_view json_text) {
    QuestionTemplates templates;
    try {
        const json doc = json::parse(json_text);
        for (const auto& [key, list] : doc.items()) {
            std::size_t used = 0;
            const int id = std::stoi(key, &used);
            if (used != key.size()) throw Error(ErrorCode::SchemaViolation, "template key '" + key + "' is not a disease id");
            templates[id] = list.get<std::vector<std::string>>();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("templates: ") + e.what());
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::SchemaViolation, "templates: keys must be disease ids");
    }
    return templates;
}

QuestionTemplates load_templates(const std::filesystem::path& path) { return parse_templates(read_text(path)); }

std::vector<VqaSample> generate_qa(const CaseRecord& record, const DiseaseSchema& schema,
                                   const QuestionTemplates& templates, std::size_t k_questions, std::uint64_t seed,
                                   Stage stage) {
    if (k_questions == 0) throw Error(ErrorCode::InvalidArgument, "k_questions must be at least 1");
    std::vector<VqaSample> out;
    out.reserve(record.labels.size() * k_questions);
    for (const auto& [disease_id, label] : record.labels) {
        const Disease& disease = schema.at(disease_id);
        const auto it = templates.find(disease_id);
        if (it == templates.end() || it->second.empty())
            throw Error(ErrorCode::MissingTemplate, "no question template for disease " + std::to_string(disease_id));
        const auto& list = it->second;
        const auto picks = sample_indices(list.size(), k_questions, hash64(seed, record.case_id, static_cast<std::uint64_t>(disease_id)));
        for (std::size_t j = 0; j < picks.size(); ++j) {
            VqaSample s;
            s.sample_id = record.case_id + "/" + std::to_string(disease_id) + "/" + std::to_string(j);
            s.case_id = record.case_id;
            s.disease_id = disease_id;
            s.question = replace_all(list[picks[j]], "{disease}", disease.display_name());
            s.answer_label = label;
            s.stage = stage;
            out.push_back(std::move(s));
        }
    }
    return out;
}

const StageFractions& SplitPolicy::fractions(const std::string& source) const {
    const auto it = per_source.find(source);
    return it == per_source.end() ? default_fractions : it->second;
}

std::map<std::string, Stage> split_stages(const std::vector<CaseRecord>& cases, const SplitPolicy& policy,
                                          std::uint64_t seed) {
    if (cases.empty()) throw Error(ErrorCode::EmptySource, "no cases to split");
    std::map<std::string, std::vector<const CaseRecord*>> by_source;
    for (const auto& c : cases) by_source[c.source].push_back(&c);
    for (const auto& [name, f] : policy.per_source)
        if (!by_source.count(name)) throw Error(ErrorCode::EmptySource, "policy names source '" + name + "' with no cases");
    for (const auto& name : policy.force_high_quality_to_stage2)
        if (!by_source.count(name)) throw Error(ErrorCode::EmptySource, "policy names source '" + name + "' with no cases");

    std::map<std::string, Stage> assignment;
    for (auto& [source, members] : by_source) {
        const StageFractions& f = policy.fractions(source);
        check_fractions(f, source);
        std::sort(members.begin(), members.end(),
                  [](const CaseRecord* a, const CaseRecord* b) { return a->case_id < b->case_id; });

        const bool forcing = policy.force_high_quality_to_stage2.count(source) > 0;
        std::vector<const CaseRecord*> rest;
        std::size_t forced = 0;
        for (const auto* c : members) {
            if (forcing && c->quality == Quality::High) {
                assignment[c->case_id] = Stage::Stage2;
                ++forced;
            } else {
                rest.push_back(c);
            }
        }

        auto counts = apportion(rest.size(), f);
        const std::array<std::size_t, 3> fixed{0, forced, 0};
        for (std::size_t s = 0; s < 3; ++s) {
            if (counts[s] + fixed[s] > 0) continue;
            // Borrow one case from the stage that can best spare it.
            std::size_t donor = 3;
            for (std::size_t d = 0; d < 3; ++d) {
                if (d == s || counts[d] == 0 || counts[d] + fixed[d] < 2) continue;
                if (donor == 3 || counts[d] > counts[donor]) donor = d;
            }
            if (donor == 3)
                throw Error(ErrorCode::InfeasiblePolicy, "source '" + source + "' has " + std::to_string(members.size()) +
                                                             " cases, too few to cover all three stages");
            --counts[donor];
            ++counts[s];
        }

        const auto order = sample_indices(rest.size(), rest.size(), hash64(seed, "split:" + source));
        std::size_t cursor = 0;
        for (Stage s : kStages) {
            for (std::size_t k = 0; k < counts[static_cast<std::size_t>(s)]; ++k)
                assignment[rest[order[cursor++]]->case_id] = s;
        }
    }
    return assignment;
}

std::size_t flag_rationales(std::vector<VqaSample>& samples, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "rationale fraction must lie in [0, 1]");
    std::vector<std::size_t> stage2;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].stage == Stage::Stage2) stage2.push_back(i);
    // The small nudge keeps e.g. 0.29 * 100 at 29 despite binary rounding.
    const auto target = std::min<std::size_t>(
        stage2.size(), static_cast<std::size_t>(std::floor(fraction * static_cast<double>(stage2.size()) + 1e-9)));
    for (std::size_t pick : sample_indices(stage2.size(), target, hash64(seed, "rationale"))) {
        auto& s = samples[stage2[pick]];
        s.has_rationale_slot = true;
        s.rationale_source = "pending";
    }
    return target;
}

std::size_t QuestionPolicy::k(const std::string& source, Stage stage) const {
    const auto it = per_source.find(source);
    const auto& counts = it == per_source.end() ? default_k : it->second;
    return counts[static_cast<std::size_t>(stage)];
}

BuildPolicy parse_build_policy(std::string_view json_text) {
    BuildPolicy policy;
    try {
        const json doc = json::parse(json_text);
        if (doc.contains("split")) {
            const auto& split = doc.at("split");
            if (split.contains("default")) policy.split.default_fractions = parse_fractions(split.at("default"));
            if (split.contains("per_source"))
                for (const auto& [name, f] : split.at("per_source").items()) policy.split.per_source[name] = parse_fractions(f);
            if (split.contains("force_high_quality_to_stage2"))
                for (const auto& name : split.at("force_high_quality_to_stage2"))
                    policy.split.force_high_quality_to_stage2.insert(name.get<std::string>());
        }
        if (doc.contains("questions")) {
            const auto& q = doc.at("questions");
            if (q.contains("default")) policy.questions.default_k = parse_counts(q.at("default"));
            if (q.contains("per_source"))
                for (const auto& [name, c] : q.at("per_source").items()) policy.questions.per_source[name] = parse_counts(c);
        }
        policy.rationale_fraction = doc.value("rationale_fraction", policy.rationale_fraction);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("build policy: ") + e.what());
    }
    for (const auto& [name, counts] : policy.questions.per_source)
        for (auto k : counts)
            if (k == 0) throw Error(ErrorCode::InfeasiblePolicy, "question count 0 for source '" + name + "'");
    for (auto k : policy.questions.default_k)
        if (k == 0) throw Error(ErrorCode::InfeasiblePolicy, "default question count 0");
    if (!(policy.rationale_fraction >= 0.0 && policy.rationale_fraction <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "rationale_fraction must lie in [0, 1]");
    return policy;
}

BuildPolicy load_build_policy(const std::filesystem::path& path) { return parse_build_policy(read_text(path)); }

BuiltDataset build_dataset(const std::vector<CaseRecord>& cases, const DiseaseSchema& schema,
                           const QuestionTemplates& templates, const BuildPolicy& policy, std::uint64_t seed) {
    BuiltDataset out;
    out.assignment = split_stages(cases, policy.split, seed);
    for (const auto& c : cases) {
        const Stage stage = out.assignment.at(c.case_id);
        auto samples = generate_qa(c, schema, templates, policy.questions.k(c.source, stage), seed, stage);
        std::move(samples.begin(), samples.end(), std::back_inserter(out.samples));
    }
    flag_rationales(out.samples, policy.rationale_fraction, seed);
    return out;
}

} // namespace iosvqa
