#include "iosvqa/schema.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>

#include <json.hpp>

#include "iosvqa/error.hpp"
#include "iosvqa/mesh_io.hpp"

namespace iosvqa {

using nlohmann::json;

std::string_view to_string(ScanType type) {
    return type == ScanType::SingleArch ? "single-arch" : "occluded-arches";
}

std::string_view to_string(Applicability applicability) {
    switch (applicability) {
    case Applicability::SingleArch: return "single-arch";
    case Applicability::OccludedArches: return "occluded-arches";
    case Applicability::Both: return "both";
    }
    return "both";
}

std::optional<ScanType> parse_scan_type(std::string_view text) {
    if (text == "single-arch") return ScanType::SingleArch;
    if (text == "occluded-arches") return ScanType::OccludedArches;
    return std::nullopt;
}

std::optional<Applicability> parse_applicability(std::string_view text) {
    if (text == "single-arch") return Applicability::SingleArch;
    if (text == "occluded-arches") return Applicability::OccludedArches;
    if (text == "both") return Applicability::Both;
    return std::nullopt;
}

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
    while (!out.empty()) {
        const char c = out.back();
        if (c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':') out.pop_back();
        else if (c == ' ') out.pop_back();
        else break;
    }
    return out;
}

bool Disease::applies_to(ScanType scan) const {
    switch (applicability) {
    case Applicability::Both: return true;
    case Applicability::SingleArch: return scan == ScanType::SingleArch;
    case Applicability::OccludedArches: return scan == ScanType::OccludedArches;
    }
    return false;
}

std::optional<std::string> Disease::canonical_label(std::string_view text) const {
    const std::string needle = normalize_text(text);
    for (const auto& entry : labels) {
        if (normalize_text(entry.label) == needle) return entry.label;
        for (const auto& alias : entry.aliases)
            if (normalize_text(alias) == needle) return entry.label;
    }
    return std::nullopt;
}

bool Disease::has_label(std::string_view label) const {
    return std::any_of(labels.begin(), labels.end(), [&](const LabelEntry& e) { return e.label == label; });
}

std::string Disease::display_name() const {
    std::string out = name;
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

DiseaseSchema::DiseaseSchema(std::vector<Disease> diseases) : diseases_(std::move(diseases)) {
    for (std::size_t i = 0; i < diseases_.size(); ++i) {
        const auto& d = diseases_[i];
        const std::string where = "disease " + std::to_string(d.id);
        if (d.id != static_cast<int>(i) + 1)
            throw Error(ErrorCode::SchemaViolation, "disease ids must run 1..C in order; found " + std::to_string(d.id) +
                                                        " at position " + std::to_string(i + 1));
        if (d.labels.size() < 2) throw Error(ErrorCode::SchemaViolation, where + " needs at least 2 labels");
        std::map<std::string, std::string> owner; // normalized form -> label
        for (const auto& entry : d.labels) {
            std::set<std::string> forms{normalize_text(entry.label)};
            for (const auto& a : entry.aliases) forms.insert(normalize_text(a));
            for (const auto& form : forms) {
                if (form.empty()) throw Error(ErrorCode::SchemaViolation, where + " has an empty label or alias");
                auto [it, inserted] = owner.emplace(form, entry.label);
                if (!inserted)
                    throw Error(ErrorCode::SchemaViolation,
                                where + ": '" + form + "' is claimed by both '" + it->second + "' and '" + entry.label + "'");
            }
        }
    }
}

const Disease* DiseaseSchema::find(int id) const {
    if (id < 1 || id > static_cast<int>(diseases_.size())) return nullptr;
    return &diseases_[static_cast<std::size_t>(id - 1)];
}

const Disease& DiseaseSchema::at(int id) const {
    const Disease* d = find(id);
    if (!d) throw Error(ErrorCode::UnknownDisease, "disease id " + std::to_string(id));
    return *d;
}

std::size_t DiseaseSchema::count(Applicability applicability) const {
    return static_cast<std::size_t>(std::count_if(diseases_.begin(), diseases_.end(),
                                                  [&](const Disease& d) { return d.applicability == applicability; }));
}

DiseaseSchema parse_schema(std::string_view json_text) {
    std::vector<Disease> diseases;
    try {
        const json doc = json::parse(json_text);
        for (const auto& item : doc.at("diseases")) {
            Disease d;
            d.id = item.at("id").get<int>();
            d.name = item.at("name").get<std::string>();
            const auto app = parse_applicability(item.at("applicability").get<std::string>());
            if (!app) throw Error(ErrorCode::SchemaViolation, "disease " + std::to_string(d.id) + ": bad applicability");
            d.applicability = *app;
            for (const auto& l : item.at("labels")) {
                LabelEntry entry;
                if (l.is_string()) {
                    entry.label = l.get<std::string>();
                } else {
                    entry.label = l.at("label").get<std::string>();
                    if (l.contains("aliases")) entry.aliases = l.at("aliases").get<std::vector<std::string>>();
                }
                d.labels.push_back(std::move(entry));
            }
            diseases.push_back(std::move(d));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("schema document: ") + e.what());
    }
    return DiseaseSchema(std::move(diseases));
}

DiseaseSchema load_schema(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return parse_schema({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

std::string schema_to_json(const DiseaseSchema& schema) {
    json doc;
    doc["diseases"] = json::array();
    for (const auto& d : schema.diseases()) {
        json labels = json::array();
        for (const auto& e : d.labels) labels.push_back({{"label", e.label}, {"aliases", e.aliases}});
        doc["diseases"].push_back(
            {{"id", d.id}, {"name", d.name}, {"applicability", std::string(to_string(d.applicability))}, {"labels", labels}});
    }
    return doc.dump(2) + "\n";
}

std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("IOSVQA_DATA_DIR")) return env;
    return IOSVQA_DATA_DIR;
}

} // namespace iosvqa
