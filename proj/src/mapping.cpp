#include <algorithm>
#include <charconv>
#include <cmath>

#include <json.hpp>

#include "iosvqa/error.hpp"
#include "iosvqa/vqa_builder.hpp"

namespace iosvqa {

using nlohmann::json;

namespace {

std::optional<double> as_number(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

MatchExpr parse_match(const json& m) {
    MatchExpr expr;
    if (!m.is_object() || m.empty()) throw Error(ErrorCode::SchemaViolation, "rule 'match' must be a non-empty object");
    if (m.contains("equals")) {
        expr.kind = MatchExpr::Kind::Equals;
        expr.value = m.at("equals").get<std::string>();
    } else if (m.contains("in")) {
        expr.kind = MatchExpr::Kind::InSet;
        expr.set = m.at("in").get<std::vector<std::string>>();
        std::sort(expr.set.begin(), expr.set.end());
        expr.set.erase(std::unique(expr.set.begin(), expr.set.end()), expr.set.end());
    } else if (m.contains("regex")) {
        expr.kind = MatchExpr::Kind::Pattern;
        expr.pattern = m.at("regex").get<std::string>();
        try {
            expr.compiled = std::make_shared<const std::regex>(expr.pattern, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            throw Error(ErrorCode::SchemaViolation, "invalid pattern '" + expr.pattern + "': " + e.what());
        }
    } else {
        expr.kind = MatchExpr::Kind::Range;
        for (const auto& [key, value] : m.items()) {
            if (!value.is_number()) throw Error(ErrorCode::SchemaViolation, "range bound '" + key + "' is not a number");
            const double bound = value.get<double>();
            if (key == "gt") expr.gt = bound;
            else if (key == "gte") expr.gte = bound;
            else if (key == "lt") expr.lt = bound;
            else if (key == "lte") expr.lte = bound;
            else throw Error(ErrorCode::SchemaViolation, "unknown match operator '" + key + "'");
        }
    }
    return expr;
}

} // namespace

bool MatchExpr::matches(std::string_view text) const {
    switch (kind) {
    case Kind::Equals: return text == value;
    case Kind::InSet: return std::binary_search(set.begin(), set.end(), text, std::less<>());
    case Kind::Pattern: {
        if (!compiled) return false;
        return std::regex_match(text.begin(), text.end(), *compiled);
    }
    case Kind::Range: {
        const auto v = as_number(text);
        if (!v) return false;
        if (gt && !(*v > *gt)) return false;
        if (gte && !(*v >= *gte)) return false;
        if (lt && !(*v < *lt)) return false;
        if (lte && !(*v <= *lte)) return false;
        return true;
    }
    }
    return false;
}

bool MatchExpr::operator==(const MatchExpr& o) const {
    return kind == o.kind && value == o.value && set == o.set && pattern == o.pattern && gt == o.gt && gte == o.gte &&
           lt == o.lt && lte == o.lte;
}

std::vector<MappingRule> parse_rules(std::string_view json_text, const DiseaseSchema& schema) {
    std::vector<MappingRule> rules;
    try {
        const json doc = json::parse(json_text);
        const json& list = doc.is_object() ? doc.at("rules") : doc;
        for (const auto& item : list) {
            MappingRule rule;
            rule.source_field = item.at("field").get<std::string>();
            rule.predicate = parse_match(item.at("match"));
            rule.disease_id = item.at("disease_id").get<int>();
            const Disease& disease = schema.at(rule.disease_id);
            const auto label = disease.canonical_label(item.at("label").get<std::string>());
            if (!label)
                throw Error(ErrorCode::SchemaViolation, "rule label '" + item.at("label").get<std::string>() +
                                                            "' not in label set of disease " + std::to_string(rule.disease_id));
            rule.label = *label;
            rule.priority = item.value("priority", 0);
            rules.push_back(std::move(rule));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("rule table: ") + e.what());
    }
    validate_rules(rules);
    return rules;
}

void validate_rules(const std::vector<MappingRule>& rules) {
    for (std::size_t i = 0; i < rules.size(); ++i) {
        for (std::size_t j = i + 1; j < rules.size(); ++j) {
            const auto& a = rules[i];
            const auto& b = rules[j];
            if (a.disease_id == b.disease_id && a.priority == b.priority && a.source_field == b.source_field &&
                a.predicate == b.predicate && a.label != b.label)
                throw Error(ErrorCode::RuleConflict, "rules " + std::to_string(i) + " and " + std::to_string(j) +
                                                         " share a predicate and priority but map disease " +
                                                         std::to_string(a.disease_id) + " to different labels");
        }
    }
}

std::map<int, std::string> apply_mapping(const RawRecord& record, const std::vector<MappingRule>& rules) {
    struct Winner {
        int priority;
        std::size_t rule;
    };
    std::map<int, Winner> best;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto& rule = rules[i];
        const auto field = record.find(rule.source_field);
        if (field == record.end() || !rule.predicate.matches(field->second)) continue;
        auto it = best.find(rule.disease_id);
        if (it == best.end() || rule.priority > it->second.priority) best[rule.disease_id] = {rule.priority, i};
    }
    // Ties at the winning priority are checked in a second pass.
    std::map<int, std::string> out;
    for (const auto& [disease, winner] : best) {
        const std::string& label = rules[winner.rule].label;
        for (std::size_t i = 0; i < rules.size(); ++i) {
            const auto& rule = rules[i];
            if (rule.disease_id != disease || rule.priority != winner.priority || rule.label == label) continue;
            const auto field = record.find(rule.source_field);
            if (field != record.end() && rule.predicate.matches(field->second))
                throw Error(ErrorCode::RuleConflict, "rules " + std::to_string(winner.rule) + " and " + std::to_string(i) +
                                                         " both fire at priority " + std::to_string(winner.priority) +
                                                         " for disease " + std::to_string(disease));
        }
        out[disease] = label;
    }
    return out;
}

} // namespace iosvqa
