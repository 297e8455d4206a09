#include <cctype>
#include <set>

#include "iosvqa/eval.hpp"

namespace iosvqa {

namespace {

bool is_word_byte(char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return c >= 0x80 || std::isalnum(c) || c == '_';
}

bool contains_word(std::string_view text, std::string_view needle) {
    if (needle.empty()) return false;
    for (std::size_t pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + 1)) {
        const bool left = pos == 0 || !is_word_byte(text[pos - 1]) || !is_word_byte(needle.front());
        const std::size_t end = pos + needle.size();
        const bool right = end == text.size() || !is_word_byte(text[end]) || !is_word_byte(needle.back());
        if (left && right) return true;
    }
    return false;
}

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

ParsedAnswer cascade(std::string_view raw, const Disease& disease) {
    const std::string text = normalize_text(raw);
    if (text.empty()) return {ParseOutcome::Empty, {}};
    if (auto label = disease.canonical_label(text)) return {ParseOutcome::Label, *label};

    std::set<std::string> hits;
    for (const auto& entry : disease.labels) {
        if (contains_word(text, normalize_text(entry.label))) {
            hits.insert(entry.label);
            continue;
        }
        for (const auto& alias : entry.aliases) {
            if (contains_word(text, normalize_text(alias))) {
                hits.insert(entry.label);
                break;
            }
        }
    }
    if (hits.empty()) return {ParseOutcome::NoMatch, {}};
    if (hits.size() > 1) return {ParseOutcome::Ambiguous, {}};
    return {ParseOutcome::Label, *hits.begin()};
}

// Remainder of the first line that starts with "Answer:", cut at "Rationale:".
std::optional<std::string_view> answer_segment(std::string_view text) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        const std::size_t start = line.find_first_not_of(" \t\r");
        if (start != std::string_view::npos) {
            line.remove_prefix(start);
            if (line.size() >= 7 && lower_ascii(line.substr(0, 7)) == "answer:") {
                line.remove_prefix(7);
                const std::size_t cut = lower_ascii(line).find("rationale:");
                return cut == std::string_view::npos ? line : line.substr(0, cut);
            }
        }
        pos = end + 1;
    }
    return std::nullopt;
}

} // namespace

std::string_view to_string(ParseOutcome outcome) {
    switch (outcome) {
    case ParseOutcome::Label: return "label";
    case ParseOutcome::Empty: return "empty";
    case ParseOutcome::NoMatch: return "no-match";
    case ParseOutcome::Ambiguous: return "ambiguous";
    }
    return "empty";
}

ParsedAnswer parse_answer(std::string_view text, const Disease& disease) {
    if (const auto segment = answer_segment(text)) {
        ParsedAnswer structured = cascade(*segment, disease);
        if (structured.parsable()) return structured;
    }
    return cascade(text, disease);
}

} // namespace iosvqa
