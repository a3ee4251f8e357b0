#include "bladerag/extraction.hpp"

#include <algorithm>
#include <regex>

#include "bladerag/prompting.hpp"
#include "bladerag/text_utils.hpp"

using nlohmann::json;

namespace bladerag {

namespace {

// Fragments of the five analytical questions; response lines echoing a
// question are not assertions and are skipped when scanning for damage
// statements (the question text enumerates every taxonomy term).
const std::vector<std::string>& question_phrases() {
    static const std::vector<std::string> phrases = {
        "how many blades are visible",
        "is there visible damage on any of the turbine blades",
        "what specific type of damage can be identified",
        "provide a detailed description of the damage observed",
        "rate the severity of the damage on a scale",
    };
    return phrases;
}

const std::vector<std::string>& affirmative_phrases() {
    static const std::vector<std::string> phrases = {
        "damage is detected",
        "there is damage",
        "signs of damage",
        "there is visible damage",
        "damage is observed",
        "damage is visible",
        "damage is present",
    };
    return phrases;
}

const std::vector<std::string>& no_damage_phrases() {
    static const std::vector<std::string> phrases = {
        "no visible damage",
        "no damage",
        "no evidence of damage",
        "free of damage",
    };
    return phrases;
}

// Damage words the model may assert that are not part of the closed
// taxonomy; surfaced separately so they never contaminate grouping.
const std::vector<std::string>& extra_term_lexicon() {
    static const std::vector<std::string> terms = {
        "burn mark", "burning", "burnt", "charring", "scorch", "dirt",
        "stain",     "scratch", "hole",  "gouge",    "pitting",
    };
    return terms;
}

bool is_question_echo(const std::string& line) {
    std::string lowered = text::ascii_lower(line);
    for (const auto& phrase : question_phrases()) {
        if (lowered.find(phrase) != std::string::npos) return true;
    }
    return false;
}

// Response text with question-echo lines removed; the scanning surface for
// damage statements.
std::string strip_question_echoes(const std::string& response) {
    std::vector<std::string> kept;
    for (auto& line : text::split_lines(response)) {
        if (!is_question_echo(line)) kept.push_back(line);
    }
    return text::join(kept, "\n");
}

bool word_start(const std::string& s, std::size_t pos) {
    return pos == 0 || !text::is_word_byte(static_cast<unsigned char>(s[pos - 1]));
}

bool word_end(const std::string& s, std::size_t end) {
    return end >= s.size() || !text::is_word_byte(static_cast<unsigned char>(s[end]));
}

// Occurrences of `word` delimited on both sides, case-insensitive.
std::vector<std::size_t> whole_word_hits(const std::string& lowered,
                                         const std::string& word,
                                         std::size_t begin, std::size_t end) {
    std::vector<std::size_t> hits;
    std::size_t pos = begin;
    while (pos < end) {
        pos = lowered.find(word, pos);
        if (pos == std::string::npos || pos >= end) break;
        if (word_start(lowered, pos) && word_end(lowered, pos + word.size()))
            hits.push_back(pos);
        pos += 1;
    }
    return hits;
}

// Negation scoping over the lowercased text. The scope of a cue is its
// clause: the containing sentence (periods and newlines end sentences), cut
// at adversative boundaries so "does not match X but looks like Y" leaves Y
// asserted.
class NegationScope {
public:
    explicit NegationScope(std::string lowered) : text_(std::move(lowered)) {}

    const std::string& lowered() const { return text_; }

    bool negated(std::size_t pos, std::size_t len) const {
        auto [begin, end] = clause_around(pos);
        static const std::vector<std::string> forward_cues = {
            "no", "not", "without", "absence of", "free of", "rather than",
        };
        for (const auto& cue : forward_cues) {
            if (!whole_word_hits(text_, cue, begin, pos).empty()) return true;
        }
        // "ruled out" negates what precedes it in the clause.
        std::size_t after = pos + len;
        if (!whole_word_hits(text_, "ruled out", after, end).empty()) return true;
        return false;
    }

private:
    std::pair<std::size_t, std::size_t> clause_around(std::size_t pos) const {
        std::size_t begin = 0;
        std::size_t end = text_.size();
        for (std::size_t i = pos; i > 0; --i) {
            char c = text_[i - 1];
            if (c == '.' || c == '\n' || c == ';') {
                begin = i;
                break;
            }
        }
        for (std::size_t i = pos; i < text_.size(); ++i) {
            char c = text_[i];
            if (c == '.' || c == '\n' || c == ';') {
                end = i;
                break;
            }
        }
        // Adversative conjunctions narrow the clause further.
        static const std::vector<std::string> adversatives = {"but", "however", "yet"};
        for (const auto& word : adversatives) {
            for (std::size_t hit : whole_word_hits(text_, word, begin, end)) {
                if (hit + word.size() <= pos) begin = hit + word.size();
                if (hit >= pos) {
                    end = hit;
                    break;
                }
            }
        }
        return {begin, end};
    }

    std::string text_;
};

// First-side word boundary only: plural and inflected forms still count
// ("cracks" asserts Crack).
std::vector<std::size_t> term_hits(const std::string& lowered, const std::string& term) {
    std::vector<std::size_t> hits;
    std::size_t pos = 0;
    while (pos < lowered.size()) {
        pos = lowered.find(term, pos);
        if (pos == std::string::npos) break;
        if (word_start(lowered, pos)) hits.push_back(pos);
        pos += 1;
    }
    return hits;
}

bool has_unnegated_hit(const NegationScope& scope, const std::string& term) {
    for (std::size_t pos : term_hits(scope.lowered(), term)) {
        if (!scope.negated(pos, term.size())) return true;
    }
    return false;
}

struct FlagScan {
    bool detected = false;
    bool phrase_found = false;
};

FlagScan scan_damage_flag(const std::string& response_text) {
    std::string surface = strip_question_echoes(response_text);
    NegationScope scope(text::ascii_lower(surface));

    std::ptrdiff_t last_affirmative = -1;
    for (const auto& phrase : affirmative_phrases()) {
        for (std::size_t pos : term_hits(scope.lowered(), phrase)) {
            if (!scope.negated(pos, phrase.size()))
                last_affirmative = std::max(last_affirmative,
                                            static_cast<std::ptrdiff_t>(pos));
        }
    }
    std::ptrdiff_t last_negative = -1;
    for (const auto& phrase : no_damage_phrases()) {
        for (std::size_t pos : term_hits(scope.lowered(), phrase)) {
            last_negative = std::max(last_negative, static_cast<std::ptrdiff_t>(pos));
        }
    }

    FlagScan scan;
    scan.phrase_found = last_affirmative >= 0 || last_negative >= 0;
    scan.detected = last_affirmative >= 0 && last_affirmative > last_negative;
    return scan;
}

// Byte offset where the answer to the fifth question starts, or npos.
std::size_t answer5_offset(const std::string& response_text) {
    std::size_t offset = 0;
    std::size_t found = std::string::npos;
    for (const auto& line : text::split_lines(response_text)) {
        std::string t = text::trim(line);
        if (t.size() >= 2 && t[0] == '5' && (t[1] == '.' || t[1] == ')'))
            found = offset;
        offset += line.size() + 1;
    }
    return found;
}

int severity_in(const std::string& fragment) {
    static const std::regex pattern(
        R"((?:severity(?:\s+rating)?\s*:\s*|severity\s+rating\s+of\s+|rated\s+as\s+(?:a\s+)?)([1-5])(?![0-9]))",
        std::regex::icase);
    std::smatch m;
    if (std::regex_search(fragment, m, pattern)) return std::stoi(m[1].str());
    return 0;
}

// Answer-4 region rendered as the damage description; the whole response
// when the numbered format is absent.
std::string extract_description(const std::string& response_text) {
    auto lines = text::split_lines(response_text);
    std::ptrdiff_t begin = -1;
    std::ptrdiff_t end = static_cast<std::ptrdiff_t>(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string t = text::trim(lines[i]);
        if (t.size() >= 2 && t[0] == '4' && (t[1] == '.' || t[1] == ')'))
            begin = static_cast<std::ptrdiff_t>(i);
    }
    if (begin < 0) return text::trim(response_text);
    for (std::ptrdiff_t i = begin + 1; i < static_cast<std::ptrdiff_t>(lines.size()); ++i) {
        std::string t = text::trim(lines[i]);
        if (t.size() >= 2 && t[0] == '5' && (t[1] == '.' || t[1] == ')')) {
            end = i;
            break;
        }
    }
    std::vector<std::string> body;
    for (std::ptrdiff_t i = begin; i < end; ++i) {
        std::string t = text::trim(lines[i]);
        if (t.empty()) continue;
        if (i == begin) {
            if (is_question_echo(t)) continue; // drop the echoed question
            t = std::regex_replace(t, std::regex(R"(^4[.)]\s*)"), "");
        }
        while (!t.empty() && (t[0] == '-' || t[0] == '*')) t = text::trim(t.substr(1));
        if (!t.empty()) body.push_back(t);
    }
    if (body.empty()) return text::trim(response_text);
    return text::join(body, "\n");
}

} // namespace

bool detect_damage_flag(const std::string& response_text) {
    return scan_damage_flag(response_text).detected;
}

std::vector<std::string> extract_damage_types(const std::string& response_text,
                                              const std::vector<std::string>& taxonomy) {
    NegationScope scope(text::ascii_lower(strip_question_echoes(response_text)));
    std::vector<std::string> found;
    for (const auto& term : taxonomy) {
        if (has_unnegated_hit(scope, text::ascii_lower(term))) found.push_back(term);
    }
    return found;
}

int extract_severity(const std::string& response_text, bool damage_detected) {
    if (!damage_detected) return 0;
    std::size_t offset = answer5_offset(response_text);
    if (offset != std::string::npos) {
        int value = severity_in(response_text.substr(offset));
        if (value > 0) return value;
    }
    return severity_in(response_text);
}

InspectionReport assemble_report(const VlmExchange& exchange,
                                 const ContextUsed& context) {
    InspectionReport report;
    report.raw_response = exchange.response_text;
    report.context_used = context;
    report.latency_seconds = exchange.latency_seconds;

    FlagScan flag = scan_damage_flag(exchange.response_text);
    report.damage_detected = flag.detected;
    if (!flag.phrase_found)
        report.parse_warnings.push_back("low confidence: no damage-statement phrase matched");

    std::vector<std::string> types = extract_damage_types(exchange.response_text);
    if (report.damage_detected) {
        report.damage_types = std::move(types);
    } else if (!types.empty()) {
        report.parse_warnings.push_back(
            "damage types mentioned but the damage flag is negative; types dropped");
    }

    NegationScope scope(
        text::ascii_lower(strip_question_echoes(exchange.response_text)));
    for (const auto& term : extra_term_lexicon()) {
        if (!has_unnegated_hit(scope, term)) continue;
        bool inside_matched_type = false;
        for (const auto& type : report.damage_types) {
            if (text::ascii_lower(type).find(term) != std::string::npos) {
                inside_matched_type = true;
                break;
            }
        }
        if (!inside_matched_type) report.extra_terms.push_back(term);
    }

    report.severity = extract_severity(exchange.response_text, report.damage_detected);
    if (report.damage_detected && report.severity == 0)
        report.parse_warnings.push_back("damage detected but no severity pattern matched");

    report.description = extract_description(exchange.response_text);
    return report;
}

json InspectionReport::to_json() const {
    return json{{"raw_response", raw_response},
                {"damage_detected", damage_detected},
                {"damage_types", damage_types},
                {"extra_terms", extra_terms},
                {"severity", severity},
                {"description", description},
                {"context_used", json{{"text_docs", context_used.text_docs},
                                      {"image_docs", context_used.image_docs}}},
                {"latency_seconds", latency_seconds},
                {"parse_warnings", parse_warnings}};
}

InspectionReport InspectionReport::from_json(const json& j) {
    InspectionReport report;
    report.raw_response = j.at("raw_response").get<std::string>();
    report.damage_detected = j.at("damage_detected").get<bool>();
    report.damage_types = j.at("damage_types").get<std::vector<std::string>>();
    report.extra_terms = j.at("extra_terms").get<std::vector<std::string>>();
    report.severity = j.at("severity").get<int>();
    report.description = j.at("description").get<std::string>();
    report.context_used.text_docs =
        j.at("context_used").at("text_docs").get<std::vector<std::string>>();
    report.context_used.image_docs =
        j.at("context_used").at("image_docs").get<std::vector<std::string>>();
    report.latency_seconds = j.at("latency_seconds").get<double>();
    report.parse_warnings = j.at("parse_warnings").get<std::vector<std::string>>();
    return report;
}

} // namespace bladerag
