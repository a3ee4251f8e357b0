#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bladerag/prompting.hpp"
#include "bladerag/retrieval.hpp"
#include "bladerag/vlm_client.hpp"

namespace bladerag {

struct ContextUsed {
    std::vector<std::string> text_docs;
    std::vector<std::string> image_docs;

    bool operator==(const ContextUsed&) const = default;
};

/// The six-element structured result of one inspection, plus parser
/// bookkeeping. Guarantees damage_detected == false implies severity == 0
/// and an empty damage_types set.
struct InspectionReport {
    std::string raw_response;
    bool damage_detected = false;
    std::vector<std::string> damage_types; // canonical taxonomy terms, prompt order
    std::vector<std::string> extra_terms;  // asserted terms outside the taxonomy
    int severity = 0;                       // 0 = healthy, 1..5 per the prompt scale
    std::string description;
    ContextUsed context_used;
    double latency_seconds = 0.0;
    std::vector<std::string> parse_warnings;

    nlohmann::json to_json() const;
    static InspectionReport from_json(const nlohmann::json& j);

    bool operator==(const InspectionReport&) const = default;
};

/// True when an affirmative damage phrase ("damage is detected", "there is
/// damage", "signs of damage", ...) occurs outside any negation. Explicit
/// no-damage statements force false unless a later affirmative statement
/// overrides them. Unmatchable text yields false (a low-confidence parse,
/// flagged in assemble_report).
bool detect_damage_flag(const std::string& response_text);

/// Taxonomy terms asserted in the text. Matching is case-insensitive with a
/// word boundary at the start of the match, so "cracks" hits "Crack" but
/// "noticed" does not hit "Ice". A term is dropped when a negation cue
/// ("no", "not", "without", "absence of", "free of", "rather than") precedes
/// it inside the same clause, or "ruled out" follows it; clause scope is the
/// sentence, cut at adversative boundaries ("but", "however", ...).
std::vector<std::string> extract_damage_types(
    const std::string& response_text,
    const std::vector<std::string>& taxonomy = damage_taxonomy());

/// Severity 0-5. Healthy reports are always 0. Otherwise the first value
/// matched by the severity patterns ("severity: N", "severity rating of N",
/// "rated as N", "rated as a N"), scanning the answer-5 region before the
/// whole text so severity-scale definitions quoted from the knowledge base
/// cannot leak in. No match means 0; assemble_report records the warning.
int extract_severity(const std::string& response_text, bool damage_detected);

/// Full report assembly from one exchange and the retrieval provenance that
/// produced its prompt.
InspectionReport assemble_report(const VlmExchange& exchange,
                                 const ContextUsed& context);

inline ContextUsed context_from(const RetrievalResult& retrieval) {
    return {retrieval.text_ids(), retrieval.image_ids()};
}

} // namespace bladerag
