#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bladerag/retrieval.hpp"

namespace bladerag {

/// The 14 damage types the analytical prompt enumerates, in prompt order.
const std::vector<std::string>& damage_taxonomy();

/// Fixed prompt strings. Kept byte-stable; tests pin them.
extern const char* const kBaseInstruction;
extern const char* const kTransitionalPhrase;
extern const char* const kQuestionsBlock;

/// When the retrieved reference images carry damage labels, an extra note
/// steers the model: one shared label yields a targeted check, several
/// labels are offered as candidates, and unlabeled references add nothing.
std::optional<std::string> adaptive_guidance(const std::vector<ImageRef>& image_refs);

/// The assembled analytical prompt. Sections are joined with single blank
/// lines, in the fixed order base instruction, transitional phrase, text
/// references, image references, adaptive note, questions.
struct AssembledPrompt {
    std::string base_instruction;
    std::string transitional_phrase;
    std::string text_reference_block;
    std::string image_reference_block;
    std::optional<std::string> adaptive_note;
    std::string questions_block;

    std::string text() const;
};

/// Renders retrieved context into the prompt. Pure: equal inputs yield
/// byte-identical prompts; retrieved content is never truncated or
/// reordered. Throws KnowledgeBaseError when the retrieval carries no text
/// documents (an unusable knowledge base).
AssembledPrompt build_prompt(const RetrievalResult& retrieval);

/// Retrieval-free variant: base instruction plus the questions, nothing else.
AssembledPrompt build_prompt_without_context();

} // namespace bladerag
