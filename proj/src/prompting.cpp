#include "bladerag/prompting.hpp"

#include <algorithm>

#include "bladerag/errors.hpp"
#include "bladerag/text_utils.hpp"

namespace bladerag {

const std::vector<std::string>& damage_taxonomy() {
    static const std::vector<std::string> taxonomy = {
        "Missing Teeth of Vortex generators",
        "Lightning Receptors",
        "Crack",
        "Corrosion",
        "Erosion",
        "Rust",
        "Delamination",
        "Fracture",
        "Dent",
        "Ice",
        "Snow",
        "Surface Peeling",
        "Wear",
        "Lightning Strike/Burning",
    };
    return taxonomy;
}

const char* const kBaseInstruction =
    "I need to utilize the knowledge base and observe the features of the anomaly "
    "on the wind turbine related components, and identify damage type.";

const char* const kTransitionalPhrase =
    "Using the following reference information to help with the analysis:";

const char* const kQuestionsBlock =
    "Based on these descriptions and references, analyze the image and determine:\n"
    "1. How many blades are visible in the image?\n"
    "2. Is there visible damage on any of the turbine blades in the image?\n"
    "3. If yes, what specific type of damage can be identified in this damage lists "
    "('Missing Teeth of Vortex generators', 'Lightning Receptors', 'Crack', "
    "'Corrosion', 'Erosion', 'Rust', 'Delamination', 'Fracture', 'Dent', 'Ice', "
    "'Snow', 'Surface Peeling', 'Wear', 'Lightning Strike/Burning')?\n"
    "4. Provide a detailed description of the damage observed, referencing the "
    "specific characteristics described above.\n"
    "5. Rate the severity of the damage on a scale of 1-5, where 1 is minor and 5 "
    "is severe.";

std::optional<std::string> adaptive_guidance(const std::vector<ImageRef>& image_refs) {
    std::vector<std::string> labels; // distinct, first-seen order
    for (const ImageRef& ref : image_refs) {
        for (const std::string& label : ref.damage_labels) {
            if (std::find(labels.begin(), labels.end(), label) == labels.end())
                labels.push_back(label);
        }
    }
    if (labels.empty()) return std::nullopt;
    if (labels.size() == 1) {
        return "Note: All similar reference images show " + labels.front() +
               " damage. Carefully check the image for signs of " + labels.front() + ".";
    }
    return "Note: The similar reference images show several damage types: " +
           text::join(labels, ", ") +
           ". Treat these as potential candidates and assess which, if any, are "
           "present in the image.";
}

std::string AssembledPrompt::text() const {
    std::vector<std::string> sections;
    sections.push_back(base_instruction);
    if (!transitional_phrase.empty()) sections.push_back(transitional_phrase);
    if (!text_reference_block.empty()) sections.push_back(text_reference_block);
    if (!image_reference_block.empty()) sections.push_back(image_reference_block);
    if (adaptive_note) sections.push_back(*adaptive_note);
    sections.push_back(questions_block);
    return text::join(sections, "\n\n");
}

AssembledPrompt build_prompt(const RetrievalResult& retrieval) {
    if (retrieval.text_docs.empty())
        throw KnowledgeBaseError(
            "retrieval produced no text context; the knowledge base is unusable");

    AssembledPrompt prompt;
    prompt.base_instruction = kBaseInstruction;
    prompt.transitional_phrase = kTransitionalPhrase;
    prompt.questions_block = kQuestionsBlock;

    std::vector<std::string> text_parts;
    for (const ScoredDoc& doc : retrieval.text_docs) {
        text_parts.push_back("[Text Reference " + doc.id + "]\n" + doc.content);
    }
    prompt.text_reference_block = text::join(text_parts, "\n\n");

    std::vector<std::string> image_parts;
    for (std::size_t i = 0; i < retrieval.image_refs.size(); ++i) {
        const ImageRef& ref = retrieval.image_refs[i];
        std::string part =
            "Similar Image #" + std::to_string(i + 1) + ": " + ref.description;
        if (!ref.damage_labels.empty())
            part += "\nDamage labels: " + text::join(ref.damage_labels, ", ");
        image_parts.push_back(std::move(part));
    }
    prompt.image_reference_block = text::join(image_parts, "\n\n");
    prompt.adaptive_note = adaptive_guidance(retrieval.image_refs);
    return prompt;
}

AssembledPrompt build_prompt_without_context() {
    AssembledPrompt prompt;
    prompt.base_instruction = kBaseInstruction;
    prompt.questions_block = kQuestionsBlock;
    return prompt;
}

} // namespace bladerag
