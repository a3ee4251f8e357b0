#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace bladerag {

/// Controls how document bodies are split into retrieval-sized chunks.
/// Sizes are measured in Unicode scalar values, not bytes.
struct ChunkingConfig {
    std::size_t chunk_size = 1000;
    std::size_t chunk_overlap = 200;
    /// Tried in order; each segment still too large is re-split with the
    /// next separator. The final "" entry means character-level splitting.
    std::vector<std::string> separators = {"\n\n", "\n", ".", " ", ""};

    /// Throws ConfigError unless 0 <= overlap < size and the separator
    /// list ends with the character-level fallback.
    void validate() const;

    bool operator==(const ChunkingConfig&) const = default;
};

/// One retrieval unit cut from a document. `overlap` is the number of
/// leading characters shared with the previous chunk of the same document;
/// concatenating every chunk's text after dropping that prefix reproduces
/// the document body exactly.
struct Chunk {
    std::string id;      // "{doc_id}_chunk_{index}"
    std::string doc_id;
    std::size_t index = 0;
    std::string text;
    std::size_t overlap = 0; // characters shared with the predecessor

    bool operator==(const Chunk&) const = default;
};

/// Splits `body` with the recursive rule: try the coarsest separator first,
/// re-split oversize segments with finer separators, and fall back to a
/// character-level sliding window. Segments keep their trailing separator,
/// and each chunk after the first may carry up to `chunk_overlap` characters
/// of its predecessor as a prefix, aligned to a separator boundary.
///
/// Deterministic: equal (body, config) pairs produce identical chunk lists.
/// Throws ConfigError on an invalid config or empty body.
std::vector<Chunk> split_document(const std::string& doc_id,
                                  const std::string& body,
                                  const ChunkingConfig& cfg = {});

/// Reassembles the original body from chunks produced by split_document.
/// Useful as the inverse direction of the no-content-loss invariant.
std::string reassemble_chunks(const std::vector<Chunk>& chunks);

} // namespace bladerag
