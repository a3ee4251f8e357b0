#include "bladerag/chunking.hpp"

#include <deque>

#include "bladerag/errors.hpp"
#include "bladerag/text_utils.hpp"

namespace bladerag {

namespace {

struct Piece {
    std::string text;
    std::size_t chars = 0;
};

struct Draft {
    std::string text;
    std::size_t overlap = 0;
};

// Splits at every occurrence of `sep`, keeping the separator attached to
// the end of the preceding segment so no character is lost.
std::vector<Piece> split_keep_separator(std::string_view s, std::string_view sep) {
    std::vector<Piece> pieces;
    std::size_t start = 0;
    while (start < s.size()) {
        std::size_t hit = s.find(sep, start);
        if (hit == std::string_view::npos) {
            std::string_view rest = s.substr(start);
            pieces.push_back({std::string(rest), text::utf8_length(rest)});
            break;
        }
        std::string_view seg = s.substr(start, hit - start + sep.size());
        pieces.push_back({std::string(seg), text::utf8_length(seg)});
        start = hit + sep.size();
    }
    return pieces;
}

// Packs consecutive small pieces into chunks of at most chunk_size
// characters. When a chunk is emitted, the maximal run of trailing whole
// pieces totalling at most chunk_overlap characters is kept as the overlap
// prefix of the next chunk, which aligns the overlap to the separator
// boundaries of this region.
void merge_pieces(const std::vector<Piece>& pieces, const ChunkingConfig& cfg,
                  std::vector<Draft>& out) {
    std::deque<Piece> cur;
    std::size_t cur_chars = 0;
    std::size_t overlap_chars = 0; // prefix of cur carried over from the last emit

    auto emit = [&]() {
        Draft d;
        d.overlap = overlap_chars;
        for (const Piece& p : cur) d.text += p.text;
        out.push_back(std::move(d));
        // Retain the trailing pieces that fit inside the overlap window.
        while (!cur.empty() && cur_chars > cfg.chunk_overlap) {
            cur_chars -= cur.front().chars;
            cur.pop_front();
        }
        overlap_chars = cur_chars;
    };

    for (const Piece& p : pieces) {
        if (!cur.empty() && cur_chars + p.chars > cfg.chunk_size) {
            if (cur_chars > overlap_chars) {
                emit();
            }
            // Shrink the carried overlap until the new piece fits.
            while (!cur.empty() && cur_chars + p.chars > cfg.chunk_size) {
                cur_chars -= cur.front().chars;
                cur.pop_front();
            }
            overlap_chars = cur_chars;
        }
        cur.push_back(p);
        cur_chars += p.chars;
    }
    if (cur_chars > overlap_chars) {
        emit();
    }
}

// Character-level sliding window for text no separator could break up.
void hard_split(std::string_view s, const ChunkingConfig& cfg,
                std::vector<Draft>& out) {
    std::vector<std::size_t> starts; // byte offset of each character
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) starts.push_back(i);
    }
    starts.push_back(s.size());
    const std::size_t n = starts.size() - 1; // characters

    auto slice = [&](std::size_t from_char, std::size_t to_char) {
        return std::string(s.substr(starts[from_char], starts[to_char] - starts[from_char]));
    };

    std::size_t end = std::min(cfg.chunk_size, n);
    out.push_back({slice(0, end), 0});
    while (end < n) {
        std::size_t start = end - cfg.chunk_overlap;
        std::size_t next_end = std::min(start + cfg.chunk_size, n);
        out.push_back({slice(start, next_end), cfg.chunk_overlap});
        end = next_end;
    }
}

void split_recursive(std::string_view s, const ChunkingConfig& cfg,
                     std::size_t level, std::vector<Draft>& out) {
    const std::string& sep = cfg.separators[level];
    if (sep.empty()) {
        hard_split(s, cfg, out);
        return;
    }
    std::vector<Piece> pieces = split_keep_separator(s, sep);
    std::vector<Piece> good;
    for (Piece& p : pieces) {
        if (p.chars <= cfg.chunk_size) {
            good.push_back(std::move(p));
            continue;
        }
        if (!good.empty()) {
            merge_pieces(good, cfg, out);
            good.clear();
        }
        if (level + 1 < cfg.separators.size()) {
            split_recursive(p.text, cfg, level + 1, out);
        } else {
            hard_split(p.text, cfg, out);
        }
    }
    if (!good.empty()) merge_pieces(good, cfg, out);
}

} // namespace

void ChunkingConfig::validate() const {
    if (chunk_size == 0) throw ConfigError("chunk_size must be positive");
    if (chunk_overlap >= chunk_size)
        throw ConfigError("chunk_overlap must be smaller than chunk_size");
    if (separators.empty() || !separators.back().empty())
        throw ConfigError("separator list must end with the \"\" fallback");
}

std::vector<Chunk> split_document(const std::string& doc_id,
                                  const std::string& body,
                                  const ChunkingConfig& cfg) {
    cfg.validate();
    if (body.empty()) throw ConfigError("document body is empty: " + doc_id);

    std::vector<Draft> drafts;
    split_recursive(body, cfg, 0, drafts);

    std::vector<Chunk> chunks;
    chunks.reserve(drafts.size());
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        Chunk c;
        c.doc_id = doc_id;
        c.index = i;
        c.id = doc_id + "_chunk_" + std::to_string(i);
        c.text = std::move(drafts[i].text);
        c.overlap = drafts[i].overlap;
        chunks.push_back(std::move(c));
    }
    return chunks;
}

std::string reassemble_chunks(const std::vector<Chunk>& chunks) {
    std::string body;
    for (const Chunk& c : chunks) {
        body += c.text.substr(text::utf8_byte_offset(c.text, c.overlap));
    }
    return body;
}

} // namespace bladerag
