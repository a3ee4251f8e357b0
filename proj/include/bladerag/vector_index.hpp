#pragma once

#include <string>
#include <vector>

#include "bladerag/embedding.hpp"

namespace bladerag {

struct SearchHit {
    std::string id;
    float distance = 0.0f; // L2, always >= 0

    bool operator==(const SearchHit&) const = default;
};

/// L2(x, y) = sqrt(sum_i (x_i - y_i)^2). Accumulated in double, in index
/// order, so results are reproducible bit for bit.
/// Throws DimensionMismatchError when the dimensions differ.
double l2_distance(const EmbeddingVector& x, const EmbeddingVector& y);

/// Exact (flat, exhaustive-scan) nearest-neighbor index over L2 distance.
/// Insertion order is preserved and breaks distance ties, which keeps
/// search results deterministic. Build first, then search; inserts must not
/// run concurrently with searches.
class FlatIndex {
public:
    explicit FlatIndex(std::size_t dim);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }

    const std::vector<std::string>& ids() const { return ids_; }

    /// Appends an entry. Throws on duplicate id or wrong dimension.
    void insert(const std::string& id, const EmbeddingVector& vector);

    /// The min(k, size) nearest entries, ascending distance, ties in
    /// insertion order. An empty index yields an empty result.
    std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k) const;

    /// Binary format: "FIDX" magic, u32 version, u32 dim, u64 count, then
    /// per entry a u32-length-prefixed id and dim little-endian float32s.
    /// Round-trips are bit-exact.
    void save(const std::string& path) const;
    static FlatIndex load(const std::string& path);

    bool operator==(const FlatIndex&) const = default;

private:
    std::size_t dim_;
    std::vector<std::string> ids_;
    std::vector<float> data_; // row-major, size() * dim_
};

} // namespace bladerag
