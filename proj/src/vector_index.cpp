#include "bladerag/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "bladerag/errors.hpp"

namespace bladerag {

namespace {

constexpr char kMagic[4] = {'F', 'I', 'D', 'X'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw IndexError("index file truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace

double l2_distance(const EmbeddingVector& x, const EmbeddingVector& y) {
    if (x.size() != y.size())
        throw DimensionMismatchError("l2_distance: dimensions differ (" +
                                     std::to_string(x.size()) + " vs " +
                                     std::to_string(y.size()) + ")");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
        sum += d * d;
    }
    return std::sqrt(sum);
}

FlatIndex::FlatIndex(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw DimensionMismatchError("index dimension must be positive");
}

void FlatIndex::insert(const std::string& id, const EmbeddingVector& vector) {
    if (vector.size() != dim_)
        throw DimensionMismatchError("insert: vector has dimension " +
                                     std::to_string(vector.size()) + ", index wants " +
                                     std::to_string(dim_));
    for (const auto& existing : ids_) {
        if (existing == id) throw IndexError("duplicate index id: " + id);
    }
    ids_.push_back(id);
    data_.insert(data_.end(), vector.begin(), vector.end());
}

std::vector<SearchHit> FlatIndex::search(const EmbeddingVector& query,
                                         std::size_t k) const {
    if (query.size() != dim_)
        throw DimensionMismatchError("search: query has dimension " +
                                     std::to_string(query.size()) + ", index wants " +
                                     std::to_string(dim_));
    if (k == 0) throw IndexError("search: k must be at least 1");
    if (ids_.empty()) return {};

    struct Scored {
        double distance;
        std::size_t order;
    };
    std::vector<Scored> scored;
    scored.reserve(ids_.size());
    for (std::size_t row = 0; row < ids_.size(); ++row) {
        const float* v = data_.data() + row * dim_;
        double sum = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            double d = static_cast<double>(query[i]) - static_cast<double>(v[i]);
            sum += d * d;
        }
        scored.push_back({std::sqrt(sum), row});
    }

    std::size_t take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + take, scored.end(),
                      [](const Scored& a, const Scored& b) {
                          if (a.distance != b.distance) return a.distance < b.distance;
                          return a.order < b.order;
                      });

    std::vector<SearchHit> hits;
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
        hits.push_back({ids_[scored[i].order], static_cast<float>(scored[i].distance)});
    return hits;
}

void FlatIndex::save(const std::string& path) const {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(dim_));
    put_u64(out, ids_.size());
    for (std::size_t row = 0; row < ids_.size(); ++row) {
        put_u32(out, static_cast<std::uint32_t>(ids_[row].size()));
        out += ids_[row];
        for (std::size_t i = 0; i < dim_; ++i) put_f32(out, data_[row * dim_ + i]);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open index file for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("index write failure: " + path);
}

FlatIndex FlatIndex::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open index file: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r{buf};
    std::string magic = r.bytes(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        throw IndexError("not an index file (bad magic): " + path);
    std::uint32_t version = r.u32();
    if (version != kVersion)
        throw IndexError("unsupported index version " + std::to_string(version));
    std::uint32_t dim = r.u32();
    if (dim == 0) throw IndexError("index header declares dimension 0");
    std::uint64_t count = r.u64();
    // Cheapest possible row is a 4-byte id length plus dim floats; a header
    // promising more than the file holds is corrupt.
    std::uint64_t min_row_bytes = 4 + static_cast<std::uint64_t>(dim) * 4;
    if (count > (buf.size() - r.pos) / min_row_bytes)
        throw IndexError("index header count disagrees with file size: " + path);

    FlatIndex index(dim);
    index.ids_.reserve(count);
    index.data_.reserve(count * dim);
    std::unordered_set<std::string> seen;
    for (std::uint64_t row = 0; row < count; ++row) {
        std::uint32_t id_len = r.u32();
        std::string id = r.bytes(id_len);
        if (!seen.insert(id).second)
            throw IndexError("duplicate id in index file: " + id);
        index.ids_.push_back(std::move(id));
        for (std::uint32_t i = 0; i < dim; ++i) index.data_.push_back(r.f32());
    }
    if (r.pos != buf.size()) throw IndexError("trailing bytes in index file: " + path);
    return index;
}

} // namespace bladerag
