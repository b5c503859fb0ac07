#include "epr/index.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "epr/util.hpp"

namespace epr {
namespace {

constexpr char kMagic[8] = {'E', 'P', 'R', 'I', 'D', 'X', '0', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char((v >> 24) & 0xff)};
    os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    put_u32(os, std::uint32_t(v & 0xffffffffu));
    put_u32(os, std::uint32_t(v >> 32));
}

void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw Error("index file truncated");
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

std::uint64_t get_u64(std::istream& is) {
    std::uint64_t lo = get_u32(is);
    std::uint64_t hi = get_u32(is);
    return lo | hi << 32;
}

float get_f32(std::istream& is) { return std::bit_cast<float>(get_u32(is)); }

}  // namespace

VectorIndex VectorIndex::build(const KnowledgeGraph& kg, std::span<const RrAp> aps,
                               EmbeddingProvider& provider) {
    std::vector<std::string> texts;
    texts.reserve(aps.size());
    for (const RrAp& ap : aps) texts.push_back(serialize_rrap(ap, kg));
    std::vector<std::vector<float>> rows = provider.embed_patterns(texts);
    if (rows.size() != aps.size()) throw Error("embedding provider returned wrong vector count");
    VectorIndex idx;
    idx.dim_ = provider.dim();
    idx.fingerprint_ = provider.fingerprint();
    idx.aps_.assign(aps.begin(), aps.end());
    idx.texts_ = std::move(texts);
    idx.vectors_.reserve(aps.size() * idx.dim_);
    for (const auto& row : rows) {
        if (row.size() != idx.dim_) throw Error("embedding provider returned wrong dimension");
        idx.vectors_.insert(idx.vectors_.end(), row.begin(), row.end());
    }
    return idx;
}

VectorIndex VectorIndex::from_raw(std::size_t dim, std::string fingerprint, std::vector<RrAp> aps,
                                  std::vector<std::string> texts, std::vector<float> vectors) {
    if (texts.size() != aps.size()) throw Error("index: texts/aps size mismatch");
    if (vectors.size() != aps.size() * dim) throw Error("index: vector buffer size mismatch");
    VectorIndex idx;
    idx.dim_ = dim;
    idx.fingerprint_ = std::move(fingerprint);
    idx.aps_ = std::move(aps);
    idx.texts_ = std::move(texts);
    idx.vectors_ = std::move(vectors);
    return idx;
}

std::span<const float> VectorIndex::vector_at(std::size_t i) const {
    if (i >= aps_.size()) throw Error("index: row out of range");
    return {vectors_.data() + i * dim_, dim_};
}

std::optional<std::size_t> VectorIndex::find(const RrAp& ap) const {
    RrAp c = canonical(ap);
    for (std::size_t i = 0; i < aps_.size(); ++i)
        if (aps_[i] == c) return i;
    return std::nullopt;
}

float VectorIndex::score_at(std::span<const float> query, std::size_t i) const {
    return dot(query, vector_at(i));
}

std::vector<RetrievalHit> VectorIndex::retrieve(std::span<const float> query, std::size_t k) const {
    if (query.size() != dim_) throw Error("index: query dimension mismatch");
    std::vector<float> scores(aps_.size());
    for (std::size_t i = 0; i < aps_.size(); ++i) scores[i] = dot(query, vector_at(i));
    std::vector<std::size_t> order(aps_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return texts_[a] < texts_[b];
    };
    std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + take, order.end(), better);
    std::vector<RetrievalHit> hits;
    hits.reserve(take);
    for (std::size_t j = 0; j < take; ++j)
        hits.push_back({aps_[order[j]], texts_[order[j]], scores[order[j]]});
    return hits;
}

void VectorIndex::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open index file for writing: " + path);
    os.write(kMagic, sizeof kMagic);
    put_u32(os, std::uint32_t(dim_));
    put_u64(os, aps_.size());
    put_u32(os, std::uint32_t(fingerprint_.size()));
    os.write(fingerprint_.data(), std::streamsize(fingerprint_.size()));
    for (const RrAp& ap : aps_) {
        put_u32(os, ap.rel1);
        put_u32(os, ap.rel2);
        os.put(char(std::uint8_t(ap.tag)));
    }
    for (float v : vectors_) put_f32(os, v);
    if (!os) throw Error("failed writing index file: " + path);
}

VectorIndex VectorIndex::load(const std::string& path, const KnowledgeGraph& kg) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open index file: " + path);
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw Error("not an index file (bad magic): " + path);
    VectorIndex idx;
    idx.dim_ = get_u32(is);
    std::uint64_t count = get_u64(is);
    std::uint32_t fp_len = get_u32(is);
    idx.fingerprint_.resize(fp_len);
    is.read(idx.fingerprint_.data(), fp_len);
    if (!is) throw Error("index file truncated: " + path);
    idx.aps_.reserve(count);
    idx.texts_.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        RrAp ap;
        ap.rel1 = get_u32(is);
        ap.rel2 = get_u32(is);
        int t = is.get();
        if (t < 0) throw Error("index file truncated: " + path);
        if (t > int(LinkTag::OO)) throw Error("index file corrupt (bad link tag): " + path);
        ap.tag = LinkTag(t);
        if (ap.rel1 >= kg.relation_count() || ap.rel2 >= kg.relation_count())
            throw Error("index file refers to unknown relation ids; wrong graph?");
        idx.aps_.push_back(ap);
        idx.texts_.push_back(serialize_rrap(ap, kg));
    }
    idx.vectors_.resize(count * idx.dim_);
    for (float& v : idx.vectors_) v = get_f32(is);
    return idx;
}

}  // namespace epr
