#include "typoflow/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "typoflow/errors.hpp"

namespace typoflow {

namespace {

constexpr char kMagic[5] = {'F', 'F', 'W', 'T', '1'};

void put_u32(std::ostream& os, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

bool get_u32(std::istream& is, uint32_t& v) {
    uint8_t b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    v = static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
        static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
    return true;
}

bool get_u64(std::istream& is, uint64_t& v) {
    uint8_t b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return true;
}

void put_f32s(std::ostream& os, const float* p, size_t n) {
    // Little-endian host assumed for the payload fast path; enforce anyway.
    for (size_t i = 0; i < n; ++i) {
        uint32_t bits;
        std::memcpy(&bits, p + i, 4);
        put_u32(os, bits);
    }
}

bool get_f32s(std::istream& is, float* p, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        uint32_t bits;
        if (!get_u32(is, bits)) return false;
        std::memcpy(p + i, &bits, 4);
    }
    return true;
}

struct Record {
    std::string name;
    uint8_t group;
    std::vector<int64_t> shape;
    std::vector<float> data;
};

std::vector<Record> read_records(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[5];
    if (!is.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0)
        throw IoError("bad checkpoint magic in " + path);

    std::vector<Record> recs;
    while (true) {
        uint32_t name_len;
        if (!get_u32(is, name_len)) break;  // clean EOF
        Record r;
        r.name.resize(name_len);
        if (!is.read(r.name.data(), name_len)) throw IoError("truncated name in " + path);
        char gb;
        if (!is.get(gb)) throw IoError("truncated group tag in " + path);
        r.group = static_cast<uint8_t>(gb);
        if (r.group > static_cast<uint8_t>(ParamGroup::SCA))
            throw IoError("unknown group tag in " + path);
        uint64_t rank;
        if (!get_u64(is, rank) || rank > 8) throw IoError("bad rank in " + path);
        uint64_t count = 1;
        for (uint64_t i = 0; i < rank; ++i) {
            uint64_t e;
            if (!get_u64(is, e) || e == 0) throw IoError("bad extent in " + path);
            r.shape.push_back(static_cast<int64_t>(e));
            count *= e;
        }
        r.data.resize(count);
        if (!get_f32s(is, r.data.data(), count)) throw IoError("truncated payload in " + path);
        recs.push_back(std::move(r));
    }
    return recs;
}

}  // namespace

const char* param_group_name(ParamGroup g) {
    switch (g) {
        case ParamGroup::TxtAttn: return "TxtAttn";
        case ParamGroup::ImgAttn: return "ImgAttn";
        case ParamGroup::MMOther: return "MMOther";
        case ParamGroup::SingleDiT: return "SingleDiT";
        case ParamGroup::TokenEmbed: return "TokenEmbed";
        case ParamGroup::Other: return "Other";
        case ParamGroup::SCA: return "SCA";
    }
    return "?";
}

Tensor& ParamStore::add(const std::string& name, ParamGroup group, Tensor t) {
    if (index_.count(name)) throw IoError("duplicate parameter name: " + name);
    index_[name] = entries_.size();
    entries_.push_back(ParamEntry{name, group, std::move(t)});
    return entries_.back().tensor;
}

bool ParamStore::has(const std::string& name) const { return index_.count(name) != 0; }

Tensor& ParamStore::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw IoError("unknown parameter: " + name);
    return entries_[it->second].tensor;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw IoError("unknown parameter: " + name);
    return entries_[it->second].tensor;
}

ParamGroup ParamStore::group_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw IoError("unknown parameter: " + name);
    return entries_[it->second].group;
}

int64_t ParamStore::total_scalars() const {
    int64_t n = 0;
    for (const auto& e : entries_) n += e.tensor.numel();
    return n;
}

std::vector<GroupShare> ParamStore::report() const {
    std::map<ParamGroup, int64_t> counts;
    for (const auto& e : entries_) counts[e.group] += e.tensor.numel();
    const double total = static_cast<double>(total_scalars());
    std::vector<GroupShare> out;
    for (const auto& [g, n] : counts)
        out.push_back(GroupShare{g, n, total > 0 ? static_cast<double>(n) / total : 0.0});
    return out;
}

void ParamStore::zero_grads() {
    for (auto& e : entries_) e.tensor.zero_grad();
}

void ParamStore::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint: " + path);
    os.write(kMagic, 5);
    for (const auto& e : entries_) {
        put_u32(os, static_cast<uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        os.put(static_cast<char>(e.group));
        put_u64(os, static_cast<uint64_t>(e.tensor.rank()));
        for (int64_t ext : e.tensor.shape()) put_u64(os, static_cast<uint64_t>(ext));
        put_f32s(os, e.tensor.data().data(), static_cast<size_t>(e.tensor.numel()));
    }
    if (!os) throw IoError("write failed: " + path);
}

void ParamStore::load_into(const std::string& path) {
    auto recs = read_records(path);
    if (recs.size() != entries_.size())
        throw IoError("checkpoint has " + std::to_string(recs.size()) + " params, expected " +
                      std::to_string(entries_.size()) + ": " + path);
    for (const auto& r : recs) {
        auto it = index_.find(r.name);
        if (it == index_.end()) throw IoError("unexpected parameter in checkpoint: " + r.name);
        ParamEntry& e = entries_[it->second];
        if (static_cast<uint8_t>(e.group) != r.group)
            throw IoError("group tag mismatch for " + r.name);
        if (e.tensor.shape() != r.shape) throw IoError("shape mismatch for " + r.name);
        std::copy(r.data.begin(), r.data.end(), e.tensor.data_mut().begin());
    }
}

ParamStore ParamStore::load_file(const std::string& path) {
    ParamStore store;
    for (auto& r : read_records(path))
        store.add(r.name, static_cast<ParamGroup>(r.group),
                  Tensor::from(r.shape, std::move(r.data)));
    return store;
}

bool ParamStore::bitwise_equal(const ParamStore& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name || a.group != b.group || a.tensor.shape() != b.tensor.shape())
            return false;
        if (std::memcmp(a.tensor.data().data(), b.tensor.data().data(),
                        sizeof(float) * static_cast<size_t>(a.tensor.numel())) != 0)
            return false;
    }
    return true;
}

}  // namespace typoflow
