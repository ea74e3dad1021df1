#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "typoflow/tensor.hpp"

namespace typoflow {

enum class ParamGroup : uint8_t {
    TxtAttn = 0,
    ImgAttn = 1,
    MMOther = 2,
    SingleDiT = 3,
    TokenEmbed = 4,
    Other = 5,
    SCA = 6,
};

const char* param_group_name(ParamGroup g);

struct ParamEntry {
    std::string name;
    ParamGroup group;
    Tensor tensor;
};

struct GroupShare {
    ParamGroup group;
    int64_t scalars;
    double fraction;
};

// Named parameter map in insertion order. Every parameter carries a group
// tag; groups partition the store (each scalar counted exactly once).
class ParamStore {
public:
    Tensor& add(const std::string& name, ParamGroup group, Tensor t);
    bool has(const std::string& name) const;
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    ParamGroup group_of(const std::string& name) const;

    std::vector<ParamEntry>& entries() { return entries_; }
    const std::vector<ParamEntry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }
    int64_t total_scalars() const;

    // Per-group scalar counts and fractions; fractions sum to 1 within 1e-9.
    std::vector<GroupShare> report() const;

    void zero_grads();

    // Binary checkpoint: magic "FFWT1", then per parameter: u32 name length,
    // UTF-8 name, group tag byte, u64 rank, u64 extents, raw f32 payload.
    // All integers little-endian.
    void save(const std::string& path) const;

    // Fills values of an existing store; names, groups and shapes must match
    // the file exactly.
    void load_into(const std::string& path);

    // Reads a checkpoint as a fresh store (analysis tools).
    static ParamStore load_file(const std::string& path);

    bool bitwise_equal(const ParamStore& other) const;

private:
    std::vector<ParamEntry> entries_;
    std::map<std::string, size_t> index_;
};

}  // namespace typoflow
