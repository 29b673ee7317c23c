#pragma once

#include <string>
#include <vector>

#include "nbf/tensor.hpp"

namespace nbf {

/// Container format: magic "GRNNBF01", u32 record count, records of
/// {u32 name length, name, u32 rank, u32 dims[rank], float32 LE data},
/// then a length-prefixed run-configuration blob and the length-prefixed
/// feature layout descriptor. Loading validates the total byte length.
struct Checkpoint {
  struct Record {
    std::string name;
    std::vector<int64_t> dims;
    std::vector<float> data;
  };

  std::vector<Record> records;
  std::string config_text;
  std::string feature_layout;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  const Record* find(const std::string& name) const;

  template <class S>
  void add_tensor(const std::string& name, const std::vector<int64_t>& dims,
                  const std::vector<S>& values) {
    Record r;
    r.name = name;
    r.dims = dims;
    r.data.assign(values.begin(), values.end());
    records.push_back(std::move(r));
  }

  template <class S>
  void read_into(const std::string& name, std::vector<S>& out) const {
    const Record* r = find(name);
    NBF_REQUIRE(r != nullptr, "checkpoint: missing record " + name);
    NBF_REQUIRE(r->data.size() == out.size(), "checkpoint: size mismatch for " + name);
    for (size_t i = 0; i < out.size(); ++i) out[i] = S(r->data[i]);
  }

  /// Store/restore a whole parameter set by name.
  template <class S>
  void add_params(const ParamSet<S>& params) {
    for (const auto* p : params.items) add_tensor(p->name, p->value.shape, p->value.v);
  }
  template <class S>
  void load_params(ParamSet<S>& params) const {
    for (auto* p : params.items) read_into(p->name, p->value.v);
  }
};

}  // namespace nbf
