#include "nbf/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace nbf {

namespace {

constexpr char kMagic[8] = {'G', 'R', 'N', 'N', 'B', 'F', '0', '1'};

void put_u32(std::string& out, uint32_t v) {
  char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
  out.append(b, 4);
}

struct Cursor {
  const char* p;
  size_t n, pos = 0;
  void need(size_t k, const char* what) {
    if (pos + k > n) throw Error(std::string("checkpoint: truncated at ") + what);
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v;
    std::memcpy(&v, p + pos, 4);
    pos += 4;
    return v;
  }
  std::string str(size_t k, const char* what) {
    need(k, what);
    std::string s(p + pos, k);
    pos += k;
    return s;
  }
};

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::string out;
  out.append(kMagic, 8);
  put_u32(out, uint32_t(records.size()));
  for (const Record& r : records) {
    put_u32(out, uint32_t(r.name.size()));
    out.append(r.name);
    put_u32(out, uint32_t(r.dims.size()));
    int64_t count = 1;
    for (int64_t d : r.dims) {
      put_u32(out, uint32_t(d));
      count *= d;
    }
    NBF_REQUIRE(count == int64_t(r.data.size()), "checkpoint: dims/data mismatch for " + r.name);
    const size_t bytes = r.data.size() * 4;
    const size_t at = out.size();
    out.resize(at + bytes);
    std::memcpy(out.data() + at, r.data.data(), bytes);
  }
  put_u32(out, uint32_t(config_text.size()));
  out.append(config_text);
  put_u32(out, uint32_t(feature_layout.size()));
  out.append(feature_layout);

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("checkpoint: cannot write " + path);
  os.write(out.data(), std::streamsize(out.size()));
  if (!os) throw Error("checkpoint: short write to " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Cursor c{bytes.data(), bytes.size()};
  c.need(8, "magic");
  if (std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw Error("checkpoint: bad magic in " + path);
  c.pos = 8;

  Checkpoint ck;
  const uint32_t count = c.u32("record count");
  ck.records.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    Record r;
    r.name = c.str(c.u32("name length"), "name");
    const uint32_t rank = c.u32("rank");
    int64_t numel = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      r.dims.push_back(int64_t(c.u32("dim")));
      numel *= r.dims.back();
    }
    c.need(size_t(numel) * 4, "tensor data");
    r.data.resize(size_t(numel));
    std::memcpy(r.data.data(), c.p + c.pos, size_t(numel) * 4);
    c.pos += size_t(numel) * 4;
    ck.records.push_back(std::move(r));
  }
  ck.config_text = c.str(c.u32("config length"), "config blob");
  ck.feature_layout = c.str(c.u32("layout length"), "feature layout");
  if (c.pos != c.n)
    throw Error("checkpoint: trailing bytes (" + std::to_string(c.n - c.pos) + ") in " + path);
  return ck;
}

const Checkpoint::Record* Checkpoint::find(const std::string& name) const {
  for (const Record& r : records)
    if (r.name == name) return &r;
  return nullptr;
}

}  // namespace nbf
