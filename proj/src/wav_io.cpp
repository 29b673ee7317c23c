#include "nbf/wav_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <vector>

namespace nbf {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v)); out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v >> 16)); out.push_back(uint8_t(v >> 24));
}
void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(uint8_t(v)); out.push_back(uint8_t(v >> 8));
}

struct Reader {
  const uint8_t* p;
  size_t n, pos = 0;
  Reader(const uint8_t* data, size_t size) : p(data), n(size) {}
  void need(size_t k, const char* what) {
    if (pos + k > n) throw Error(std::string("wav: truncated file reading ") + what);
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = uint32_t(p[pos]) | uint32_t(p[pos + 1]) << 8 | uint32_t(p[pos + 2]) << 16 |
                 uint32_t(p[pos + 3]) << 24;
    pos += 4;
    return v;
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = uint16_t(p[pos]) | uint16_t(p[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  void skip(size_t k, const char* what) { need(k, what); pos += k; }
};

}  // namespace

WaveBuffer load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("wav: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw Error("wav: truncated file " + path);

  Reader r(bytes.data(), bytes.size());
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error("wav: not a RIFF/WAVE file: " + path);
  r.pos = 12;

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const uint8_t* data = nullptr;
  uint32_t data_size = 0;

  while (r.pos + 8 <= r.n) {
    char id[4];
    std::memcpy(id, r.p + r.pos, 4);
    r.pos += 4;
    uint32_t size = r.u32("chunk size");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw Error("wav: bad fmt chunk");
      size_t end = r.pos + size;
      format = r.u16("fmt");
      channels = r.u16("fmt");
      rate = r.u32("fmt");
      r.u32("fmt");  // byte rate
      r.u16("fmt");  // block align
      bits = r.u16("fmt");
      r.pos = end;
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      r.need(size, "data chunk");
      data = r.p + r.pos;
      data_size = size;
      r.pos += size;
    } else {
      r.skip(size, "chunk");
    }
    if (size % 2) r.skip(1, "pad byte");
  }

  if (!have_fmt || !data) throw Error("wav: missing fmt/data chunk in " + path);
  if (channels < 1) throw Error("wav: zero channels in " + path);

  const bool pcm16 = (format == 1 && bits == 16);
  const bool f32 = (format == 3 && bits == 32);
  if (!pcm16 && !f32)
    throw Error("wav: unsupported codec (format=" + std::to_string(format) +
                " bits=" + std::to_string(bits) + ") in " + path);

  const uint32_t bytes_per = bits / 8;
  const uint32_t frame = bytes_per * channels;
  const int64_t frames = data_size / frame;

  WaveBuffer wave(channels, frames, double(rate));
  for (int64_t t = 0; t < frames; ++t) {
    for (int c = 0; c < channels; ++c) {
      const uint8_t* q = data + size_t(t) * frame + size_t(c) * bytes_per;
      if (pcm16) {
        int16_t v = int16_t(uint16_t(q[0]) | uint16_t(q[1]) << 8);
        wave.at(c, t) = double(v) / 32768.0;
      } else {
        uint32_t u = uint32_t(q[0]) | uint32_t(q[1]) << 8 | uint32_t(q[2]) << 16 | uint32_t(q[3]) << 24;
        float f;
        std::memcpy(&f, &u, 4);
        wave.at(c, t) = double(f);
      }
    }
  }
  return wave;
}

void save_wav(const std::string& path, const WaveBuffer& wave, WavFormat format) {
  NBF_REQUIRE(wave.channels >= 1, "wav: need at least one channel");
  const uint16_t channels = uint16_t(wave.channels);
  const uint32_t rate = uint32_t(wave.sample_rate);
  const bool f32 = (format == WavFormat::Float32);
  const uint16_t bits = f32 ? 32 : 16;
  const uint32_t frame = uint32_t(bits / 8) * channels;
  const uint32_t data_size = uint32_t(wave.length) * frame;

  std::vector<uint8_t> out;
  out.reserve(data_size + 64);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 4 + 24 + (f32 ? 12 : 0) + 8 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, f32 ? 3 : 1);
  put_u16(out, channels);
  put_u32(out, rate);
  put_u32(out, rate * frame);
  put_u16(out, uint16_t(frame));
  put_u16(out, bits);
  if (f32) {  // fact chunk, expected by some readers for non-PCM
    out.insert(out.end(), {'f', 'a', 'c', 't'});
    put_u32(out, 4);
    put_u32(out, uint32_t(wave.length));
  }
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_size);

  for (int64_t t = 0; t < wave.length; ++t) {
    for (int c = 0; c < channels; ++c) {
      double v = wave.at(c, t);
      if (f32) {
        float f = float(v);
        uint32_t u;
        std::memcpy(&u, &f, 4);
        put_u32(out, u);
      } else {
        double clamped = std::clamp(v, -1.0, 32767.0 / 32768.0);
        auto s = int16_t(std::lround(clamped * 32768.0));
        put_u16(out, uint16_t(s));
      }
    }
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("wav: cannot write " + path);
  os.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
  if (!os) throw Error("wav: short write to " + path);
}

}  // namespace nbf
