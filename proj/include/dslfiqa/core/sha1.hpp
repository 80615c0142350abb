#pragma once

#include <cstdint>
#include <cstring>
#include <string>

namespace dslfiqa {

// Minimal streaming SHA-1, used for content hashes in checkpoint archives.
class Sha1 {
 public:
  Sha1() { reset(); }

  void reset() {
    h_[0] = 0x67452301u;
    h_[1] = 0xEFCDAB89u;
    h_[2] = 0x98BADCFEu;
    h_[3] = 0x10325476u;
    h_[4] = 0xC3D2E1F0u;
    total_ = 0;
    buf_len_ = 0;
  }

  void update(const void* data, size_t len) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    total_ += len;
    while (len > 0) {
      const size_t take = std::min<size_t>(64 - buf_len_, len);
      std::memcpy(buf_ + buf_len_, p, take);
      buf_len_ += take;
      p += take;
      len -= take;
      if (buf_len_ == 64) {
        process(buf_);
        buf_len_ = 0;
      }
    }
  }

  std::string hex_digest() {
    const uint64_t bits = total_ * 8;
    uint8_t pad[72] = {0x80};
    const size_t rem = buf_len_;
    const size_t pad_len = (rem < 56) ? (56 - rem) : (120 - rem);
    update(pad, pad_len);
    uint8_t len_be[8];
    for (int i = 0; i < 8; ++i) len_be[i] = static_cast<uint8_t>(bits >> (56 - 8 * i));
    update(len_be, 8);
    static const char* hex = "0123456789abcdef";
    std::string out(40, '0');
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 4; ++j) {
        const uint8_t byte = static_cast<uint8_t>(h_[i] >> (24 - 8 * j));
        out[static_cast<size_t>(i * 8 + j * 2)] = hex[byte >> 4];
        out[static_cast<size_t>(i * 8 + j * 2 + 1)] = hex[byte & 0xF];
      }
    }
    return out;
  }

  static std::string hash(const void* data, size_t len) {
    Sha1 s;
    s.update(data, len);
    return s.hex_digest();
  }

 private:
  static uint32_t rol(uint32_t x, int n) { return (x << n) | (x >> (32 - n)); }

  void process(const uint8_t* block) {
    uint32_t w[80];
    for (int i = 0; i < 16; ++i) {
      w[i] = (static_cast<uint32_t>(block[i * 4]) << 24) | (static_cast<uint32_t>(block[i * 4 + 1]) << 16) |
             (static_cast<uint32_t>(block[i * 4 + 2]) << 8) | static_cast<uint32_t>(block[i * 4 + 3]);
    }
    for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
    for (int i = 0; i < 80; ++i) {
      uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const uint32_t t = rol(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = t;
    }
    h_[0] += a;
    h_[1] += b;
    h_[2] += c;
    h_[3] += d;
    h_[4] += e;
  }

  uint32_t h_[5];
  uint64_t total_;
  uint8_t buf_[64];
  size_t buf_len_;
};

}  // namespace dslfiqa
