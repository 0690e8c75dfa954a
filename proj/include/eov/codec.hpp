#pragma once

#include <eov/bytes.hpp>

#include <cstring>
#include <optional>
#include <stdexcept>

// canonical binary encoding used for everything that gets hashed or stored:
// fixed-width big-endian integers, u32 length prefix on byte strings, and
// u32 element counts on sequences. no implicit padding, no endian surprises.

namespace eov {

struct codec_error : std::runtime_error {
   explicit codec_error(const std::string& what) : std::runtime_error(what) {}
};

class writer {
 public:
   bytes& out() { return buf_; }
   bytes take() { return std::move(buf_); }

   void u8(std::uint8_t v) { buf_.push_back(v); }

   void u32(std::uint32_t v) {
      for (int s = 24; s >= 0; s -= 8)
         buf_.push_back(static_cast<std::uint8_t>(v >> s));
   }

   void u64(std::uint64_t v) {
      for (int s = 56; s >= 0; s -= 8)
         buf_.push_back(static_cast<std::uint8_t>(v >> s));
   }

   void raw(const std::uint8_t* data, std::size_t n) { buf_.insert(buf_.end(), data, data + n); }

   void bstr(const bytes& b) {
      u32(static_cast<std::uint32_t>(b.size()));
      raw(b.data(), b.size());
   }

   void str(const std::string& s) {
      u32(static_cast<std::uint32_t>(s.size()));
      raw(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
   }

   void digest(const digest32& d) { raw(d.data(), d.size()); }

 private:
   bytes buf_;
};

class reader {
 public:
   reader(const std::uint8_t* data, std::size_t n) : p_(data), end_(data + n) {}
   explicit reader(const bytes& b) : reader(b.data(), b.size()) {}

   bool done() const { return p_ == end_; }
   std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

   std::uint8_t u8() {
      need(1);
      return *p_++;
   }

   std::uint32_t u32() {
      need(4);
      std::uint32_t v = 0;
      for (int i = 0; i < 4; ++i)
         v = (v << 8) | *p_++;
      return v;
   }

   std::uint64_t u64() {
      need(8);
      std::uint64_t v = 0;
      for (int i = 0; i < 8; ++i)
         v = (v << 8) | *p_++;
      return v;
   }

   bytes bstr() {
      std::uint32_t n = u32();
      need(n);
      bytes b(p_, p_ + n);
      p_ += n;
      return b;
   }

   std::string str() {
      bytes b = bstr();
      return std::string(b.begin(), b.end());
   }

   digest32 digest() {
      need(32);
      digest32 d;
      std::memcpy(d.data(), p_, 32);
      p_ += 32;
      return d;
   }

 private:
   void need(std::size_t n) {
      if (remaining() < n)
         throw codec_error("truncated input");
   }

   const std::uint8_t* p_;
   const std::uint8_t* end_;
};

} // namespace eov
