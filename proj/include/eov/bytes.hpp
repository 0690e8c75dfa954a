#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace eov {

using bytes = std::vector<std::uint8_t>;
using digest32 = std::array<std::uint8_t, 32>;

inline bytes to_bytes(std::string_view s) {
   return bytes(s.begin(), s.end());
}

inline std::string to_string(const bytes& b) {
   return std::string(b.begin(), b.end());
}

inline std::string hex(const std::uint8_t* data, std::size_t n) {
   static const char* digits = "0123456789abcdef";
   std::string out;
   out.reserve(2 * n);
   for (std::size_t i = 0; i < n; ++i) {
      out.push_back(digits[data[i] >> 4]);
      out.push_back(digits[data[i] & 0x0f]);
   }
   return out;
}

inline std::string hex(const bytes& b) { return hex(b.data(), b.size()); }
inline std::string hex(const digest32& d) { return hex(d.data(), d.size()); }

// short prefix, for dumps and logs
inline std::string hex8(const digest32& d) { return hex(d.data(), 4); }

} // namespace eov
