#include <eov/hash.hpp>

#include <openssl/sha.h>

namespace eov {

digest32 sha256(const std::uint8_t* data, std::size_t n) {
   digest32 out{};
   SHA256(data, n, out.data());
   return out;
}

digest32 sha256(const bytes& b) { return sha256(b.data(), b.size()); }

digest32 keyed_digest(const bytes& secret, const bytes& payload) {
   bytes buf;
   buf.reserve(secret.size() + payload.size());
   buf.insert(buf.end(), secret.begin(), secret.end());
   buf.insert(buf.end(), payload.begin(), payload.end());
   return sha256(buf);
}

void digest_spin(const digest32& seed, unsigned rounds) {
   digest32 d = seed;
   for (unsigned i = 0; i < rounds; ++i)
      d = sha256(d.data(), d.size());
   // fold the result into a volatile sink so the loop can't be elided
   volatile std::uint8_t sink = d[0];
   (void)sink;
}

} // namespace eov
