#pragma once

#include <eov/bytes.hpp>

namespace eov {

digest32 sha256(const std::uint8_t* data, std::size_t n);
digest32 sha256(const bytes& b);

// keyed digest: sha256(secret || payload). stands in for a signature —
// anyone holding the org secret can produce it, verifiers recompute it.
digest32 keyed_digest(const bytes& secret, const bytes& payload);

// burn cpu on r extra digest rounds over a seed; models signature-check cost.
void digest_spin(const digest32& seed, unsigned rounds);

} // namespace eov
