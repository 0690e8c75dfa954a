#pragma once

#include <eov/bytes.hpp>
#include <eov/errors.hpp>

#include <vector>

namespace eov {

// binary merkle tree over precomputed leaf digests. an odd node at any level
// is promoted unchanged to the next level (no self-pairing, no duplicate-last).
digest32 merkle_root(const std::vector<digest32>& leaves);

} // namespace eov
