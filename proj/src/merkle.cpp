#include <eov/merkle.hpp>

#include <eov/hash.hpp>

namespace eov {

digest32 merkle_root(const std::vector<digest32>& leaves) {
   if (leaves.empty())
      throw empty_leaves("merkle_root over zero leaves");
   std::vector<digest32> level = leaves;
   while (level.size() > 1) {
      std::vector<digest32> next;
      next.reserve((level.size() + 1) / 2);
      std::size_t i = 0;
      for (; i + 1 < level.size(); i += 2) {
         std::uint8_t buf[64];
         std::copy(level[i].begin(), level[i].end(), buf);
         std::copy(level[i + 1].begin(), level[i + 1].end(), buf + 32);
         next.push_back(sha256(buf, sizeof(buf)));
      }
      if (i < level.size())
         next.push_back(level[i]); // odd node rides up unchanged
      level = std::move(next);
   }
   return level[0];
}

} // namespace eov
