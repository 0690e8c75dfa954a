#pragma once

#include <eov/model.hpp>

#include <set>

namespace eov {

// which contracts a peer hosts. empty set = full peer (hosts everything).
struct contract_filter {
   std::string peer = "peer";
   std::set<std::string> contracts; // empty means universal

   bool hosts(const std::string& contract) const {
      return contracts.empty() || contracts.count(contract) != 0;
   }

   // a tx is admitted when any invoked contract is hosted.
   bool admits(const transaction& tx) const {
      if (contracts.empty())
         return true;
      for (const auto& c : tx.contracts)
         if (contracts.count(c))
            return true;
      return false;
   }
};

// filtered view of a block. the leaf vector carries every transaction's id
// (leaf hash = tx id), so the merkle root — and therefore the hash chain —
// stays verifiable from any subset of transaction bodies.
//
// invariants:
//  - all_tx_ids doubles as the merkle leaf vector; root/hash equal the
//    full block's.
//  - for each included (i, tx): compute_tx_id(tx) == all_tx_ids[i].
//  - included indices are exactly those admitted by the applied filter.
struct sparse_block {
   std::uint64_t number = 0;
   digest32 prev_hash{};
   digest32 merkle_root{};
   digest32 hash{};
   contract_filter applied_filter;
   std::vector<digest32> all_tx_ids;
   std::vector<std::pair<std::uint32_t, transaction>> included;
};

sparse_block make_sparse(const block& b, const contract_filter& filter);

// nullopt = sound; otherwise a short reason for the first failed check.
std::optional<std::string> verify_sparse(const sparse_block& sb, const digest32& expected_prev);

bytes encode_sparse(const sparse_block& sb);
sparse_block decode_sparse(const bytes& b);

// exact, persistent set of every transaction id ever admitted; replays are
// flagged instead of re-executed.
class tx_id_set {
 public:
   // returns indices of ids already present; inserts the fresh ones.
   // a repeat within one call flags the later occurrence.
   std::vector<std::uint32_t> check_and_insert(const std::vector<digest32>& ids);

   bool contains(const digest32& id) const { return ids_.count(id) != 0; }
   std::size_t size() const { return ids_.size(); }
   const std::set<digest32>& ids() const { return ids_; }

 private:
   std::set<digest32> ids_;
};

} // namespace eov
