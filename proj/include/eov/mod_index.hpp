#pragma once

#include <eov/model.hpp>

#include <map>
#include <tuple>

namespace eov {

class block_store;
class state_db;

// per-transaction record of which keys a committed transaction touched,
// ordered by (contract, block, tx) so a contract's whole modification
// history is one range scan. policy writes ride with the contract they
// govern (is_policy reconstructs the reserved namespace).
struct mod_entry {
   bytes key;
   bool is_policy = false;
   bool is_delete = false;
   bool is_deferred = false;
};

class modification_index {
 public:
   using index_key = std::tuple<std::string, std::uint64_t, std::uint32_t>;

   void record(const std::string& contract, tx_ref ref, mod_entry entry);

   // deferral resolved valid: clear the deferred flags on the tx's entries.
   void finalize_deferred(tx_ref ref);
   // deferral resolved invalid: the writes never happened; drop the entries.
   void erase_tx(tx_ref ref);

   // all distinct keys of `contract` modified in blocks [0, up_to].
   std::vector<state_key> keys_modified(const std::string& contract, std::uint64_t up_to) const;

   // newest entry for `key` in blocks [0, up_to], scanning backward.
   struct last_write {
      tx_ref ref;
      bool is_delete = false;
      bool is_deferred = false;
   };
   std::optional<last_write> find_last_write(const state_key& key, std::uint64_t up_to) const;

   std::size_t record_count() const;
   const std::map<index_key, std::vector<mod_entry>>& raw() const { return m_; }

 private:
   std::map<index_key, std::vector<mod_entry>> m_;
};

// portable per-contract snapshot: every live key of the contract as of a
// block, with the version stamps the donor committed them at.
struct snapshot_manifest {
   std::string contract;
   std::uint64_t as_of_block = 0;
   std::vector<std::tuple<state_key, version, bytes>> entries; // sorted by key

   std::size_t byte_size() const; // encoded size, for transfer accounting
};

bytes encode_manifest(const snapshot_manifest& m);
snapshot_manifest decode_manifest(const bytes& b); // checks the body digest

using state_view = std::map<state_key, std::pair<version, bytes>>;

// value of `key` as of block `up_to`: direct from the state db when its live
// version is old enough, otherwise recovered from the owning transaction's
// write-set in the block store. absent when the last operation was a delete
// (or nothing ever wrote it). unresolved deferred writes are skipped.
// `seeded` holds values the peer received outside any block — its genesis
// config or the manifests it joined from — which the store can never serve.
std::optional<std::pair<bytes, version>> recover_value(const state_key& key, std::uint64_t up_to,
                                                       const modification_index& index,
                                                       const state_db& db,
                                                       const block_store& store,
                                                       const state_view* seeded = nullptr);

snapshot_manifest extract_snapshot(const std::string& contract, std::uint64_t as_of,
                                   const modification_index& index, const state_db& db,
                                   const block_store& store,
                                   const state_view* seeded = nullptr);

} // namespace eov
