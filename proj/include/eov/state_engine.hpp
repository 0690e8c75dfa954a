#pragma once

#include <eov/mod_index.hpp>
#include <eov/model.hpp>
#include <eov/sparse_block.hpp>

#include <fstream>
#include <map>
#include <mutex>

namespace eov {

// plain key-ordered view of committed state. the canonical digest is defined
// over this shape so any component holding one (the db, the reference
// validator, a reconstructed snapshot) hashes to comparable values.
using state_view = std::map<state_key, std::pair<version, bytes>>;

digest32 state_view_digest(const state_view& m);

// committed state: ordered so contract-scoped iteration and range scans are
// native. every stored version is <= the last committed block.
class state_db {
 public:
   std::optional<std::pair<version, bytes>> get(const state_key& k) const;
   void put(const state_key& k, version v, bytes value);
   void erase(const state_key& k);

   // key-ordered slice of one contract's keyspace over [start, end).
   std::vector<std::tuple<state_key, version, bytes>> scan(const std::string& contract,
                                                           const bytes& start,
                                                           const std::optional<bytes>& end) const;

   std::size_t size() const { return m_.size(); }
   std::size_t byte_size() const; // keys + values, for transfer accounting
   digest32 digest() const;       // canonical digest over all entries
   std::string dump() const;      // "(contract, key, version, value-digest)" per line

   template <typename F>
   void for_each(F&& f) const {
      for (const auto& [k, vv] : m_)
         f(k, vv.first, vv.second);
   }

 private:
   state_view m_;
};

// validated-but-uncommitted writes. each key holds a version *list* so a
// later write can never silently clobber an earlier uncommitted one and
// out-of-order application is detectable instead of absorbed.
class dirty_state_buffer {
 public:
   struct entry {
      version ver;
      bytes value;
      bool is_delete = false;
   };

   void apply(tx_ref ref, const write_entry& we);
   const entry* latest(const state_key& k) const;

   // key-ordered iteration hooks for merged range scans.
   const std::map<state_key, std::vector<entry>>& by_key() const { return m_; }

   // remove every entry belonging to `block`, feeding them (version order)
   // to the sink; used by commit to fold the block into the state db.
   template <typename F>
   void purge_block(std::uint64_t block, F&& sink) {
      auto bit = by_block_.find(block);
      if (bit == by_block_.end())
         return;
      std::vector<std::pair<state_key, entry>> batch;
      for (const auto& k : bit->second) {
         auto kit = m_.find(k);
         if (kit == m_.end())
            continue;
         auto& list = kit->second;
         for (auto it = list.begin(); it != list.end();) {
            if (it->ver.block == block) {
               batch.emplace_back(k, std::move(*it));
               it = list.erase(it);
            } else {
               ++it;
            }
         }
         if (list.empty())
            m_.erase(kit);
      }
      by_block_.erase(bit);
      std::sort(batch.begin(), batch.end(), [](const auto& a, const auto& b) {
         return a.second.ver < b.second.ver || (a.second.ver == b.second.ver && a.first < b.first);
      });
      for (auto& [k, e] : batch)
         sink(k, e);
   }

   bool empty() const { return m_.empty(); }
   std::size_t entry_count() const;
   std::string dump() const; // "(contract, key, version, delete?)" per line

 private:
   std::map<state_key, std::vector<entry>> m_;
   std::map<std::uint64_t, std::set<state_key>> by_block_;
};

// append-only record of committed blocks plus each transaction's validity.
// numbers are contiguous from 1. when a path is given, every append lands in
// the file (framed records, optionally fsync'd) — that write is the real
// disk cost of commit.
class block_store {
 public:
   struct stored_block {
      std::uint64_t number = 0;
      digest32 prev_hash{}, merkle_root{}, hash{};
      std::vector<digest32> all_tx_ids;
      std::vector<std::pair<std::uint32_t, transaction>> txs; // full peer: all of them
      std::vector<tx_validity> validity;                      // one per leaf
      bool sparse = false;

      const transaction* find_tx(std::uint32_t index) const;
   };

   block_store() = default;
   explicit block_store(std::string path, bool fsync_each = false);

   void append(const block& b, std::vector<tx_validity> validity);
   void append(const sparse_block& sb, std::vector<tx_validity> validity);
   void correct(std::uint64_t block, std::uint32_t tx, tx_validity final_v);

   const stored_block* find(std::uint64_t number) const;
   std::uint64_t height() const { return base_ + blocks_.size(); }
   std::uint64_t bytes_written() const { return bytes_written_; }
   std::size_t content_bytes() const; // encoded block payloads only (replay cost)

   // a peer that joined from a snapshot starts its store above the blocks it
   // never saw. only callable while empty.
   void set_base(std::uint64_t height);
   std::uint64_t base() const { return base_; }

 private:
   void write_record(std::uint8_t type, const bytes& payload);

   std::vector<stored_block> blocks_;
   std::string path_;
   bool fsync_each_ = false;
   int fd_ = -1;
   std::uint64_t base_ = 0;
   std::uint64_t bytes_written_ = 0;
};

// one row per applied write; values intentionally not retained.
class history_db {
 public:
   void append(const state_key& k, version v) { rows_.emplace_back(k, v); }
   std::size_t size() const { return rows_.size(); }
   const std::vector<std::pair<state_key, version>>& rows() const { return rows_; }

 private:
   std::vector<std::pair<state_key, version>> rows_;
};

// the read/write substrate a peer validates and commits against.
class ledger_state {
 public:
   // dirty-aware point read: latest uncommitted entry wins; a tombstone
   // hides the committed value.
   std::optional<std::pair<bytes, version>> read_through(const state_key& k) const;

   // dirty-aware merged range scan, key order, tombstones omitted.
   std::vector<std::tuple<state_key, version, bytes>> range_through(
      const std::string& contract, const bytes& start, const std::optional<bytes>& end) const;

   std::optional<version> version_of(const state_key& k) const;

   void apply_dirty(tx_ref ref, const write_entry& we) { dirty_.apply(ref, we); }

   // fold `block`'s dirty entries into the state db (history recorded),
   // leaving entries of other blocks untouched.
   void fold_block(std::uint64_t block);

   // direct committed-state write, used by bootstrap, snapshot seeding and
   // deferral resolution (original version stamps). a newer committed
   // version is never overwritten by an older one.
   void put_committed(const state_key& k, version v, bytes value, bool is_delete,
                      bool record_history);

   state_db& db() { return db_; }
   const state_db& db() const { return db_; }
   dirty_state_buffer& dirty() { return dirty_; }
   const dirty_state_buffer& dirty() const { return dirty_; }
   history_db& history() { return history_; }
   const history_db& history() const { return history_; }

 private:
   state_db db_;
   dirty_state_buffer dirty_;
   history_db history_;
};

} // namespace eov
