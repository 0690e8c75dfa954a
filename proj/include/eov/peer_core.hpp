#pragma once

#include <eov/dep_graph.hpp>
#include <eov/mod_index.hpp>
#include <eov/result_map.hpp>
#include <eov/sparse_block.hpp>
#include <eov/state_engine.hpp>

#include <deque>
#include <memory>
#include <mutex>

namespace eov {

// one peer's verdict about one transaction, scoped to a single invoked
// contract. a transaction is valid for the whole org only when every invoked
// contract has a valid verdict from some hosting peer.
struct verdict_msg {
   tx_ref ref;
   std::string contract;
   tx_validity verdict = tx_validity::not_validated;
   std::string from_peer;

   bool operator==(const verdict_msg&) const = default;
};

bytes encode_verdict(const verdict_msg& m);
verdict_msg decode_verdict(const bytes& b);

// work handed to one validation worker. the body is copied out so the
// endorsement check can run without holding the peer lock.
struct dispatch {
   tx_ref ref;
   transaction tx;
};

struct finish_result {
   tx_validity validity = tx_validity::not_validated; // deferred when parked
   bool parked = false;
   std::vector<verdict_msg> broadcasts;
};

struct commit_stats {
   std::uint64_t number = 0;
   std::size_t leaves = 0;
   std::size_t admitted = 0;
   std::size_t valid = 0;
   std::size_t deferred = 0;
   std::uint64_t bytes_appended = 0;
};

struct peer_counters {
   std::uint64_t blocks_committed = 0;
   std::uint64_t leaves_committed = 0;
   std::uint64_t admitted_committed = 0; // locally validated and committed
   std::uint64_t valid = 0;
   std::uint64_t invalid_serializability = 0;
   std::uint64_t invalid_endorsement = 0;
   std::uint64_t invalid_duplicate = 0;
   std::uint64_t deferred_at_commit = 0;
   std::uint64_t corrections = 0;
   std::uint64_t verdicts_sent = 0;
   std::uint64_t verdicts_received = 0;
};

struct peer_config {
   std::string name = "peer";
   contract_filter filter;         // empty contract set = hosts everything
   std::uint64_t endorse_spin = 0; // per-endorsement signature-check cost
   std::string store_path;         // empty = in-memory block store
   bool fsync_each = false;
};

// one peer: graph-scheduled validation in front, ordered commit behind,
// cross-peer verdicts when a transaction spans contracts this peer does not
// host. thread-safe; the validate/commit split is the concurrency seam.
//
// deferral lifecycle: a transaction whose remote verdicts are outstanding is
// parked in the graph and handed to the committer as a pending (deferred)
// result. if the verdicts complete first, the pending entry upgrades in
// place and the block commits clean; if the committer gets there first, the
// block commits with the deferred flag and the eventual outcome lands as a
// correction record plus (when valid) state writes at the original version.
class peer_core {
 public:
   explicit peer_core(peer_config cfg);

   // ---- setup -------------------------------------------------------------
   // install genesis state and policies as block-0 writes: states first then
   // policies, each group in key order, versioned (0, seq). they appear in
   // the modification index so snapshots can recover them.
   void bootstrap(const std::vector<std::pair<state_key, bytes>>& states,
                  const std::vector<endorsement_policy>& policies);

   // start this peer from donated snapshots instead of block 1: seeds state,
   // modification index and the duplicate id set, then expects block
   // `height`+1 whose prev_hash must equal `head_hash`.
   void seed_join(const std::vector<snapshot_manifest>& manifests, std::uint64_t height,
                  const digest32& head_hash, const std::vector<digest32>& known_ids);

   // ---- ingress -----------------------------------------------------------
   // verifies chain linkage, flags duplicate ids, admits the rest into the
   // waiting graph. returns the number of transactions admitted.
   std::size_t ingest(const block& b);
   std::size_t ingest(const sparse_block& sb);

   // ---- validation workers --------------------------------------------------
   std::optional<dispatch> next_transaction();

   // lock-free phase: verify endorsements for the hosted scope. policies are
   // snapshotted under the lock; graph ordering keeps them stable until this
   // transaction finishes. throws unknown_policy.
   bool check_endorsements_for(const transaction& tx);

   // locked phase: concurrency check, write application, graph removal,
   // result posting. returned broadcasts must be handed to the verdict bus.
   finish_result finish_validation(tx_ref ref, bool endorsements_ok);

   // a remote verdict arrived; may finalize parked transactions or resolve
   // committed deferrals, which can trigger follow-up broadcasts.
   std::vector<verdict_msg> deliver_verdict(const verdict_msg& m);

   // ---- committer -----------------------------------------------------------
   struct front_info {
      std::uint64_t number = 0;
      std::size_t leaves = 0;
      std::vector<std::uint32_t> admitted; // indices whose results to pop
   };
   std::optional<front_info> front_block() const;

   // commit the front block. `popped` pairs with front_info::admitted, in
   // order, as returned by results().pop for each (number, index).
   commit_stats commit_front(const std::vector<tx_validity>& popped);

   result_map& results() { return results_; }

   // ---- snapshots -----------------------------------------------------------
   snapshot_manifest extract(const std::string& contract, std::uint64_t as_of) const;

   // ---- inspection ----------------------------------------------------------
   digest32 state_digest() const;
   std::string state_dump() const;
   state_view db_rows() const; // copy of the committed state map
   std::vector<tx_validity> stored_bitmap(std::uint64_t number) const;
   std::optional<std::pair<bytes, version>> read_state(const state_key& k) const;
   std::uint64_t committed_height() const;
   std::uint64_t next_expected_block() const;
   digest32 head_hash() const;
   std::vector<digest32> known_tx_ids() const;
   peer_counters counters() const;
   std::size_t waiting_count() const;
   std::size_t deferred_outstanding() const;
   std::uint64_t store_bytes_written() const;
   std::size_t store_content_bytes() const;
   const peer_config& config() const { return cfg_; }

   // test hooks; hold no lock. single-threaded use only.
   waiting_tx_graph& graph_for_test() { return graph_; }
   ledger_state& ledger_for_test() { return ledger_; }
   modification_index& mod_index_for_test() { return mod_index_; }
   block_store& store_for_test() { return *store_; }

 private:
   struct pending_block {
      std::uint64_t number = 0;
      std::size_t leaves = 0;
      std::optional<block> full;
      std::optional<sparse_block> sparse;
      std::vector<tx_validity> validity; // prefilled: duplicates, unadmitted
      std::vector<std::uint32_t> admitted;
   };

   std::vector<std::string> hosted_scope(const transaction& tx) const;
   bool is_distributed(const transaction& tx) const;
   const transaction* find_body(tx_ref ref) const;
   std::vector<verdict_msg> make_verdicts(tx_ref ref, const std::vector<std::string>& scope,
                                          tx_validity v);
   std::size_t admit(std::uint64_t number, std::vector<digest32> ids, pending_block&& pb);
   void finalize(tx_ref ref, const transaction& tx, const std::vector<std::string>& scope,
                 tx_validity org_v, std::vector<verdict_msg>& out);
   void settle(tx_ref ref, tx_validity v);
   void settle_victim(tx_ref ref, tx_validity v, std::vector<verdict_msg>& out);
   bool has_parked_ancestor(tx_ref ref) const;
   std::optional<tx_validity> tally_invalid(tx_ref ref) const;
   bool tally_complete(tx_ref ref, const transaction& tx) const;

   peer_config cfg_;
   mutable std::mutex mu_;
   waiting_tx_graph graph_;
   ledger_state ledger_;
   modification_index mod_index_;
   state_view seeded_; // genesis / manifest values, never recoverable from blocks
   std::unique_ptr<block_store> store_;
   tx_id_set dup_set_;
   result_map results_;
   std::deque<pending_block> pending_;

   std::map<tx_ref, std::map<std::string, tx_validity>> tallies_;
   std::set<tx_ref> parked_refs_;
   std::set<tx_ref> deferred_committed_; // popped deferred, awaiting correction
   std::uint64_t next_block_ = 1;
   digest32 last_hash_{};
   bool bootstrapped_ = false;
   peer_counters ctr_;
};

} // namespace eov
