#pragma once

#include <eov/model.hpp>
#include <eov/sparse_block.hpp>

#include <map>
#include <set>

namespace eov {

// dependency kinds between a newer transaction and an older one it conflicts
// with. rw, pr and ep_rw are the fate kinds: if the older side applies its
// writes, the newer side's reads are provably stale and it must be invalid.
enum dep_kind : std::uint8_t {
   dep_rw = 1u << 0,    // newer reads a key the older writes
   dep_wr = 1u << 1,    // newer writes a key the older read (incl. via range)
   dep_ww = 1u << 2,    // both write the same key
   dep_pr = 1u << 3,    // newer's range covers a key the older writes
   dep_ep_rw = 1u << 4, // rw over an endorsement-policy key
   dep_ep_wr = 1u << 5, // wr over an endorsement-policy key
   dep_ep_ww = 1u << 6, // ww over an endorsement-policy key
};

constexpr std::uint8_t fate_kinds = dep_rw | dep_pr | dep_ep_rw;

std::string kinds_to_string(std::uint8_t mask);

// the waiting-transactions graph. nodes are transactions admitted from
// blocks but not yet finally validated; every edge points from a newer
// transaction to an older one, so the graph is acyclic by construction.
//
// eligibility: a node with zero out-edges has no unresolved dependee — all
// keys it read are at their final pre-validation versions — so it can be
// validated in parallel with any other eligible node.
class waiting_tx_graph {
 public:
   // admits txs the filter accepts; returns number of nodes added. a node's
   // stored body is reduced to the keys the filter hosts, so edges, fate
   // checks and dispatched work never mention keys the owning peer does not
   // store. tx.contracts stays intact — scope bookkeeping needs the full
   // span even when the local body is partial.
   std::size_t add_block(const block& b, const contract_filter* filter = nullptr);
   std::size_t add_sparse(const sparse_block& sb, const contract_filter* filter = nullptr);

   // oldest (block, index) node with zero out-edges, not yet handed out;
   // marks it dispatched. absent when nothing is eligible.
   std::optional<tx_ref> get_next_transaction();

   // removes the node. is_valid=true means its writes were applied, which
   // seals the fate of dependents whose reads its write-set contradicts:
   // they are removed transitively and reported (each exactly once).
   std::vector<std::pair<tx_ref, tx_validity>> remove_from_graph(tx_ref ref, bool is_valid);

   // in-graph writers of any key within [start, end) of the contract.
   std::set<tx_ref> find_range_writers(const std::string& contract, const bytes& start,
                                       const std::optional<bytes>& end) const;

   // a parked node stays in the graph (holding its dependents) while remote
   // verdicts are outstanding; it is never handed out again.
   void park(tx_ref ref);
   bool is_parked(tx_ref ref) const;

   // every node that transitively depends on ref (via in-edges).
   std::vector<tx_ref> in_closure(tx_ref ref) const;
   // direct dependents only.
   std::vector<tx_ref> dependents(tx_ref ref) const;
   // direct dependees: the older nodes ref still waits on.
   std::vector<tx_ref> dependees(tx_ref ref) const;

   bool contains(tx_ref ref) const { return nodes_.count(ref) != 0; }
   bool has_out_edges(tx_ref ref) const;
   bool is_dispatched(tx_ref ref) const;
   const transaction* find_tx(tx_ref ref) const;
   std::uint8_t edge_kinds(tx_ref from, tx_ref to) const;
   std::size_t size() const { return nodes_.size(); }
   bool empty() const { return nodes_.empty(); }

   // one line per node in (block, index) order; one line per out-edge:
   //   "(b,t)" / "(b,t) -> (b,t) kind,kind"
   std::string dump() const;

   // debug: recompute the key index from the nodes and compare.
   bool index_consistent() const;

 private:
   struct node {
      transaction tx;
      std::map<tx_ref, std::uint8_t> out; // older transactions this one waits on
      std::map<tx_ref, std::uint8_t> in;  // newer transactions waiting on this one
      bool dispatched = false;
      bool parked = false;
   };

   struct key_entry {
      std::set<tx_ref> readers;
      std::vector<tx_ref> writers; // in admission (= ascending ref) order
   };

   struct range_window {
      bytes start;
      std::optional<bytes> end;
      tx_ref ref;
      bool covers(const bytes& k) const { return !(k < start) && (!end || k < *end); }
   };

   void add_one(const transaction& tx, tx_ref ref, const contract_filter* filter);
   void add_edge(tx_ref from, tx_ref to, std::uint8_t kind);
   void deindex(const node& n, tx_ref ref);
   void do_remove(tx_ref ref, bool applied, std::vector<std::pair<tx_ref, tx_validity>>& out);

   // true when applying `writer`'s write-set (at wref) contradicts what
   // `dep` observed through point reads or range scans.
   static bool fate_fires(const transaction& dep, const transaction& writer, tx_ref wref);

   std::map<tx_ref, node> nodes_;
   std::map<state_key, key_entry> key_index_;
   std::map<std::string, std::vector<range_window>> windows_;
   std::uint64_t last_block_ = 0;
};

} // namespace eov
