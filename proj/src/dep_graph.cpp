#include <eov/dep_graph.hpp>

#include <eov/errors.hpp>

#include <algorithm>
#include <sstream>

namespace eov {

std::string kinds_to_string(std::uint8_t mask) {
   static const std::pair<dep_kind, const char*> names[] = {
      {dep_rw, "rw"},       {dep_wr, "wr"},       {dep_ww, "ww"},       {dep_pr, "pr"},
      {dep_ep_rw, "ep_rw"}, {dep_ep_wr, "ep_wr"}, {dep_ep_ww, "ep_ww"},
   };
   std::string out;
   for (const auto& [kind, name] : names) {
      if (mask & kind) {
         if (!out.empty())
            out += ',';
         out += name;
      }
   }
   return out;
}

namespace {

// a peer only stores keys of hosted contracts, so only those keys can order
// or doom anything locally; every other entry is someone else's slice of the
// transaction and gets dropped from the node body up front.
transaction scope_body(const transaction& tx, const contract_filter& f) {
   transaction out = tx;
   std::erase_if(out.reads,
                 [&](const read_entry& re) { return !f.hosts(effective_contract(re.key)); });
   std::erase_if(out.writes,
                 [&](const write_entry& we) { return !f.hosts(effective_contract(we.key)); });
   std::erase_if(out.ranges, [&](const range_query_info& rq) { return !f.hosts(rq.contract); });
   return out;
}

} // namespace

std::size_t waiting_tx_graph::add_block(const block& b, const contract_filter* filter) {
   if (b.number <= last_block_)
      throw out_of_order_block("block " + std::to_string(b.number) + " at or below " +
                               std::to_string(last_block_));
   last_block_ = b.number;
   std::size_t added = 0;
   for (std::uint32_t i = 0; i < b.txs.size(); ++i) {
      if (filter && !filter->admits(b.txs[i]))
         continue;
      add_one(b.txs[i], tx_ref{b.number, i}, filter);
      ++added;
   }
   return added;
}

std::size_t waiting_tx_graph::add_sparse(const sparse_block& sb, const contract_filter* filter) {
   if (sb.number <= last_block_)
      throw out_of_order_block("block " + std::to_string(sb.number) + " at or below " +
                               std::to_string(last_block_));
   last_block_ = sb.number;
   for (const auto& [i, tx] : sb.included)
      add_one(tx, tx_ref{sb.number, i}, filter);
   return sb.included.size();
}

void waiting_tx_graph::add_edge(tx_ref from, tx_ref to, std::uint8_t kind) {
   if (from == to)
      return;
   nodes_[from].out[to] |= kind;
   nodes_[to].in[from] |= kind;
}

void waiting_tx_graph::add_one(const transaction& tx, tx_ref ref, const contract_filter* filter) {
   node& n = nodes_[ref];
   n.tx = (filter && !filter->contracts.empty()) ? scope_body(tx, *filter) : tx;
   const transaction& t = n.tx;

   auto writers_of = [&](const state_key& k) -> const std::vector<tx_ref>* {
      auto it = key_index_.find(k);
      return it == key_index_.end() ? nullptr : &it->second.writers;
   };

   for (const auto& re : t.reads) {
      std::uint8_t kind = re.key.contract == policy_contract ? dep_ep_rw : dep_rw;
      if (const auto* ws = writers_of(re.key))
         for (tx_ref w : *ws)
            add_edge(ref, w, kind);
   }

   for (const auto& we : t.writes) {
      bool policy = we.key.contract == policy_contract;
      if (const auto* ws = writers_of(we.key))
         for (tx_ref w : *ws)
            add_edge(ref, w, policy ? dep_ep_ww : dep_ww);
      if (auto it = key_index_.find(we.key); it != key_index_.end())
         for (tx_ref r : it->second.readers)
            add_edge(ref, r, policy ? dep_ep_wr : dep_wr);
      // writing into an older transaction's scanned range re-shapes what that
      // scan would return; order behind it like any other read of the key.
      if (auto wit = windows_.find(we.key.contract); wit != windows_.end())
         for (const auto& win : wit->second)
            if (win.covers(we.key.key))
               add_edge(ref, win.ref, policy ? dep_ep_wr : dep_wr);
   }

   for (const auto& rq : t.ranges) {
      for (tx_ref w : find_range_writers(rq.contract, rq.start_key, rq.end_key))
         add_edge(ref, w, dep_pr);
   }

   // index after edge extraction so the tx never conflicts with itself
   for (const auto& re : t.reads)
      key_index_[re.key].readers.insert(ref);
   for (const auto& we : t.writes)
      key_index_[we.key].writers.push_back(ref);
   for (const auto& rq : t.ranges)
      windows_[rq.contract].push_back(range_window{rq.start_key, rq.end_key, ref});
}

std::optional<tx_ref> waiting_tx_graph::get_next_transaction() {
   for (auto& [ref, n] : nodes_) {
      if (!n.dispatched && !n.parked && n.out.empty()) {
         n.dispatched = true;
         return ref;
      }
   }
   return std::nullopt;
}

bool waiting_tx_graph::fate_fires(const transaction& dep, const transaction& writer, tx_ref wref) {
   for (const auto& we : writer.writes) {
      for (const auto& re : dep.reads) {
         if (re.key != we.key)
            continue;
         if (we.is_delete) {
            if (re.ver)
               return true; // observed a value the delete just erased
         } else {
            if (!re.ver || *re.ver < wref)
               return true; // observed nothing, or something older than this write
         }
      }
      for (const auto& rq : dep.ranges) {
         if (!rq.contains(we.key))
            continue;
         const read_entry* seen = nullptr;
         for (const auto& o : rq.observed)
            if (o.key == we.key) {
               seen = &o;
               break;
            }
         if (we.is_delete) {
            if (seen && seen->ver)
               return true; // scanned key vanishes
         } else {
            if (!seen || !seen->ver || *seen->ver < wref)
               return true; // phantom appears, or scanned version goes stale
         }
      }
   }
   return false;
}

void waiting_tx_graph::deindex(const node& n, tx_ref ref) {
   for (const auto& re : n.tx.reads) {
      auto it = key_index_.find(re.key);
      if (it == key_index_.end())
         continue;
      it->second.readers.erase(ref);
      if (it->second.readers.empty() && it->second.writers.empty())
         key_index_.erase(it);
   }
   for (const auto& we : n.tx.writes) {
      auto it = key_index_.find(we.key);
      if (it == key_index_.end())
         continue;
      auto& ws = it->second.writers;
      ws.erase(std::remove(ws.begin(), ws.end(), ref), ws.end());
      if (it->second.readers.empty() && ws.empty())
         key_index_.erase(it);
   }
   for (const auto& rq : n.tx.ranges) {
      auto it = windows_.find(rq.contract);
      if (it == windows_.end())
         continue;
      auto& v = it->second;
      v.erase(std::remove_if(v.begin(), v.end(),
                             [&](const range_window& w) { return w.ref == ref; }),
              v.end());
      if (v.empty())
         windows_.erase(it);
   }
}

void waiting_tx_graph::do_remove(tx_ref ref, bool applied,
                                 std::vector<std::pair<tx_ref, tx_validity>>& out) {
   auto it = nodes_.find(ref);
   if (it == nodes_.end())
      throw unknown_tx("no waiting transaction " + to_string(ref));
   node n = std::move(it->second);
   nodes_.erase(it);
   deindex(n, ref);
   for (const auto& [older, kinds] : n.out) {
      (void)kinds;
      if (auto oit = nodes_.find(older); oit != nodes_.end())
         oit->second.in.erase(ref);
   }
   std::vector<tx_ref> deps;
   deps.reserve(n.in.size());
   for (const auto& [newer, kinds] : n.in) {
      (void)kinds;
      if (auto nit = nodes_.find(newer); nit != nodes_.end()) {
         nit->second.out.erase(ref);
         deps.push_back(newer);
      }
   }
   if (!applied)
      return;
   // this node's writes took effect: dependents whose reads they contradict
   // are sealed. their own removal is not an application, so the cascade
   // re-checks each neighbor against this writer only.
   for (tx_ref d : deps) {
      auto dit = nodes_.find(d);
      if (dit == nodes_.end())
         continue; // already swept by an earlier branch of this cascade
      if (fate_fires(dit->second.tx, n.tx, ref)) {
         out.emplace_back(d, tx_validity::invalid_serializability);
         do_remove(d, false, out);
      }
   }
}

std::vector<std::pair<tx_ref, tx_validity>> waiting_tx_graph::remove_from_graph(tx_ref ref,
                                                                                bool is_valid) {
   std::vector<std::pair<tx_ref, tx_validity>> out;
   do_remove(ref, is_valid, out);
   return out;
}

std::set<tx_ref> waiting_tx_graph::find_range_writers(const std::string& contract,
                                                      const bytes& start,
                                                      const std::optional<bytes>& end) const {
   std::set<tx_ref> out;
   for (auto it = key_index_.lower_bound(state_key{contract, start}); it != key_index_.end();
        ++it) {
      if (it->first.contract != contract)
         break;
      if (end && !(it->first.key < *end))
         break;
      for (tx_ref w : it->second.writers)
         out.insert(w);
   }
   return out;
}

void waiting_tx_graph::park(tx_ref ref) {
   auto it = nodes_.find(ref);
   if (it == nodes_.end())
      throw unknown_tx("no waiting transaction " + to_string(ref));
   it->second.parked = true;
}

bool waiting_tx_graph::is_parked(tx_ref ref) const {
   auto it = nodes_.find(ref);
   return it != nodes_.end() && it->second.parked;
}

std::vector<tx_ref> waiting_tx_graph::in_closure(tx_ref ref) const {
   std::set<tx_ref> seen;
   std::vector<tx_ref> frontier{ref};
   while (!frontier.empty()) {
      tx_ref cur = frontier.back();
      frontier.pop_back();
      auto it = nodes_.find(cur);
      if (it == nodes_.end())
         continue;
      for (const auto& [newer, kinds] : it->second.in) {
         (void)kinds;
         if (seen.insert(newer).second)
            frontier.push_back(newer);
      }
   }
   return std::vector<tx_ref>(seen.begin(), seen.end());
}

std::vector<tx_ref> waiting_tx_graph::dependents(tx_ref ref) const {
   std::vector<tx_ref> out;
   auto it = nodes_.find(ref);
   if (it == nodes_.end())
      return out;
   for (const auto& [newer, kinds] : it->second.in) {
      (void)kinds;
      out.push_back(newer);
   }
   return out;
}

std::vector<tx_ref> waiting_tx_graph::dependees(tx_ref ref) const {
   std::vector<tx_ref> out;
   auto it = nodes_.find(ref);
   if (it == nodes_.end())
      return out;
   for (const auto& [older, kinds] : it->second.out) {
      (void)kinds;
      out.push_back(older);
   }
   return out;
}

bool waiting_tx_graph::has_out_edges(tx_ref ref) const {
   auto it = nodes_.find(ref);
   return it != nodes_.end() && !it->second.out.empty();
}

bool waiting_tx_graph::is_dispatched(tx_ref ref) const {
   auto it = nodes_.find(ref);
   return it != nodes_.end() && it->second.dispatched;
}

const transaction* waiting_tx_graph::find_tx(tx_ref ref) const {
   auto it = nodes_.find(ref);
   return it == nodes_.end() ? nullptr : &it->second.tx;
}

std::uint8_t waiting_tx_graph::edge_kinds(tx_ref from, tx_ref to) const {
   auto it = nodes_.find(from);
   if (it == nodes_.end())
      return 0;
   auto eit = it->second.out.find(to);
   return eit == it->second.out.end() ? 0 : eit->second;
}

std::string waiting_tx_graph::dump() const {
   std::ostringstream os;
   for (const auto& [ref, n] : nodes_) {
      if (n.out.empty()) {
         os << to_string(ref) << "\n";
         continue;
      }
      for (const auto& [older, kinds] : n.out)
         os << to_string(ref) << " -> " << to_string(older) << " " << kinds_to_string(kinds)
            << "\n";
   }
   return os.str();
}

bool waiting_tx_graph::index_consistent() const {
   std::map<state_key, key_entry> expect;
   std::map<std::string, std::size_t> expect_windows;
   for (const auto& [ref, n] : nodes_) {
      for (const auto& re : n.tx.reads)
         expect[re.key].readers.insert(ref);
      for (const auto& we : n.tx.writes)
         expect[we.key].writers.push_back(ref);
      for (const auto& rq : n.tx.ranges)
         ++expect_windows[rq.contract];
   }
   if (expect.size() != key_index_.size())
      return false;
   for (const auto& [k, e] : expect) {
      auto it = key_index_.find(k);
      if (it == key_index_.end() || it->second.readers != e.readers)
         return false;
      auto sorted = it->second.writers;
      std::sort(sorted.begin(), sorted.end());
      if (sorted != e.writers) // expect's writers come out sorted already
         return false;
   }
   std::size_t have_windows = 0;
   for (const auto& [c, v] : windows_)
      have_windows += v.size();
   std::size_t want_windows = 0;
   for (const auto& [c, cnt] : expect_windows)
      want_windows += cnt;
   return have_windows == want_windows;
}

} // namespace eov
