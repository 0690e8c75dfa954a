#include <eov/peer_core.hpp>

#include <eov/codec.hpp>
#include <eov/errors.hpp>
#include <eov/validation.hpp>

#include <algorithm>

namespace eov {

// ---------------------------------------------------------------- verdicts

bytes encode_verdict(const verdict_msg& m) {
   writer w;
   w.u64(m.ref.block);
   w.u32(m.ref.tx);
   w.str(m.contract);
   w.u8(static_cast<std::uint8_t>(m.verdict));
   w.str(m.from_peer);
   return w.take();
}

verdict_msg decode_verdict(const bytes& b) {
   reader r(b);
   verdict_msg m;
   m.ref = tx_ref{r.u64(), r.u32()};
   m.contract = r.str();
   m.verdict = static_cast<tx_validity>(r.u8());
   m.from_peer = r.str();
   if (!r.done())
      throw codec_error("trailing bytes after verdict");
   return m;
}

// --------------------------------------------------------------- peer_core

peer_core::peer_core(peer_config cfg) : cfg_(std::move(cfg)) {
   if (cfg_.store_path.empty())
      store_ = std::make_unique<block_store>();
   else
      store_ = std::make_unique<block_store>(cfg_.store_path, cfg_.fsync_each);
}

void peer_core::bootstrap(const std::vector<std::pair<state_key, bytes>>& states,
                          const std::vector<endorsement_policy>& policies) {
   std::lock_guard lk(mu_);
   if (bootstrapped_ || next_block_ != 1)
      throw std::logic_error("bootstrap on a non-fresh peer");

   // version stamps are assigned over the *full* genesis (states in key
   // order, then policies in contract order) so every peer — whatever its
   // filter — agrees on the stamp of any shared key. unhosted entries burn
   // their sequence number but are not stored.
   std::uint32_t seq = 0;
   auto seed = [&](const state_key& k, bytes value) {
      version v{0, seq++};
      if (!cfg_.filter.hosts(effective_contract(k)))
         return;
      seeded_[k] = {v, value};
      ledger_.db().put(k, v, std::move(value));
      mod_index_.record(effective_contract(k), v,
                        mod_entry{k.key, k.contract == policy_contract, false, false});
   };

   std::vector<std::pair<state_key, bytes>> sorted = states;
   std::sort(sorted.begin(), sorted.end(),
             [](const auto& a, const auto& b) { return a.first < b.first; });
   for (auto& [k, v] : sorted)
      seed(k, v);

   std::vector<endorsement_policy> pols = policies;
   std::sort(pols.begin(), pols.end(),
             [](const auto& a, const auto& b) { return a.contract < b.contract; });
   for (const auto& p : pols)
      seed(skey(std::string(policy_contract), p.contract), encode_policy(p));

   bootstrapped_ = true;
}

void peer_core::seed_join(const std::vector<snapshot_manifest>& manifests, std::uint64_t height,
                          const digest32& head_hash, const std::vector<digest32>& known_ids) {
   std::lock_guard lk(mu_);
   if (bootstrapped_ || next_block_ != 1 || store_->height() != 0)
      throw std::logic_error("seed_join on a non-fresh peer");

   for (const auto& m : manifests) {
      for (const auto& [k, v, val] : m.entries) {
         seeded_[k] = {v, val};
         ledger_.db().put(k, v, val);
         mod_index_.record(effective_contract(k), v,
                           mod_entry{k.key, k.contract == policy_contract, false, false});
      }
   }
   dup_set_.check_and_insert(known_ids);
   store_->set_base(height);
   next_block_ = height + 1;
   last_hash_ = head_hash;
   bootstrapped_ = true;
}

std::vector<std::string> peer_core::hosted_scope(const transaction& tx) const {
   std::vector<std::string> scope;
   for (const auto& c : tx.contracts)
      if (cfg_.filter.hosts(c))
         scope.push_back(c);
   return scope;
}

bool peer_core::is_distributed(const transaction& tx) const {
   return hosted_scope(tx).size() < tx.contracts.size();
}

const transaction* peer_core::find_body(tx_ref ref) const {
   if (const auto* sb = store_->find(ref.block))
      return sb->find_tx(ref.tx);
   for (const auto& pb : pending_) {
      if (pb.number != ref.block)
         continue;
      if (pb.full)
         return ref.tx < pb.full->txs.size() ? &pb.full->txs[ref.tx] : nullptr;
      for (const auto& [i, tx] : pb.sparse->included)
         if (i == ref.tx)
            return &tx;
      return nullptr;
   }
   return nullptr;
}

std::vector<verdict_msg> peer_core::make_verdicts(tx_ref ref,
                                                  const std::vector<std::string>& scope,
                                                  tx_validity v) {
   std::vector<verdict_msg> out;
   out.reserve(scope.size());
   for (const auto& c : scope)
      out.push_back(verdict_msg{ref, c, v, cfg_.name});
   ctr_.verdicts_sent += out.size();
   return out;
}

bool peer_core::has_parked_ancestor(tx_ref ref) const {
   std::set<tx_ref> seen;
   std::vector<tx_ref> frontier{ref};
   while (!frontier.empty()) {
      tx_ref cur = frontier.back();
      frontier.pop_back();
      for (tx_ref older : graph_.dependees(cur)) {
         if (!seen.insert(older).second)
            continue;
         if (graph_.is_parked(older))
            return true;
         frontier.push_back(older);
      }
   }
   return false;
}

// ------------------------------------------------------------------ ingress

std::size_t peer_core::ingest(const block& b) {
   std::lock_guard lk(mu_);
   if (b.number != next_block_) {
      if (b.number < next_block_)
         throw out_of_order_block("block " + std::to_string(b.number) + " already ingested");
      throw future_block("block " + std::to_string(b.number) + " ahead of expected " +
                         std::to_string(next_block_));
   }
   check_block(b);
   if (b.prev_hash != last_hash_)
      throw bad_block("prev hash mismatch at block " + std::to_string(b.number));

   pending_block pb;
   pb.number = b.number;
   pb.leaves = b.txs.size();
   pb.validity.assign(b.txs.size(), tx_validity::not_validated);
   pb.full = b;

   std::vector<digest32> ids;
   ids.reserve(b.txs.size());
   for (const auto& tx : b.txs)
      ids.push_back(tx.id);
   auto dup_list = dup_set_.check_and_insert(ids);
   std::set<std::uint32_t> dups(dup_list.begin(), dup_list.end());

   graph_.add_block(b, &cfg_.filter);
   for (std::uint32_t i = 0; i < b.txs.size(); ++i) {
      tx_ref ref{b.number, i};
      bool hosted = cfg_.filter.admits(b.txs[i]);
      if (dups.count(i)) {
         pb.validity[i] = tx_validity::invalid_duplicate;
         if (hosted && graph_.contains(ref))
            graph_.remove_from_graph(ref, false);
         continue;
      }
      if (!hosted)
         continue;
      pb.admitted.push_back(i);
      if (!parked_refs_.empty() && has_parked_ancestor(ref))
         results_.post_pending(ref, tx_validity::deferred);
   }

   std::size_t admitted = pb.admitted.size();
   next_block_ = b.number + 1;
   last_hash_ = b.hash;
   pending_.push_back(std::move(pb));
   return admitted;
}

std::size_t peer_core::ingest(const sparse_block& sb) {
   std::lock_guard lk(mu_);
   if (sb.number != next_block_) {
      if (sb.number < next_block_)
         throw out_of_order_block("block " + std::to_string(sb.number) + " already ingested");
      throw future_block("block " + std::to_string(sb.number) + " ahead of expected " +
                         std::to_string(next_block_));
   }
   if (auto reason = verify_sparse(sb, last_hash_))
      throw bad_block("sparse block " + std::to_string(sb.number) + ": " + *reason);

   // the producer's filter must retain at least everything we host.
   const auto& applied = sb.applied_filter.contracts;
   if (!applied.empty()) {
      if (cfg_.filter.contracts.empty())
         throw filter_not_covered("full peer fed a filtered block");
      for (const auto& c : cfg_.filter.contracts)
         if (!applied.count(c))
            throw filter_not_covered("hosted contract " + c + " missing from applied filter");
   }

   pending_block pb;
   pb.number = sb.number;
   pb.leaves = sb.all_tx_ids.size();
   pb.validity.assign(sb.all_tx_ids.size(), tx_validity::not_validated);
   pb.sparse = sb;

   auto dup_list = dup_set_.check_and_insert(sb.all_tx_ids);
   std::set<std::uint32_t> dups(dup_list.begin(), dup_list.end());
   for (std::uint32_t i : dups)
      pb.validity[i] = tx_validity::invalid_duplicate;

   graph_.add_sparse(sb, &cfg_.filter);
   for (const auto& [i, tx] : sb.included) {
      tx_ref ref{sb.number, i};
      if (dups.count(i) || !cfg_.filter.admits(tx)) {
         if (graph_.contains(ref))
            graph_.remove_from_graph(ref, false);
         continue;
      }
      pb.admitted.push_back(i);
      if (!parked_refs_.empty() && has_parked_ancestor(ref))
         results_.post_pending(ref, tx_validity::deferred);
   }

   std::size_t admitted = pb.admitted.size();
   next_block_ = sb.number + 1;
   last_hash_ = sb.hash;
   pending_.push_back(std::move(pb));
   return admitted;
}

// -------------------------------------------------------------- validation

std::optional<dispatch> peer_core::next_transaction() {
   std::lock_guard lk(mu_);
   auto ref = graph_.get_next_transaction();
   if (!ref)
      return std::nullopt;
   // hand out the wire body, not the graph's filtered one: endorsement macs
   // cover the whole response, so the crypto check needs every byte even
   // when this peer only stores a slice of the keys.
   const transaction* wire = find_body(*ref);
   return dispatch{*ref, wire ? *wire : *graph_.find_tx(*ref)};
}

bool peer_core::check_endorsements_for(const transaction& tx) {
   std::map<std::string, bytes> policies;
   {
      std::lock_guard lk(mu_);
      policies = collect_policies(tx, hosted_scope(tx), ledger_);
   }
   // crypto outside the lock; graph ordering keeps the policies stable until
   // this transaction's finish_validation.
   return check_endorsements_against(tx, policies, cfg_.endorse_spin);
}

finish_result peer_core::finish_validation(tx_ref ref, bool endorsements_ok) {
   std::lock_guard lk(mu_);
   const transaction* txp = graph_.find_tx(ref);
   if (!txp || !graph_.is_dispatched(ref))
      throw unknown_tx("finish_validation for undispatched " + to_string(ref));
   transaction tx = *txp;
   auto scope = hosted_scope(tx);
   bool distributed = scope.size() < tx.contracts.size();

   tx_validity local;
   if (!endorsements_ok)
      local = tx_validity::invalid_endorsement;
   else
      local = check_serializability(tx, scope, ledger_) ? tx_validity::valid
                                                        : tx_validity::invalid_serializability;

   finish_result fr;
   if (!distributed) {
      finalize(ref, tx, scope, local, fr.broadcasts);
      fr.validity = local;
      return fr;
   }

   // cross-contract transaction: my verdict covers only the hosted scope.
   if (auto bad = tally_invalid(ref)) {
      // the org outcome is already known invalid; no point broadcasting.
      finalize(ref, tx, scope, *bad, fr.broadcasts);
      fr.validity = *bad;
      return fr;
   }
   if (is_invalid(local)) {
      fr.broadcasts = make_verdicts(ref, scope, local);
      finalize(ref, tx, scope, local, fr.broadcasts);
      fr.validity = local;
      return fr;
   }

   auto& tally = tallies_[ref];
   for (const auto& c : scope)
      tally[c] = tx_validity::valid;
   fr.broadcasts = make_verdicts(ref, scope, tx_validity::valid);
   if (tally_complete(ref, tx)) {
      finalize(ref, tx, scope, tx_validity::valid, fr.broadcasts);
      fr.validity = tx_validity::valid;
      return fr;
   }

   // park: hold dependents until remote verdicts land. the committer may
   // take the pending entry as-is, committing this tx as deferred.
   graph_.park(ref);
   parked_refs_.insert(ref);
   if (!deferred_committed_.count(ref))
      results_.post_pending(ref, tx_validity::deferred);
   for (tx_ref r : graph_.in_closure(ref))
      results_.post_pending(r, tx_validity::deferred);
   fr.validity = tx_validity::deferred;
   fr.parked = true;
   return fr;
}

std::optional<tx_validity> peer_core::tally_invalid(tx_ref ref) const {
   auto it = tallies_.find(ref);
   if (it == tallies_.end())
      return std::nullopt;
   for (const auto& [c, v] : it->second)
      if (is_invalid(v))
         return v;
   return std::nullopt;
}

bool peer_core::tally_complete(tx_ref ref, const transaction& tx) const {
   auto it = tallies_.find(ref);
   if (it == tallies_.end())
      return false;
   for (const auto& c : tx.contracts)
      if (!it->second.count(c))
         return false;
   return true;
}

void peer_core::finalize(tx_ref ref, const transaction& tx,
                         const std::vector<std::string>& scope, tx_validity org_v,
                         std::vector<verdict_msg>& out) {
   bool was_deferred = deferred_committed_.count(ref) != 0;
   if (org_v == tx_validity::valid) {
      for (const auto& we : tx.writes) {
         if (!in_scope(scope, effective_contract(we.key)))
            continue;
         if (was_deferred)
            ledger_.put_committed(we.key, ref, we.value, we.is_delete, true);
         else
            ledger_.apply_dirty(ref, we);
      }
   }
   parked_refs_.erase(ref);
   auto cascade = graph_.remove_from_graph(ref, org_v == tx_validity::valid);
   settle(ref, org_v);
   for (const auto& [vref, vv] : cascade)
      settle_victim(vref, vv, out);
}

void peer_core::settle(tx_ref ref, tx_validity v) {
   if (deferred_committed_.count(ref)) {
      store_->correct(ref.block, ref.tx, v);
      if (v == tx_validity::valid) {
         mod_index_.finalize_deferred(ref);
         ++ctr_.valid;
      } else {
         mod_index_.erase_tx(ref);
         if (v == tx_validity::invalid_serializability)
            ++ctr_.invalid_serializability;
         else if (v == tx_validity::invalid_endorsement)
            ++ctr_.invalid_endorsement;
      }
      deferred_committed_.erase(ref);
      ++ctr_.corrections;
   } else {
      if (!results_.upgrade(ref, v))
         results_.post_final(ref, v);
   }
   tallies_.erase(ref);
}

void peer_core::settle_victim(tx_ref ref, tx_validity v, std::vector<verdict_msg>& out) {
   const transaction* tx = find_body(ref);
   parked_refs_.erase(ref);
   settle(ref, v);
   // a cross-contract victim never got to broadcast its own verdict; the
   // other hosting peers need to hear the invalidation from us.
   if (tx && is_distributed(*tx)) {
      auto vs = make_verdicts(ref, hosted_scope(*tx), v);
      out.insert(out.end(), vs.begin(), vs.end());
   }
}

std::vector<verdict_msg> peer_core::deliver_verdict(const verdict_msg& m) {
   std::lock_guard lk(mu_);
   ++ctr_.verdicts_received;
   std::vector<verdict_msg> out;

   bool in_graph = graph_.contains(m.ref);
   bool was_deferred = deferred_committed_.count(m.ref) != 0;
   if (!in_graph && !was_deferred && m.ref.block < next_block_)
      return out; // already finalized here; late verdict

   auto& tally = tallies_[m.ref];
   auto it = tally.find(m.contract);
   if (it == tally.end() || (it->second == tx_validity::valid && is_invalid(m.verdict)))
      tally[m.contract] = m.verdict;

   if (in_graph && graph_.is_parked(m.ref)) {
      transaction tx = *graph_.find_tx(m.ref);
      auto scope = hosted_scope(tx);
      if (auto bad = tally_invalid(m.ref))
         finalize(m.ref, tx, scope, *bad, out);
      else if (tally_complete(m.ref, tx))
         finalize(m.ref, tx, scope, tx_validity::valid, out);
   }
   return out;
}

// ---------------------------------------------------------------- committer

std::optional<peer_core::front_info> peer_core::front_block() const {
   std::lock_guard lk(mu_);
   if (pending_.empty())
      return std::nullopt;
   const pending_block& pb = pending_.front();
   return front_info{pb.number, pb.leaves, pb.admitted};
}

commit_stats peer_core::commit_front(const std::vector<tx_validity>& popped) {
   std::lock_guard lk(mu_);
   if (pending_.empty())
      throw std::logic_error("commit_front with no pending block");
   pending_block& pb = pending_.front();
   if (popped.size() != pb.admitted.size())
      throw std::invalid_argument("popped result count mismatch");

   commit_stats st;
   st.number = pb.number;
   st.leaves = pb.leaves;
   st.admitted = pb.admitted.size();

   for (std::size_t j = 0; j < pb.admitted.size(); ++j) {
      std::uint32_t idx = pb.admitted[j];
      tx_validity v = popped[j];
      pb.validity[idx] = v;
      tx_ref ref{pb.number, idx};

      if (v == tx_validity::deferred) {
         deferred_committed_.insert(ref);
         ++st.deferred;
         ++ctr_.deferred_at_commit;
      } else if (v == tx_validity::valid) {
         ++st.valid;
      }

      if (v == tx_validity::valid || v == tx_validity::deferred) {
         const transaction* tx = nullptr;
         if (pb.full) {
            tx = &pb.full->txs[idx];
         } else {
            for (const auto& [i, t] : pb.sparse->included)
               if (i == idx)
                  tx = &t;
         }
         if (tx) {
            for (const auto& we : tx->writes) {
               std::string eff = effective_contract(we.key);
               if (!cfg_.filter.hosts(eff))
                  continue;
               mod_index_.record(eff, ref,
                                 mod_entry{we.key.key, we.key.contract == policy_contract,
                                           we.is_delete, v == tx_validity::deferred});
            }
         }
      }
   }

   for (tx_validity v : pb.validity) {
      switch (v) {
      case tx_validity::valid: ++ctr_.valid; break;
      case tx_validity::invalid_serializability: ++ctr_.invalid_serializability; break;
      case tx_validity::invalid_endorsement: ++ctr_.invalid_endorsement; break;
      case tx_validity::invalid_duplicate: ++ctr_.invalid_duplicate; break;
      default: break;
      }
   }

   ledger_.fold_block(pb.number);
   std::uint64_t before = store_->bytes_written();
   if (pb.full)
      store_->append(*pb.full, pb.validity);
   else
      store_->append(*pb.sparse, pb.validity);
   st.bytes_appended = store_->bytes_written() - before;

   ++ctr_.blocks_committed;
   ctr_.leaves_committed += pb.leaves;
   ctr_.admitted_committed += pb.admitted.size();
   pending_.pop_front();
   return st;
}

// ---------------------------------------------------------------- snapshots

snapshot_manifest peer_core::extract(const std::string& contract, std::uint64_t as_of) const {
   std::lock_guard lk(mu_);
   if (as_of > store_->height())
      throw future_block("snapshot at block " + std::to_string(as_of) + " beyond height " +
                         std::to_string(store_->height()));
   return extract_snapshot(contract, as_of, mod_index_, ledger_.db(), *store_, &seeded_);
}

// --------------------------------------------------------------- inspection

digest32 peer_core::state_digest() const {
   std::lock_guard lk(mu_);
   return ledger_.db().digest();
}

std::string peer_core::state_dump() const {
   std::lock_guard lk(mu_);
   return ledger_.db().dump();
}

state_view peer_core::db_rows() const {
   std::lock_guard lk(mu_);
   state_view out;
   ledger_.db().for_each(
       [&](const state_key& k, version v, const bytes& val) { out[k] = {v, val}; });
   return out;
}

std::vector<tx_validity> peer_core::stored_bitmap(std::uint64_t number) const {
   std::lock_guard lk(mu_);
   const auto* sb = store_->find(number);
   if (!sb)
      throw unknown_tx("no stored block " + std::to_string(number));
   return sb->validity;
}

std::optional<std::pair<bytes, version>> peer_core::read_state(const state_key& k) const {
   std::lock_guard lk(mu_);
   auto got = ledger_.db().get(k);
   if (!got)
      return std::nullopt;
   return std::make_pair(got->second, got->first);
}

std::uint64_t peer_core::committed_height() const {
   std::lock_guard lk(mu_);
   return store_->height();
}

std::uint64_t peer_core::next_expected_block() const {
   std::lock_guard lk(mu_);
   return next_block_;
}

digest32 peer_core::head_hash() const {
   std::lock_guard lk(mu_);
   return last_hash_;
}

std::vector<digest32> peer_core::known_tx_ids() const {
   std::lock_guard lk(mu_);
   return std::vector<digest32>(dup_set_.ids().begin(), dup_set_.ids().end());
}

peer_counters peer_core::counters() const {
   std::lock_guard lk(mu_);
   return ctr_;
}

std::size_t peer_core::waiting_count() const {
   std::lock_guard lk(mu_);
   return graph_.size();
}

std::size_t peer_core::deferred_outstanding() const {
   std::lock_guard lk(mu_);
   return deferred_committed_.size();
}

std::uint64_t peer_core::store_bytes_written() const {
   std::lock_guard lk(mu_);
   return store_->bytes_written();
}

std::size_t peer_core::store_content_bytes() const {
   std::lock_guard lk(mu_);
   return store_->content_bytes();
}

} // namespace eov
