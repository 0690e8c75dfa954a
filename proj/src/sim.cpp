#include <eov/sim.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <eov/errors.hpp>
#include <eov/oracle.hpp>
#include <eov/orderer.hpp>

namespace eov {
namespace {

// ---------------------------------------------------------------------------
// stream assembly

struct stream_bundle {
   std::vector<block> blocks;
   std::vector<std::pair<state_key, bytes>> genesis_states;
   std::vector<endorsement_policy> genesis_policies;
   std::uint64_t leaves = 0;
   std::uint64_t full_bytes = 0; // sum of encoded full-block sizes
   digest32 truth_digest{};      // generator's own reference state at the end
};

stream_bundle make_stream(const scenario_config& cfg) {
   workload_gen gen(cfg);
   stream_bundle s;
   s.genesis_states = gen.genesis_states();
   s.genesis_policies = gen.genesis_policies();
   orderer ord(cfg.block_size);
   ord.subscribe_full([&](const block& b) { s.blocks.push_back(b); });
   for (std::size_t i = 0; i < cfg.block_count; ++i)
      for (auto& tx : gen.next_block())
         ord.submit(std::move(tx));
   ord.flush();
   for (const auto& b : s.blocks) {
      s.leaves += b.txs.size();
      s.full_bytes += encode_block(b).size();
   }
   s.truth_digest = gen.truth().digest();
   return s;
}

struct oracle_run {
   serial_oracle oracle;
   std::vector<std::vector<tx_validity>> bitmaps; // indexed by block number - 1
};

oracle_run replay_oracle(const stream_bundle& s) {
   oracle_run o{serial_oracle(s.genesis_states, s.genesis_policies), {}};
   o.bitmaps.reserve(s.blocks.size());
   for (const auto& b : s.blocks)
      o.bitmaps.push_back(o.oracle.process_block(b.number, b.txs));
   return o;
}

// peer filters. filtersPerPeer == 0 keeps every peer full; otherwise the
// contract list is dealt round-robin into disjoint slices, one per peer.
// disjointness matters: it makes every cross-contract transaction
// distributed for each of its hosting peers, so each scope's verdict is
// broadcast by someone and no tally can starve.
std::vector<contract_filter> make_filters(const scenario_config& cfg) {
   std::vector<contract_filter> out(cfg.peers_per_org);
   for (std::size_t i = 0; i < out.size(); ++i)
      out[i].peer = "p" + std::to_string(i + 1);
   if (cfg.filters_per_peer == 0)
      return out;
   if (cfg.peers_per_org > cfg.contracts.size())
      throw config_invalid("peersPerOrg exceeds the contract count: a filter would be empty");
   for (std::size_t j = 0; j < cfg.contracts.size(); ++j)
      out[j % out.size()].contracts.insert(cfg.contracts[j]);
   for (const auto& f : out)
      if (f.contracts.size() > cfg.filters_per_peer)
         throw config_invalid("filtersPerPeer too small for the filters to cover all contracts");
   return out;
}

// verdict classes for cross-peer comparison: different peers may invalidate
// the same transaction for different (per-scope) reasons, but the class
// {valid, duplicate, invalid} must agree with the reference validator.
int verdict_class(tx_validity v) {
   switch (v) {
      case tx_validity::valid: return 0;
      case tx_validity::invalid_duplicate: return 1;
      case tx_validity::invalid_serializability:
      case tx_validity::invalid_endorsement: return 2;
      default: return 3; // unresolved — never acceptable in a finished run
   }
}

std::uint64_t view_bytes(const state_view& v) {
   std::uint64_t n = 0;
   for (const auto& [k, vv] : v)
      n += k.contract.size() + k.key.size() + 12 + vv.second.size();
   return n;
}

std::string fmt(double x, int prec = 2) {
   std::ostringstream os;
   os << std::fixed << std::setprecision(prec) << x;
   return os.str();
}

const char* csv_header =
   "peer,block,time,committedTps,validTps,queueLen,V_ms,C_ms,theoreticalMaxTps\n";

void csv_row(std::ostringstream& os, const std::string& peer, std::uint64_t number, double t,
             double committed_tps, double valid_tps, std::size_t queue_len, double v_ms,
             double c_ms, std::size_t leaves) {
   double theo = v_ms + c_ms > 0 ? theoretical_max_tps(double(leaves), v_ms, c_ms) : 0;
   os << peer << ',' << number << ',' << fmt(t) << ',' << fmt(committed_tps) << ','
      << fmt(valid_tps) << ',' << queue_len << ',' << fmt(v_ms) << ',' << fmt(c_ms) << ','
      << fmt(theo) << '\n';
}

// single-threaded drive of one peer over one block: ingest, feed recorded
// verdicts (content-addressed, so before validation is fine — they
// pre-populate the tallies), validate everything dispatchable, commit.
template <typename blk>
void drain_block(peer_core& pc, const blk& b, const std::vector<verdict_msg>* log) {
   pc.ingest(b);
   if (log)
      for (const auto& m : *log)
         pc.deliver_verdict(m);
   while (auto d = pc.next_transaction())
      pc.finish_validation(d->ref, pc.check_endorsements_for(d->tx));
   auto fb = pc.front_block();
   std::vector<tx_validity> popped;
   popped.reserve(fb->admitted.size());
   for (auto idx : fb->admitted)
      popped.push_back(pc.results().pop(tx_ref{fb->number, idx}, false));
   pc.commit_front(popped);
}

// ---------------------------------------------------------------------------
// audits against the reference validator

struct audit_result {
   bool full_bitmaps = true;
   bool org_bitmaps = true;
   bool org_state = true;
   digest32 org_digest{};
   std::uint64_t org_valid = 0, org_invalid = 0, org_duplicate = 0;
};

audit_result audit_org(const std::vector<peer_core*>& peers, const oracle_run& o,
                       const stream_bundle& s) {
   audit_result a;
   for (std::size_t bi = 0; bi < s.blocks.size(); ++bi) {
      const auto& want = o.bitmaps[bi];
      std::uint64_t n = s.blocks[bi].number;
      std::vector<std::vector<tx_validity>> got;
      got.reserve(peers.size());
      for (auto* p : peers)
         got.push_back(p->stored_bitmap(n));
      for (std::size_t k = 0; k < peers.size(); ++k) {
         if (got[k].size() != want.size()) { // uncommitted block: fails both audits
            a.full_bitmaps = a.org_bitmaps = false;
            continue;
         }
         if (peers[k]->config().filter.contracts.empty() && got[k] != want)
            a.full_bitmaps = false;
      }
      for (std::size_t i = 0; i < want.size(); ++i) {
         int wc = verdict_class(want[i]);
         bool seen = false;
         for (std::size_t k = 0; k < peers.size(); ++k) {
            if (got[k].size() != want.size())
               continue;
            tx_validity v = got[k][i];
            if (v == tx_validity::not_validated)
               continue; // not hosted here
            seen = true;
            if (verdict_class(v) != wc)
               a.org_bitmaps = false;
         }
         if (!seen) { // nobody hosted it — the partition failed to cover the tx
            a.org_bitmaps = false;
            continue;
         }
         if (wc == 0)
            ++a.org_valid;
         else if (wc == 1)
            ++a.org_duplicate;
         else
            ++a.org_invalid;
      }
   }
   state_view uni;
   bool consistent = true;
   for (auto* p : peers)
      for (const auto& [k, vv] : p->db_rows()) {
         auto [it, fresh] = uni.emplace(k, vv);
         if (!fresh && it->second != vv)
            consistent = false; // overlapping hosts disagree on a row
      }
   a.org_digest = state_view_digest(uni);
   a.org_state = consistent && a.org_digest == o.oracle.digest();
   return a;
}

// ---------------------------------------------------------------------------
// virtual mode: discrete-event simulation of one org

struct des_peer {
   std::string name;
   std::unique_ptr<peer_core> core;
   double speed = 1.0;
   std::size_t free_workers = 1;
   bool committing = false;
   struct track {
      std::uint64_t number = 0;
      double delivered_at = 0;
      double ready_at = -1;   // every admitted result became present
      double wait_since = -1; // idle committer blocked only on remote finality
   };
   std::deque<track> tracks; // delivered, not yet committed; front = oldest
   double stall_ms = 0;
   std::uint64_t wire_bytes = 0;
   std::vector<sparse_block> wire; // pre-cut deliveries when the wire is sparse
};

class des_run {
 public:
   des_run(const scenario_config& cfg, const stream_bundle& s, const std::string& store_dir)
      : cfg_(cfg), s_(s), strawman_(cfg.protocol == "strawman") {
      auto filters = make_filters(cfg_);
      for (std::size_t i = 0; i < filters.size(); ++i) {
         des_peer p;
         p.name = filters[i].peer;
         peer_config pc;
         pc.name = p.name;
         pc.filter = filters[i];
         pc.endorse_spin = cfg_.endorse_spin;
         pc.fsync_each = cfg_.fsync_each;
         if (!store_dir.empty())
            pc.store_path = store_dir + "/" + p.name + ".blocks";
         p.core = std::make_unique<peer_core>(std::move(pc));
         p.core->bootstrap(s_.genesis_states, s_.genesis_policies);
         p.speed = i < cfg_.peer_speeds.size() ? cfg_.peer_speeds[i] : 1.0;
         p.free_workers = cfg_.worker_count;
         if (cfg_.sparse_blocks_enabled && !filters[i].contracts.empty()) {
            p.wire.reserve(s_.blocks.size());
            for (const auto& b : s_.blocks) {
               p.wire.push_back(make_sparse(b, filters[i]));
               p.wire_bytes += encode_sparse(p.wire.back()).size();
            }
         } else {
            p.wire_bytes = s_.full_bytes;
         }
         peers_.push_back(std::move(p));
      }
      for (const auto& b : s_.blocks)
         for (std::size_t i = 0; i < b.txs.size(); ++i)
            txs_[tx_ref{b.number, std::uint32_t(i)}] = &b.txs[i];
   }

   run_report go() {
      csv_ << csv_header;
      double interval = cfg_.tx_rate > 0 ? cfg_.block_size * 1000.0 / cfg_.tx_rate : 0.0;
      for (std::size_t bi = 0; bi < s_.blocks.size(); ++bi)
         for (std::size_t pi = 0; pi < peers_.size(); ++pi)
            sched_.schedule(double(bi) * interval, [this, pi, bi] { deliver(pi, bi); });
      sched_.run();
      return assemble();
   }

 private:
   void deliver(std::size_t pi, std::size_t bi) {
      auto& p = peers_[pi];
      if (!p.wire.empty())
         p.core->ingest(p.wire[bi]);
      else
         p.core->ingest(s_.blocks[bi]);
      p.tracks.push_back({s_.blocks[bi].number, sched_.now(), -1, -1});
      dispatch_more(pi);
      try_commit(pi);
   }

   void dispatch_more(std::size_t pi) {
      auto& p = peers_[pi];
      while (p.free_workers > 0) {
         auto d = p.core->next_transaction();
         if (!d)
            break;
         --p.free_workers;
         sched_.schedule(cfg_.validate_cost_ms / p.speed,
                         [this, pi, d = std::move(*d)] { validated(pi, d); });
      }
   }

   void validated(std::size_t pi, const dispatch& d) {
      auto& p = peers_[pi];
      ++p.free_workers;
      bool ok = p.core->check_endorsements_for(d.tx);
      auto fr = p.core->finish_validation(d.ref, ok);
      route(pi, fr.broadcasts);
      dispatch_more(pi);
      try_commit(pi);
   }

   void route(std::size_t pi, const std::vector<verdict_msg>& msgs) {
      for (const auto& m : msgs) {
         verdict_log_[m.ref.block].push_back(m);
         const transaction* tx = txs_.at(m.ref);
         std::size_t sz = encode_verdict(m).size();
         for (std::size_t qi = 0; qi < peers_.size(); ++qi) {
            if (qi == pi)
               continue;
            const auto& f = peers_[qi].core->config().filter;
            if (f.contracts.empty() || !f.admits(*tx))
               continue; // full peers resolve everything locally
            ++vmsgs_;
            vbytes_ += sz;
            sched_.schedule(cfg_.verdict_latency_ms, [this, qi, m] { got_verdict(qi, m); });
         }
      }
   }

   void got_verdict(std::size_t qi, const verdict_msg& m) {
      auto follow = peers_[qi].core->deliver_verdict(m);
      route(qi, follow);
      dispatch_more(qi); // fate firing can free or remove waiting txs
      try_commit(qi);
   }

   void try_commit(std::size_t pi) {
      auto& p = peers_[pi];
      if (p.committing)
         return;
      auto fb = p.core->front_block();
      if (!fb)
         return;
      if (p.tracks.empty() || p.tracks.front().number != fb->number)
         throw std::logic_error("front tracking out of step on " + p.name);
      auto& tr = p.tracks.front();
      auto& rm = p.core->results();
      bool final_all = true;
      for (auto idx : fb->admitted) {
         tx_ref r{fb->number, idx};
         if (!rm.ready(r, false))
            return; // local validation still running — not a protocol stall
         if (final_all && !rm.ready(r, true))
            final_all = false;
      }
      double now = sched_.now();
      if (tr.ready_at < 0)
         tr.ready_at = now;
      if (strawman_ && !final_all) {
         // everything local is done; the all-final protocol alone blocks us.
         if (tr.wait_since < 0)
            tr.wait_since = now;
         return;
      }
      if (tr.wait_since >= 0) {
         p.stall_ms += now - tr.wait_since;
         tr.wait_since = -1;
      }
      // the committer writes flags as it goes, so a verdict that lands while
      // the block is being written still counts: snapshot validities at the
      // end of the commit window, not the start.
      p.committing = true;
      sched_.schedule(cfg_.commit_cost_ms, [this, pi] { committed(pi); });
   }

   void committed(std::size_t pi) {
      auto& p = peers_[pi];
      auto fb = p.core->front_block();
      auto& rm = p.core->results();
      std::vector<tx_validity> popped;
      popped.reserve(fb->admitted.size());
      for (auto idx : fb->admitted)
         popped.push_back(rm.pop(tx_ref{fb->number, idx}, false));
      auto st = p.core->commit_front(popped);
      auto tr = p.tracks.front();
      p.tracks.pop_front();
      p.committing = false;
      auto ctr = p.core->counters();
      double now = sched_.now();
      double v_ms = tr.ready_at - tr.delivered_at;
      csv_row(csv_, p.name, st.number, now,
              now > 0 ? double(ctr.leaves_committed) * 1000.0 / now : 0,
              now > 0 ? double(ctr.valid) * 1000.0 / now : 0, p.tracks.size(), v_ms,
              cfg_.commit_cost_ms, st.leaves);
      try_commit(pi);
   }

   run_report assemble() {
      run_report r;
      r.blocks = s_.blocks.size();
      r.leaves = s_.leaves;
      r.virtual_ms = sched_.now();
      r.oracle_digest = o_later_.oracle.digest();
      r.verdict_messages = vmsgs_;
      r.verdict_bytes = vbytes_;
      r.full_dissemination_bytes = s_.full_bytes * peers_.size();
      for (const auto& p : peers_)
         if (!p.wire.empty())
            r.sparse_dissemination_bytes += p.wire_bytes;

      std::vector<peer_core*> cores;
      std::uint64_t admitted_total = 0, deferred_total = 0;
      for (auto& p : peers_) {
         cores.push_back(p.core.get());
         peer_report pr;
         pr.name = p.name;
         const auto& f = p.core->config().filter;
         pr.hosted.assign(f.contracts.begin(), f.contracts.end());
         pr.counters = p.core->counters();
         pr.state_digest = p.core->state_digest();
         pr.committed_height = p.core->committed_height();
         pr.stall_ms_total = p.stall_ms;
         pr.deferral_rate = pr.counters.admitted_committed
                               ? double(pr.counters.deferred_at_commit) /
                                    double(pr.counters.admitted_committed)
                               : 0;
         pr.wire_bytes = p.wire_bytes;
         pr.store_bytes = p.core->store_bytes_written();
         pr.db_bytes = view_bytes(p.core->db_rows());
         admitted_total += pr.counters.admitted_committed;
         deferred_total += pr.counters.deferred_at_commit;
         r.stall_ms_total += p.stall_ms;
         if (pr.committed_height != r.blocks || p.core->deferred_outstanding() != 0 ||
             p.core->waiting_count() != 0)
            r.all_resolved = false;
         r.peers.push_back(std::move(pr));
      }
      r.org_deferred = deferred_total;
      r.deferral_rate = admitted_total ? double(deferred_total) / double(admitted_total) : 0;

      auto a = audit_org(cores, o_later_, s_);
      r.full_bitmaps_match = a.full_bitmaps;
      r.org_bitmap_matches = a.org_bitmaps;
      r.org_state_matches = a.org_state;
      r.org_digest = a.org_digest;
      r.org_valid = a.org_valid;
      r.org_invalid = a.org_invalid;
      r.org_duplicate = a.org_duplicate;
      r.org_committed = r.leaves;

      if (cfg_.join_at_block > 0 && cfg_.join_at_block < r.blocks)
         r.join = run_join();

      r.csv = csv_.str();
      r.summary = summarize(r);
      return r;
   }

   join_report run_join() {
      join_report j;
      j.enabled = true;
      j.joined_at = cfg_.join_at_block;
      std::uint64_t at = cfg_.join_at_block;

      contract_filter jf;
      jf.peer = "joiner";
      for (const auto& c : cfg_.join_contracts)
         jf.contracts.insert(c);
      const std::vector<std::string>& wanted =
         jf.contracts.empty() ? cfg_.contracts : cfg_.join_contracts;

      auto t0 = std::chrono::steady_clock::now();
      std::vector<snapshot_manifest> manifests;
      for (const auto& c : wanted) {
         peer_core* donor = nullptr;
         for (auto& p : peers_)
            if (p.core->config().filter.hosts(c)) {
               donor = p.core.get();
               break;
            }
         if (!donor)
            throw config_invalid("joinPeerContracts names a contract no peer hosts: " + c);
         manifests.push_back(donor->extract(c, at));
      }
      std::set<digest32> idset;
      for (std::uint64_t bi = 0; bi < at; ++bi)
         for (const auto& tx : s_.blocks[bi].txs)
            idset.insert(tx.id);
      std::vector<digest32> known(idset.begin(), idset.end());

      j.manifest_bytes = 8 + 32 + known.size() * 32; // height + head hash + id set
      for (const auto& m : manifests)
         j.manifest_bytes += encode_manifest(m).size();
      for (std::uint64_t bi = 0; bi < at; ++bi)
         j.replay_bytes += encode_block(s_.blocks[bi]).size();

      peer_config jc;
      jc.name = "joiner";
      jc.filter = jf;
      jc.endorse_spin = cfg_.endorse_spin;
      peer_core joiner(std::move(jc));
      joiner.seed_join(manifests, at, s_.blocks[at - 1].hash, known);
      for (std::uint64_t bi = at; bi < s_.blocks.size(); ++bi) {
         auto it = verdict_log_.find(s_.blocks[bi].number);
         drain_block(joiner, s_.blocks[bi], it == verdict_log_.end() ? nullptr : &it->second);
      }
      j.join_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                     .count();

      // comparator: same filter, full history, same recorded verdicts.
      peer_config cc;
      cc.name = "comparator";
      cc.filter = jf;
      cc.filter.peer = "comparator";
      cc.endorse_spin = cfg_.endorse_spin;
      peer_core comp(std::move(cc));
      comp.bootstrap(s_.genesis_states, s_.genesis_policies);
      for (std::uint64_t bi = 0; bi < s_.blocks.size(); ++bi) {
         auto it = verdict_log_.find(s_.blocks[bi].number);
         drain_block(comp, s_.blocks[bi], it == verdict_log_.end() ? nullptr : &it->second);
      }

      j.bitmaps_match = joiner.deferred_outstanding() == 0 && comp.deferred_outstanding() == 0;
      for (std::uint64_t n = at + 1; n <= s_.blocks.size() && j.bitmaps_match; ++n)
         if (joiner.stored_bitmap(n) != comp.stored_bitmap(n))
            j.bitmaps_match = false;
      j.state_matches = joiner.db_rows() == comp.db_rows();
      return j;
   }

   std::string summarize(const run_report& r) const {
      std::ostringstream os;
      os << "mode=virtual protocol=" << cfg_.protocol << " blocks=" << r.blocks
         << " txs=" << r.leaves << " peers=" << peers_.size()
         << " workers=" << cfg_.worker_count << " wire="
         << (cfg_.sparse_blocks_enabled ? "sparse" : "full") << "\n";
      os << "virtual time " << fmt(r.virtual_ms) << " ms, stall " << fmt(r.stall_ms_total)
         << " ms, deferral rate " << fmt(r.deferral_rate * 100) << "%\n";
      os << "org verdicts: valid=" << r.org_valid << " invalid=" << r.org_invalid
         << " duplicate=" << r.org_duplicate << " deferred-at-commit=" << r.org_deferred << "\n";
      os << "verdict traffic: " << r.verdict_messages << " msgs, " << r.verdict_bytes
         << " bytes\n";
      os << "dissemination bytes: full-wire=" << r.full_dissemination_bytes
         << " sparse-wire=" << r.sparse_dissemination_bytes << "\n";
      os << "audits: full-bitmaps=" << r.full_bitmaps_match
         << " org-bitmaps=" << r.org_bitmap_matches << " org-state=" << r.org_state_matches
         << " resolved=" << r.all_resolved << "\n";
      os << "oracle digest " << hex8(r.oracle_digest) << ", org union digest "
         << hex8(r.org_digest) << "\n";
      for (const auto& p : r.peers) {
         os << "  " << p.name << " hosts=";
         if (p.hosted.empty())
            os << "*";
         for (std::size_t i = 0; i < p.hosted.size(); ++i)
            os << (i ? "," : "") << p.hosted[i];
         os << " committed=" << p.committed_height << " admitted="
            << p.counters.admitted_committed << " valid=" << p.counters.valid
            << " verdicts tx/rx=" << p.counters.verdicts_sent << "/"
            << p.counters.verdicts_received << " stall=" << fmt(p.stall_ms_total)
            << "ms deferral=" << fmt(p.deferral_rate * 100) << "% wire=" << p.wire_bytes
            << "B store=" << p.store_bytes << "B db=" << p.db_bytes << "B\n";
      }
      if (r.join.enabled)
         os << "join at block " << r.join.joined_at << ": manifest " << r.join.manifest_bytes
            << "B vs replay " << r.join.replay_bytes << "B ("
            << fmt(double(r.join.manifest_bytes) / double(r.join.replay_bytes) * 100)
            << "%), drain " << fmt(r.join.join_ms) << " ms, bitmaps="
            << r.join.bitmaps_match << " state=" << r.join.state_matches << "\n";
      return os.str();
   }

 public:
   oracle_run o_later_{serial_oracle({}, {}), {}}; // set by run_virtual before go()

 private:
   const scenario_config& cfg_;
   const stream_bundle& s_;
   bool strawman_ = false;
   des_scheduler sched_;
   std::vector<des_peer> peers_;
   std::map<tx_ref, const transaction*> txs_;
   std::map<std::uint64_t, std::vector<verdict_msg>> verdict_log_; // emissions by ref block
   std::uint64_t vmsgs_ = 0, vbytes_ = 0;
   std::ostringstream csv_;
};

run_report run_virtual(const scenario_config& cfg, const std::string& store_dir) {
   stream_bundle s = make_stream(cfg);
   des_run run(cfg, s, store_dir);
   run.o_later_ = replay_oracle(s);
   if (run.o_later_.oracle.digest() != s.truth_digest)
      throw std::logic_error("reference validator disagrees with the generator's shadow state");
   return run.go();
}

// ---------------------------------------------------------------------------
// threaded mode: one full peer behind the real pipeline

struct threaded_out {
   pipeline_metrics m;
   peer_counters ctr;
   digest32 digest{};
   bool bitmaps = true;
   bool resolved = true;
   std::uint64_t store_bytes = 0, db_bytes = 0, committed_height = 0;
   std::string csv;
};

threaded_out run_threaded_once(const scenario_config& cfg, const stream_bundle& s,
                               const oracle_run& o, bool pipelined,
                               const std::string& store_path, bool want_csv) {
   peer_config pc;
   pc.name = "p1";
   pc.filter.peer = "p1";
   pc.endorse_spin = cfg.endorse_spin;
   pc.fsync_each = cfg.fsync_each;
   pc.store_path = store_path;
   peer_core core(std::move(pc));
   core.bootstrap(s.genesis_states, s.genesis_policies);

   pipeline_config plc;
   plc.workers = cfg.worker_count;
   plc.pipelined = pipelined;
   plc.commit_delay_ms = cfg.commit_delay_ms;
   pipelined_peer pp(core, plc);
   pp.start();
   double interval = cfg.tx_rate > 0 ? cfg.block_size * 1000.0 / cfg.tx_rate : 0.0;
   auto t0 = std::chrono::steady_clock::now();
   for (std::size_t bi = 0; bi < s.blocks.size(); ++bi) {
      if (interval > 0)
         std::this_thread::sleep_until(
            t0 + std::chrono::duration<double, std::milli>(double(bi) * interval));
      pp.submit(s.blocks[bi]);
   }
   pp.finish();

   threaded_out out;
   out.m = pp.metrics();
   out.ctr = core.counters();
   out.digest = core.state_digest();
   out.committed_height = core.committed_height();
   out.resolved = out.committed_height == s.blocks.size() && core.deferred_outstanding() == 0 &&
                  core.waiting_count() == 0;
   for (std::size_t bi = 0; bi < s.blocks.size(); ++bi)
      if (core.stored_bitmap(s.blocks[bi].number) != o.bitmaps[bi])
         out.bitmaps = false;
   if (out.digest != o.oracle.digest())
      out.bitmaps = false;
   out.store_bytes = core.store_bytes_written();
   out.db_bytes = view_bytes(core.db_rows());

   if (want_csv) {
      std::ostringstream csv;
      csv << csv_header;
      std::uint64_t cum_leaves = 0, cum_valid = 0;
      for (std::size_t i = 0; i < out.m.spans.size(); ++i) {
         const auto& sp = out.m.spans[i];
         std::size_t leaves = s.blocks[i].txs.size();
         cum_leaves += leaves;
         auto bm = core.stored_bitmap(sp.number);
         cum_valid += std::count(bm.begin(), bm.end(), tx_validity::valid);
         double t = sp.commit_end;
         std::size_t queued = 0; // blocks already in validation but not yet committed
         for (std::size_t j = i + 1; j < out.m.spans.size(); ++j)
            if (out.m.spans[j].val_start >= 0 && out.m.spans[j].val_start <= t)
               ++queued;
         double v_ms = sp.val_start >= 0 ? sp.val_end - sp.val_start : 0;
         csv_row(csv, "p1", sp.number, t, t > 0 ? double(cum_leaves) * 1000.0 / t : 0,
                 t > 0 ? double(cum_valid) * 1000.0 / t : 0, queued, v_ms,
                 sp.commit_end - sp.commit_start, leaves);
      }
      out.csv = csv.str();
   }
   return out;
}

run_report run_threaded(const scenario_config& cfg, const std::string& store_dir) {
   stream_bundle s = make_stream(cfg);
   oracle_run o = replay_oracle(s);
   std::string path = store_dir.empty() ? "" : store_dir + "/p1.blocks";
   threaded_out out = run_threaded_once(cfg, s, o, true, path, true);

   run_report r;
   r.blocks = s.blocks.size();
   r.leaves = s.leaves;
   r.wall_ms = out.m.wall_ms;
   r.threaded = out.m;
   r.oracle_digest = o.oracle.digest();
   r.org_digest = out.digest;
   r.full_bitmaps_match = out.bitmaps;
   r.org_bitmap_matches = out.bitmaps;
   r.org_state_matches = out.digest == r.oracle_digest;
   r.all_resolved = out.resolved;
   r.full_dissemination_bytes = s.full_bytes;
   r.org_committed = s.leaves;
   r.org_valid = out.ctr.valid;
   r.org_invalid = out.ctr.invalid_serializability + out.ctr.invalid_endorsement;
   r.org_duplicate = out.ctr.invalid_duplicate;
   r.org_deferred = out.ctr.deferred_at_commit;

   peer_report pr;
   pr.name = "p1";
   pr.counters = out.ctr;
   pr.state_digest = out.digest;
   pr.committed_height = out.committed_height;
   pr.wire_bytes = s.full_bytes;
   pr.store_bytes = out.store_bytes;
   pr.db_bytes = out.db_bytes;
   r.peers.push_back(std::move(pr));

   r.csv = out.csv;
   std::ostringstream os;
   os << "mode=threaded pipelined=1 blocks=" << r.blocks << " txs=" << r.leaves
      << " workers=" << cfg.worker_count << "\n";
   os << "wall " << fmt(r.wall_ms) << " ms -> " << fmt(double(r.leaves) * 1000.0 / r.wall_ms)
      << " tps; validate " << fmt(out.m.validate_ms_total) << " ms, commit "
      << fmt(out.m.commit_ms_total) << " ms, overlap " << out.m.overlap_events << " events / "
      << fmt(out.m.overlapped_ms) << " ms\n";
   os << "audits: bitmaps=" << r.full_bitmaps_match << " state=" << r.org_state_matches
      << " resolved=" << r.all_resolved << "\n";
   os << "oracle digest " << hex8(r.oracle_digest) << ", peer digest " << hex8(r.org_digest)
      << "\n";
   r.summary = os.str();
   return r;
}

} // namespace

// ---------------------------------------------------------------------------

run_report run_scenario(const scenario_config& cfg0, const std::string& store_dir) {
   scenario_config cfg = cfg0;
   check_config(cfg);
   if (!store_dir.empty())
      std::filesystem::create_directories(store_dir);
   if (cfg.mode == "threaded")
      return run_threaded(cfg, store_dir);
   return run_virtual(cfg, store_dir);
}

bench_report run_bench(const scenario_config& cfg0, const std::string& baseline,
                       const std::string& store_dir) {
   scenario_config cfg = cfg0;
   check_config(cfg);
   if (!store_dir.empty())
      std::filesystem::create_directories(store_dir);
   bench_report r;
   r.baseline = baseline;
   std::ostringstream txt;

   stream_bundle s = make_stream(cfg);
   oracle_run o = replay_oracle(s);
   auto tps_of = [&](double wall_ms) {
      return wall_ms > 0 ? double(s.leaves) * 1000.0 / wall_ms : 0.0;
   };

   if (baseline == "serial" || baseline == "pipelined") {
      auto median_run = [&](bool pipelined) {
         std::vector<threaded_out> outs;
         for (int k = 0; k < 3; ++k) {
            std::string path;
            if (!store_dir.empty())
               path = store_dir + "/" + (pipelined ? "pip" : "ser") + std::to_string(k) +
                      ".blocks";
            outs.push_back(run_threaded_once(cfg, s, o, pipelined, path, false));
            r.checks_ok = r.checks_ok && outs.back().bitmaps && outs.back().resolved;
         }
         std::sort(outs.begin(), outs.end(),
                   [](const threaded_out& a, const threaded_out& b) {
                      return a.m.wall_ms < b.m.wall_ms;
                   });
         return outs[1]; // median of three
      };
      if (baseline == "serial") {
         threaded_out ser = median_run(false);
         threaded_out pip = median_run(true);
         r.baseline_overlap_events = ser.m.overlap_events;
         r.candidate_overlap_events = pip.m.overlap_events;
         r.baseline_tps = tps_of(ser.m.wall_ms);
         r.candidate_tps = tps_of(pip.m.wall_ms);
         r.speedup = r.baseline_tps > 0 ? r.candidate_tps / r.baseline_tps : 0;
         txt << "serial baseline: " << fmt(ser.m.wall_ms) << " ms (" << fmt(r.baseline_tps)
             << " tps), overlap events " << ser.m.overlap_events << "\n";
         txt << "pipelined:       " << fmt(pip.m.wall_ms) << " ms (" << fmt(r.candidate_tps)
             << " tps), overlap events " << pip.m.overlap_events << ", overlapped "
             << fmt(pip.m.overlapped_ms) << " ms\n";
         txt << "speedup " << fmt(r.speedup) << "x, checks " << (r.checks_ok ? "ok" : "FAILED")
             << "\n";
      } else {
         threaded_out pip = median_run(true);
         r.candidate_overlap_events = pip.m.overlap_events;
         r.candidate_tps = tps_of(pip.m.wall_ms);
         double v = pip.m.blocks ? pip.m.validate_ms_total / double(pip.m.blocks) : 0;
         double c = pip.m.blocks ? pip.m.commit_ms_total / double(pip.m.blocks) : 0;
         r.baseline_tps = v + c > 0
                             ? theoretical_max_tps(double(s.leaves) / double(pip.m.blocks), v, c)
                             : 0;
         r.speedup = r.baseline_tps > 0 ? r.candidate_tps / r.baseline_tps : 0;
         txt << "pipelined: " << fmt(pip.m.wall_ms) << " ms (" << fmt(r.candidate_tps)
             << " tps); mean V " << fmt(v) << " ms, mean C " << fmt(c)
             << " ms -> ceiling " << fmt(r.baseline_tps) << " tps, attained "
             << fmt(r.speedup * 100) << "%\n";
         txt << "checks " << (r.checks_ok ? "ok" : "FAILED") << "\n";
      }
   } else if (baseline == "sparse") {
      if (cfg.filters_per_peer == 0)
         throw config_invalid("bench sparse needs filtersPerPeer > 0");
      if (cfg.cross_contract_rate > 0)
         throw config_invalid("bench sparse times independent peers; crossContractMix must be 0");
      auto filters = make_filters(cfg);

      // sequential per-peer timing: each sparse peer drains its filtered wire
      // alone, single-threaded; the org's elapsed time is the slowest peer
      // since real deployments run them in parallel.
      double max_ms = 0, full_ms = 0;
      std::uint64_t max_admitted = 0;
      std::vector<peer_core*> cores;
      std::vector<std::unique_ptr<peer_core>> keep;
      for (const auto& f : filters) {
         std::vector<sparse_block> wire;
         wire.reserve(s.blocks.size());
         for (const auto& b : s.blocks)
            wire.push_back(make_sparse(b, f));
         peer_config pc;
         pc.name = f.peer;
         pc.filter = f;
         pc.endorse_spin = cfg.endorse_spin;
         if (!store_dir.empty())
            pc.store_path = store_dir + "/" + f.peer + ".blocks";
         auto core = std::make_unique<peer_core>(std::move(pc));
         core->bootstrap(s.genesis_states, s.genesis_policies);
         auto t0 = std::chrono::steady_clock::now();
         for (const auto& sb : wire)
            drain_block(*core, sb, nullptr);
         double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
               .count();
         auto ctr = core->counters();
         txt << f.peer << ": " << fmt(ms) << " ms, admitted " << ctr.admitted_committed
             << ", valid " << ctr.valid << "\n";
         max_ms = std::max(max_ms, ms);
         max_admitted = std::max(max_admitted, ctr.admitted_committed);
         r.checks_ok = r.checks_ok && core->committed_height() == s.blocks.size() &&
                       core->deferred_outstanding() == 0;
         cores.push_back(core.get());
         keep.push_back(std::move(core));
      }
      auto a = audit_org(cores, o, s);
      r.checks_ok = r.checks_ok && a.org_bitmaps && a.org_state;

      peer_config fc;
      fc.name = "full";
      fc.filter.peer = "full";
      fc.endorse_spin = cfg.endorse_spin;
      if (!store_dir.empty())
         fc.store_path = store_dir + "/full.blocks";
      peer_core full(std::move(fc));
      full.bootstrap(s.genesis_states, s.genesis_policies);
      auto t0 = std::chrono::steady_clock::now();
      for (const auto& b : s.blocks)
         drain_block(full, b, nullptr);
      full_ms =
         std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      auto fctr = full.counters();
      r.checks_ok = r.checks_ok && full.state_digest() == o.oracle.digest();

      r.baseline_tps = tps_of(full_ms);
      r.candidate_tps = tps_of(max_ms);
      r.speedup = max_ms > 0 ? full_ms / max_ms : 0;
      r.peer_work_fraction =
         fctr.admitted_committed ? double(max_admitted) / double(fctr.admitted_committed) : 0;
      txt << "full-replicated baseline: " << fmt(full_ms) << " ms (" << fmt(r.baseline_tps)
          << " tps)\n";
      txt << "sparse org (slowest peer " << fmt(max_ms) << " ms): " << fmt(r.candidate_tps)
          << " tps, speedup " << fmt(r.speedup) << "x, max per-peer work "
          << fmt(r.peer_work_fraction * 100) << "%\n";
      txt << "checks " << (r.checks_ok ? "ok" : "FAILED") << "\n";
   } else {
      throw config_invalid("unknown bench baseline: " + baseline);
   }
   r.text = txt.str();
   return r;
}

void write_run_outputs(const run_report& r, const std::string& out_dir) {
   namespace fs = std::filesystem;
   fs::create_directories(out_dir);
   std::ofstream(out_dir + "/metrics.csv") << r.csv;
   std::ofstream(out_dir + "/report.txt") << r.summary;
   std::ostringstream dg;
   dg << "oracle " << hex(r.oracle_digest) << "\n";
   dg << "org " << hex(r.org_digest) << "\n";
   for (const auto& p : r.peers)
      dg << p.name << " " << hex(p.state_digest) << "\n";
   std::ofstream(out_dir + "/state_digest.txt") << dg.str();
}

} // namespace eov
