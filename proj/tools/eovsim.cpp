#include <CLI11.hpp>

#include <eov/fixtures.hpp>
#include <eov/model.hpp>
#include <eov/peer_core.hpp>
#include <eov/sim.hpp>
#include <eov/workload.hpp>

#include <algorithm>
#include <cstdio>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

namespace {

using namespace eov;

int g_failures = 0;

void check(bool ok, const std::string& what) {
   std::printf("%s  %s\n", ok ? "PASS" : "FAIL", what.c_str());
   if (!ok)
      ++g_failures;
}

// pull every currently eligible transaction, then finish the batch in pull
// order; repeat until the graph stops yielding. single-threaded stand-in for
// a saturated worker pool with deterministic completion order.
std::vector<tx_ref> drain_waves(peer_core& p, std::vector<verdict_msg>* out = nullptr) {
   std::vector<tx_ref> pulled;
   for (;;) {
      std::vector<dispatch> wave;
      while (auto d = p.next_transaction())
         wave.push_back(std::move(*d));
      if (wave.empty())
         break;
      for (auto& d : wave) {
         pulled.push_back(d.ref);
         bool ok = p.check_endorsements_for(d.tx);
         auto fr = p.finish_validation(d.ref, ok);
         if (out)
            out->insert(out->end(), fr.broadcasts.begin(), fr.broadcasts.end());
      }
   }
   return pulled;
}

commit_stats commit_next(peer_core& p) {
   auto fi = p.front_block();
   if (!fi)
      throw std::logic_error("commit_next: no pending block");
   std::vector<tx_validity> popped;
   popped.reserve(fi->admitted.size());
   for (std::uint32_t idx : fi->admitted)
      popped.push_back(p.results().pop(tx_ref{fi->number, idx}, false));
   return p.commit_front(popped);
}

bool rows_equal(const state_view& got, const std::vector<fixtures::state_row>& want) {
   if (got.size() != want.size())
      return false;
   auto it = got.begin();
   for (const auto& w : want) {
      if (it->first != w.first || it->second != w.second)
         return false;
      ++it;
   }
   return true;
}

void golden_conflict() {
   auto f = fixtures::make_conflict_fixture();
   peer_config pc;
   pc.name = "solo";
   peer_core peer{pc};
   peer.bootstrap(f.genesis_states, f.genesis_policies);
   peer.ingest(f.blocks[0]);
   peer.ingest(f.blocks[1]);

   // every frozen edge present with exactly the frozen kinds, and no extras.
   auto& g = peer.graph_for_test();
   bool edges_ok = true;
   std::size_t live = 0;
   for (const auto& e : f.edges)
      if (g.edge_kinds(tx_ref{e.from_block, e.from_tx}, tx_ref{e.to_block, e.to_tx}) != e.kinds)
         edges_ok = false;
   std::vector<tx_ref> refs;
   for (std::uint32_t i = 0; i < 4; ++i)
      refs.push_back(tx_ref{1, i});
   for (std::uint32_t i = 0; i < 2; ++i)
      refs.push_back(tx_ref{2, i});
   for (tx_ref a : refs)
      for (tx_ref b : refs)
         if (g.edge_kinds(a, b) != 0)
            ++live;
   check(edges_ok && live == f.edges.size(), "conflict: dependency edges");

   auto pulled = drain_waves(peer);
   std::vector<std::uint32_t> flat;
   for (tx_ref r : pulled)
      flat.push_back(static_cast<std::uint32_t>((r.block - 1) * 4 + r.tx + 1));
   check(flat == f.dispatch_order, "conflict: dispatch order");

   auto st1 = commit_next(peer);
   check(st1.number == 1 && peer.stored_bitmap(1) == f.bitmaps[0], "conflict: block 1 bitmap");
   check(rows_equal(peer.db_rows(), f.state_after_b1), "conflict: committed state after block 1");

   // block 2's surviving write still sits in the dirty buffer.
   const auto& dirty = peer.ledger_for_test().dirty().by_key();
   bool dirty_ok = dirty.size() == f.dirty_after_b1.size();
   for (const auto& w : f.dirty_after_b1) {
      auto it = dirty.find(w.first);
      if (it == dirty.end() || it->second.size() != 1 || it->second[0].ver != w.second.first ||
          it->second[0].value != w.second.second || it->second[0].is_delete)
         dirty_ok = false;
   }
   check(dirty_ok, "conflict: dirty buffer after block 1");

   auto st2 = commit_next(peer);
   check(st2.number == 2 && peer.stored_bitmap(2) == f.bitmaps[1], "conflict: block 2 bitmap");
   check(rows_equal(peer.db_rows(), f.final_state), "conflict: final state");
}

void golden_distributed() {
   auto f = fixtures::make_distributed_fixture();
   std::vector<std::unique_ptr<peer_core>> peers;
   for (const auto& flt : f.filters) {
      peer_config pc;
      pc.name = flt.peer;
      pc.filter = flt;
      peers.push_back(std::make_unique<peer_core>(pc));
      peers.back()->bootstrap(f.genesis_states, f.genesis_policies);
      peers.back()->ingest(f.b1);
   }

   std::vector<verdict_msg> emitted; // global emission order
   std::deque<verdict_msg> q;
   auto route = [&](const verdict_msg& m) {
      emitted.push_back(m);
      q.push_back(m);
   };

   // alternate between validating whatever is eligible and delivering the
   // queued verdicts in emission order, until the network goes quiet.
   for (;;) {
      bool dispatched = false;
      for (auto& p : peers)
         while (auto d = p->next_transaction()) {
            dispatched = true;
            bool ok = p->check_endorsements_for(d->tx);
            auto fr = p->finish_validation(d->ref, ok);
            for (const auto& m : fr.broadcasts)
               route(m);
         }
      if (!q.empty()) {
         while (!q.empty()) {
            verdict_msg m = q.front();
            q.pop_front();
            const transaction& tx = f.b1.txs[m.ref.tx];
            for (auto& p : peers) {
               if (p->config().name == m.from_peer || !p->config().filter.admits(tx))
                  continue;
               for (const auto& fu : p->deliver_verdict(m))
                  route(fu);
            }
         }
         continue;
      }
      if (!dispatched)
         break;
   }

   auto key = [](const verdict_msg& m) {
      return std::tuple{m.ref.block, m.ref.tx, m.contract, static_cast<int>(m.verdict),
                        m.from_peer};
   };
   std::vector<decltype(key(emitted[0]))> got, want;
   for (const auto& m : emitted)
      got.push_back(key(m));
   for (const auto& m : f.expected_verdicts)
      want.push_back(key(m));
   std::sort(got.begin(), got.end());
   std::sort(want.begin(), want.end());
   check(got == want, "distributed: verdict traffic");
   check(!emitted.empty() && is_invalid(emitted.back().verdict),
         "distributed: invalid verdict emitted last");

   bool bitmaps_ok = true, states_ok = true;
   std::vector<std::vector<tx_validity>> maps;
   for (std::size_t i = 0; i < peers.size(); ++i) {
      commit_next(*peers[i]);
      maps.push_back(peers[i]->stored_bitmap(1));
      if (maps.back() != f.peer_bitmaps[i])
         bitmaps_ok = false;
      if (!rows_equal(peers[i]->db_rows(), f.peer_states[i]))
         states_ok = false;
   }
   check(bitmaps_ok, "distributed: peer bitmaps");
   check(states_ok, "distributed: peer state partitions");

   // hosting peers must agree wherever they overlap; the union is the org
   // verdict vector.
   bool org_ok = true;
   for (std::size_t j = 0; j < f.org_verdicts.size(); ++j) {
      tx_validity v = tx_validity::not_validated;
      for (const auto& bm : maps) {
         if (bm[j] == tx_validity::not_validated)
            continue;
         if (v == tx_validity::not_validated)
            v = bm[j];
         else if (v != bm[j])
            org_ok = false;
      }
      if (v != f.org_verdicts[j])
         org_ok = false;
   }
   check(org_ok, "distributed: org verdicts");
}

void golden_snapshot() {
   auto f = fixtures::make_snapshot_fixture();
   peer_config pc;
   pc.name = "solo";
   peer_core peer{pc};
   peer.bootstrap(f.genesis_states, f.genesis_policies);
   for (const auto& b : f.blocks) {
      peer.ingest(b);
      drain_waves(peer);
      commit_next(peer);
   }

   auto m = peer.extract("S1", 3);
   bool snap_ok = m.contract == "S1" && m.as_of_block == 3 &&
                  m.entries.size() == f.expected_at_3.size();
   if (snap_ok)
      for (std::size_t i = 0; i < m.entries.size(); ++i) {
         const auto& [k, ver, val] = m.entries[i];
         const auto& w = f.expected_at_3[i];
         if (k != w.first || ver != w.second.first || val != w.second.second)
            snap_ok = false;
      }
   check(snap_ok, "snapshot: extract as of block 3");
   check(rows_equal(peer.db_rows(), f.final_live), "snapshot: live state after block 4");
}

int cmd_golden() {
   golden_conflict();
   golden_distributed();
   golden_snapshot();
   if (g_failures)
      std::printf("%d golden check(s) failed\n", g_failures);
   return g_failures ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
   CLI::App app{"execute-order-validate ledger engine: scenarios, audits, benches"};
   app.require_subcommand(1);

   std::string config_path, out_dir = "out", baseline;
   bool store = false;

   auto* run = app.add_subcommand("run", "run one scenario and write its outputs");
   run->add_option("--config", config_path, "scenario config file")->required();
   run->add_option("--out", out_dir, "output directory");
   run->add_flag("--store", store, "keep block stores on disk under the output directory");

   auto* oracle = app.add_subcommand("oracle-check", "audit a scenario against the reference validator");
   oracle->add_option("--config", config_path, "scenario config file")->required();

   auto* bench = app.add_subcommand("bench", "compare a scenario against a baseline engine");
   bench->add_option("--config", config_path, "scenario config file")->required();
   bench->add_option("--baseline", baseline, "serial | pipelined | sparse")
       ->required()
       ->check(CLI::IsMember({"serial", "pipelined", "sparse"}));
   bench->add_flag("--store", store, "keep block stores on disk");

   auto* golden = app.add_subcommand("golden", "replay the worked examples and verify them");

   CLI11_PARSE(app, argc, argv);

   try {
      if (app.got_subcommand(golden))
         return cmd_golden();

      if (app.got_subcommand(run)) {
         auto cfg = eov::load_config_file(config_path);
         auto r = eov::run_scenario(cfg, store ? out_dir + "/stores" : "");
         eov::write_run_outputs(r, out_dir);
         std::fputs(r.summary.c_str(), stdout);
         return 0;
      }

      if (app.got_subcommand(oracle)) {
         auto cfg = eov::load_config_file(config_path);
         auto r = eov::run_scenario(cfg);
         check(r.full_bitmaps_match, "full peers match the reference bitmaps");
         check(r.org_bitmap_matches, "hosting peers match the reference verdict classes");
         check(r.org_state_matches, "partition union equals the reference state");
         check(r.all_resolved, "every admitted transaction resolved");
         return g_failures ? 1 : 0;
      }

      if (app.got_subcommand(bench)) {
         auto cfg = eov::load_config_file(config_path);
         auto b = eov::run_bench(cfg, baseline, store ? out_dir + "/stores" : "");
         std::fputs(b.text.c_str(), stdout);
         return b.checks_ok ? 0 : 1;
      }
   } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 2;
   }
   return 0;
}
