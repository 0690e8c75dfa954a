#include <eov/fixtures.hpp>

#include <eov/dep_graph.hpp>
#include <eov/validation.hpp>

namespace eov::fixtures {

namespace {

constexpr const char* kOrg = "org01";

transaction finish(transaction tx) {
   tx.contracts = derive_contracts(tx);
   tx.endorsements.push_back(endorse(tx, kOrg));
   tx.id = compute_tx_id(tx);
   return tx;
}

read_entry rd(const std::string& c, const std::string& k, version v) {
   return read_entry{skey(c, k), v};
}

read_entry pol_rd(const std::string& governed, version v) {
   return read_entry{skey(std::string(policy_contract), governed), v};
}

write_entry wr(const std::string& c, const std::string& k, const std::string& v) {
   return write_entry{skey(c, k), to_bytes(v), false};
}

write_entry del(const std::string& c, const std::string& k) {
   return write_entry{skey(c, k), {}, true};
}

state_row row(const std::string& c, const std::string& k, version v, const bytes& val) {
   return {skey(c, k), {v, val}};
}

} // namespace

conflict_fixture make_conflict_fixture() {
   conflict_fixture f;

   const std::string S = "S1";
   f.genesis_states = {
       {skey(S, "k1"), to_bytes("v1")},
       {skey(S, "k4"), to_bytes("v1")},
       {skey(S, "k6"), to_bytes("v1")},
   };
   f.genesis_policies = {endorsement_policy{S, {kOrg}, 1}};

   // bootstrap stamps: k1 (0,0), k4 (0,1), k6 (0,2), policy (0,3).
   const version vk1{0, 0}, vk4{0, 1}, vk6{0, 2}, vpol{0, 3};

   transaction t1; // reads k6, rewrites k1
   t1.reads = {rd(S, "k6", vk6), pol_rd(S, vpol)};
   t1.writes = {wr(S, "k1", "v2")};

   transaction t2; // reads k1, rewrites k6 — dies by fate against t1
   t2.reads = {rd(S, "k1", vk1), pol_rd(S, vpol)};
   t2.writes = {wr(S, "k6", "v2")};

   transaction t3; // blind rewrite of k6
   t3.reads = {pol_rd(S, vpol)};
   t3.writes = {wr(S, "k6", "v2")};

   transaction t4; // creates k5
   t4.reads = {pol_rd(S, vpol)};
   t4.writes = {wr(S, "k5", "v1")};

   transaction t5; // scans [k2, k5], writes k7 — phantom against t4's create
   t5.reads = {pol_rd(S, vpol)};
   {
      range_query_info rq;
      rq.contract = S;
      rq.start_key = to_bytes("k2");
      bytes end = to_bytes("k5");
      end.push_back(0); // first key past "k5": the scan includes k5 itself
      rq.end_key = end;
      rq.observed = {rd(S, "k4", vk4)};
      t5.ranges.push_back(rq);
   }
   t5.writes = {wr(S, "k7", "v2")};

   transaction t6; // read-modify-write of k4, whose key t5's scan observed
   t6.reads = {rd(S, "k4", vk4), pol_rd(S, vpol)};
   t6.writes = {wr(S, "k4", "v2")};

   block b1 = seal_block(1, digest32{}, {finish(std::move(t1)), finish(std::move(t2)),
                                         finish(std::move(t3)), finish(std::move(t4))});
   block b2 = seal_block(2, b1.hash, {finish(std::move(t5)), finish(std::move(t6))});
   f.blocks = {b1, b2};

   f.edges = {
       {1, 1, 1, 0, dep_rw | dep_wr}, // T2→T1: rw(k1), wr(k6)
       {1, 2, 1, 0, dep_wr},          // T3→T1: wr(k6)
       {1, 2, 1, 1, dep_ww},          // T3→T2: ww(k6)
       {2, 0, 1, 3, dep_pr},          // T5→T4: phantom(k5)
       {2, 1, 2, 0, dep_wr},          // T6→T5: wr(k4), via T5's scan
   };
   f.dispatch_order = {1, 4, 3, 6};

   using v = tx_validity;
   f.bitmaps = {{v::valid, v::invalid_serializability, v::valid, v::valid},
                {v::invalid_serializability, v::valid}};

   const bytes v1b = to_bytes("v1"), v2b = to_bytes("v2");
   const bytes polb = encode_policy(f.genesis_policies[0]);
   f.state_after_b1 = {
       row(S, "k1", {1, 0}, v2b),
       row(S, "k4", vk4, v1b),
       row(S, "k5", {1, 3}, v1b),
       row(S, "k6", {1, 2}, v2b),
       {skey(std::string(policy_contract), S), {vpol, polb}},
   };
   f.dirty_after_b1 = {row(S, "k4", {2, 1}, v2b)};
   f.final_state = {
       row(S, "k1", {1, 0}, v2b),
       row(S, "k4", {2, 1}, v2b),
       row(S, "k5", {1, 3}, v1b),
       row(S, "k6", {1, 2}, v2b),
       {skey(std::string(policy_contract), S), {vpol, polb}},
   };
   return f;
}

distributed_fixture make_distributed_fixture() {
   distributed_fixture f;

   f.genesis_states = {
       {skey("S1", "k4"), to_bytes("v1")}, {skey("S1", "k7"), to_bytes("v1")},
       {skey("S2", "k3"), to_bytes("v1")}, {skey("S2", "k5"), to_bytes("v1")},
       {skey("S3", "k6"), to_bytes("v1")},
   };
   f.genesis_policies = {
       endorsement_policy{"S1", {kOrg}, 1},
       endorsement_policy{"S2", {kOrg}, 1},
       endorsement_policy{"S3", {kOrg}, 1},
   };

   // global bootstrap stamps across all three contracts.
   const version vk4{0, 0}, vk7{0, 1}, vk3{0, 2}, vk5{0, 3}, vk6{0, 4};
   const version vp1{0, 5}, vp2{0, 6}, vp3{0, 7};

   transaction t1; // S1-local read-modify-write of k7
   t1.reads = {rd("S1", "k7", vk7), pol_rd("S1", vp1)};
   t1.writes = {wr("S1", "k7", "v2")};

   transaction t2; // reads in S2, writes in S1
   t2.reads = {rd("S2", "k3", vk3), pol_rd("S2", vp2), pol_rd("S1", vp1)};
   t2.writes = {wr("S1", "k4", "v2")};

   transaction t3; // touches all three contracts; stale on k4 once t2 lands
   t3.reads = {rd("S1", "k4", vk4), rd("S2", "k5", vk5), rd("S3", "k6", vk6),
               pol_rd("S1", vp1), pol_rd("S2", vp2), pol_rd("S3", vp3)};
   t3.writes = {wr("S1", "k4", "v3"), wr("S2", "k3", "v2"), wr("S3", "k6", "v2")};

   f.b1 = seal_block(1, digest32{},
                     {finish(std::move(t1)), finish(std::move(t2)), finish(std::move(t3))});

   f.filters = {
       contract_filter{"P1", {"S1"}},
       contract_filter{"P2", {"S2"}},
       contract_filter{"P3", {"S3"}},
   };

   using v = tx_validity;
   f.peer_bitmaps = {
       {v::valid, v::valid, v::invalid_serializability},
       {v::not_validated, v::valid, v::invalid_serializability},
       {v::not_validated, v::not_validated, v::invalid_serializability},
   };
   f.org_verdicts = {v::valid, v::valid, v::invalid_serializability};

   // the four verdicts the peers emit: both halves of T2, P3's vote for T3,
   // then P1's fate invalidation of T3. P2 never votes on T3 (the incoming
   // invalid short-circuits it) and T1 is single-contract, so it never
   // crosses the wire. every valid verdict precedes the invalid one.
   const tx_ref t2r{1, 1}, t3r{1, 2};
   f.expected_verdicts = {
       {t2r, "S1", v::valid, "P1"},
       {t2r, "S2", v::valid, "P2"},
       {t3r, "S3", v::valid, "P3"},
       {t3r, "S1", v::invalid_serializability, "P1"},
   };

   const bytes v1b = to_bytes("v1"), v2b = to_bytes("v2");
   f.peer_states = {
       {row("S1", "k4", {1, 1}, v2b), row("S1", "k7", {1, 0}, v2b),
        {skey(std::string(policy_contract), "S1"), {vp1, encode_policy(f.genesis_policies[0])}}},
       {row("S2", "k3", vk3, v1b), row("S2", "k5", vk5, v1b),
        {skey(std::string(policy_contract), "S2"), {vp2, encode_policy(f.genesis_policies[1])}}},
       {row("S3", "k6", vk6, v1b),
        {skey(std::string(policy_contract), "S3"), {vp3, encode_policy(f.genesis_policies[2])}}},
   };
   return f;
}

snapshot_fixture make_snapshot_fixture() {
   snapshot_fixture f;

   const std::string S = "S1";
   f.genesis_policies = {endorsement_policy{S, {kOrg}, 1}};
   const version vpol{0, 0};

   auto one_tx_block = [&](std::uint64_t number, const digest32& prev,
                           std::vector<write_entry> writes) {
      transaction t;
      t.reads = {pol_rd(S, vpol)};
      t.writes = std::move(writes);
      return seal_block(number, prev, {finish(std::move(t))});
   };

   block b1 = one_tx_block(1, digest32{}, {wr(S, "k1", "v1")});
   block b2 = one_tx_block(2, b1.hash, {wr(S, "k2", "v1")});
   block b3 = one_tx_block(3, b2.hash, {wr(S, "k3", "v1")});
   block b4 = one_tx_block(4, b3.hash, {del(S, "k1"), wr(S, "k2", "v2")});
   f.blocks = {b1, b2, b3, b4};

   const bytes v1b = to_bytes("v1"), v2b = to_bytes("v2");
   const bytes polb = encode_policy(f.genesis_policies[0]);
   f.expected_at_3 = {
       row(S, "k1", {1, 0}, v1b),
       row(S, "k2", {2, 0}, v1b),
       row(S, "k3", {3, 0}, v1b),
       {skey(std::string(policy_contract), S), {vpol, polb}},
   };
   f.final_live = {
       row(S, "k2", {4, 0}, v2b),
       row(S, "k3", {3, 0}, v1b),
       {skey(std::string(policy_contract), S), {vpol, polb}},
   };
   return f;
}

} // namespace eov::fixtures
