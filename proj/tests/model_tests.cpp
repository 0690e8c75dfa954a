#include <doctest.h>

#include <eov/errors.hpp>
#include <eov/merkle.hpp>
#include <eov/model.hpp>
#include <eov/peer_core.hpp>
#include <eov/validation.hpp>

using namespace eov;

namespace {

// one transaction exercising every encodable field.
transaction full_tx() {
   transaction tx;
   tx.reads.push_back({skey("S2", "acct_0001"), version{3, 7}});
   tx.reads.push_back({skey("S1", "gone"), std::nullopt});
   tx.reads.push_back({skey(std::string(policy_contract), "S1"), version{0, 4}});
   tx.writes.push_back({skey("S1", "acct_0002"), to_bytes("v=41"), false});
   tx.writes.push_back({skey("S1", "acct_0003"), {}, true});
   range_query_info rq;
   rq.contract = "S3";
   rq.start_key = to_bytes("a");
   rq.end_key = std::nullopt;
   rq.observed.push_back({skey("S3", "abc"), version{2, 0}});
   tx.ranges.push_back(rq);
   tx.contracts = derive_contracts(tx);
   tx.endorsements.push_back(endorse(tx, "org01"));
   tx.endorsements.push_back(endorse(tx, "org02"));
   tx.id = compute_tx_id(tx);
   return tx;
}

} // namespace

TEST_CASE("transaction codec roundtrips every field") {
   transaction tx = full_tx();
   transaction rt = decode_tx(encode_tx(tx));
   CHECK(rt.id == tx.id);
   CHECK(rt.contracts == tx.contracts);
   CHECK(rt.reads == tx.reads);
   CHECK(rt.writes == tx.writes);
   CHECK(rt.ranges == tx.ranges);
   CHECK(rt.endorsements == tx.endorsements);
   CHECK(compute_tx_id(rt) == tx.id);
}

TEST_CASE("derived contracts keep first-touch order and dedupe") {
   transaction tx = full_tx();
   // policy read on S1 maps to S1, so S2 (first read) comes first.
   CHECK(tx.contracts == std::vector<std::string>{"S2", "S1", "S3"});
}

TEST_CASE("tx id covers body and endorsements") {
   transaction tx = full_tx();
   transaction t2 = tx;
   t2.writes[0].value = to_bytes("v=42");
   CHECK(compute_tx_id(t2) != tx.id);
   transaction t3 = tx;
   t3.endorsements.pop_back();
   CHECK(compute_tx_id(t3) != tx.id);
   // response bytes cover the body only, so they are endorsement-blind.
   CHECK(response_bytes(t3) == response_bytes(tx));
   CHECK(response_bytes(t2) != response_bytes(tx));
}

TEST_CASE("version and state_key order as tuples") {
   CHECK(version{1, 2} < version{2, 0});
   CHECK(version{2, 0} < version{2, 1});
   CHECK(version{2, 1} == version{2, 1});
   CHECK(skey("S1", "b") < skey("S2", "a"));
   CHECK(skey("S1", "a") < skey("S1", "b"));
}

TEST_CASE("policy namespace maps keys to the governed contract") {
   CHECK(effective_contract(skey("S4", "k")) == "S4");
   CHECK(effective_contract(skey(std::string(policy_contract), "S4")) == "S4");
}

TEST_CASE("policy codec roundtrips") {
   endorsement_policy p{"S1", {"org01", "org02", "org03"}, 2};
   endorsement_policy rt = decode_policy(encode_policy(p));
   CHECK(rt == p);
}

TEST_CASE("verdict codec roundtrips") {
   verdict_msg m;
   m.ref = tx_ref{7, 3};
   m.contract = "S2";
   m.verdict = tx_validity::invalid_serializability;
   m.from_peer = "p4";
   CHECK(decode_verdict(encode_verdict(m)) == m);
}

TEST_CASE("sealed blocks carry a verifiable header") {
   transaction tx = full_tx();
   digest32 prev{};
   prev[0] = 0x11;
   block b = seal_block(4, prev, {tx});
   CHECK(b.merkle_root == merkle_root(std::vector<digest32>{tx.id}));
   CHECK(b.hash == block_header_hash(b.number, b.prev_hash, b.merkle_root));
   block rt = decode_block(encode_block(b));
   CHECK(rt.number == b.number);
   CHECK(rt.hash == b.hash);
   CHECK(rt.txs.size() == 1);
   CHECK(rt.txs[0].id == tx.id);
}

TEST_CASE("empty blocks are rejected at sealing") {
   CHECK_THROWS_AS(seal_block(1, digest32{}, {}), empty_block);
}

TEST_CASE("validity classes split into valid and invalid") {
   CHECK(!is_invalid(tx_validity::valid));
   CHECK(!is_invalid(tx_validity::deferred));
   CHECK(!is_invalid(tx_validity::not_validated));
   CHECK(is_invalid(tx_validity::invalid_serializability));
   CHECK(is_invalid(tx_validity::invalid_endorsement));
   CHECK(is_invalid(tx_validity::invalid_duplicate));
}
