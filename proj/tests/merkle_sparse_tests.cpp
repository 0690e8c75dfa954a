#include <doctest.h>

#include <eov/errors.hpp>
#include <eov/hash.hpp>
#include <eov/merkle.hpp>
#include <eov/model.hpp>
#include <eov/sparse_block.hpp>
#include <eov/validation.hpp>

#include <random>

using namespace eov;

namespace {

digest32 leaf(std::uint8_t tag) {
   digest32 d{};
   d[0] = tag;
   d[31] = tag;
   return d;
}

digest32 pair_hash(const digest32& a, const digest32& b) {
   std::uint8_t buf[64];
   std::copy(a.begin(), a.end(), buf);
   std::copy(b.begin(), b.end(), buf + 32);
   return sha256(buf, sizeof(buf));
}

transaction make_tx(const std::string& contract, const std::string& key, const std::string& val) {
   transaction tx;
   tx.reads.push_back({skey(contract, key), version{0, 0}});
   tx.writes.push_back({skey(contract, key), to_bytes(val), false});
   tx.contracts = derive_contracts(tx);
   tx.endorsements.push_back(endorse(tx, "org01"));
   tx.id = compute_tx_id(tx);
   return tx;
}

} // namespace

TEST_CASE("merkle root: single leaf is the leaf") {
   std::vector<digest32> l{leaf(1)};
   CHECK(merkle_root(l) == leaf(1));
}

TEST_CASE("merkle root: zero leaves throw") {
   CHECK_THROWS_AS(merkle_root({}), empty_leaves);
}

TEST_CASE("merkle root: odd node is promoted unchanged") {
   std::vector<digest32> l{leaf(1), leaf(2), leaf(3)};
   // level 1: H(l1,l2), l3 ; root: H(H(l1,l2), l3)
   CHECK(merkle_root(l) == pair_hash(pair_hash(leaf(1), leaf(2)), leaf(3)));
   std::vector<digest32> l5{leaf(1), leaf(2), leaf(3), leaf(4), leaf(5)};
   digest32 a = pair_hash(leaf(1), leaf(2));
   digest32 b = pair_hash(leaf(3), leaf(4));
   CHECK(merkle_root(l5) == pair_hash(pair_hash(a, b), leaf(5)));
}

TEST_CASE("merkle root is order sensitive") {
   CHECK(merkle_root({leaf(1), leaf(2)}) != merkle_root({leaf(2), leaf(1)}));
}

TEST_CASE("sparse view keeps the full block's root and hash") {
   std::vector<transaction> txs{make_tx("S1", "a", "1"), make_tx("S2", "b", "2"),
                                make_tx("S3", "c", "3"), make_tx("S1", "d", "4")};
   block b = seal_block(1, digest32{}, txs);
   contract_filter f1{"p1", {"S1"}};
   contract_filter f2{"p2", {"S2", "S3"}};
   contract_filter full{"pf", {}};
   sparse_block s1 = make_sparse(b, f1);
   sparse_block s2 = make_sparse(b, f2);
   sparse_block sf = make_sparse(b, full);
   CHECK(s1.merkle_root == b.merkle_root);
   CHECK(s2.merkle_root == b.merkle_root);
   CHECK(sf.merkle_root == b.merkle_root);
   CHECK(s1.hash == b.hash);
   // inclusion tracks admission.
   REQUIRE(s1.included.size() == 2);
   CHECK(s1.included[0].first == 0);
   CHECK(s1.included[1].first == 3);
   REQUIRE(s2.included.size() == 2);
   CHECK(s2.included[0].first == 1);
   CHECK(s2.included[1].first == 2);
   CHECK(sf.included.size() == 4);
   CHECK(!verify_sparse(s1, digest32{}).has_value());
   CHECK(!verify_sparse(s2, digest32{}).has_value());
   // the sparse wire is smaller than the full one when txs are dropped.
   CHECK(encode_sparse(s1).size() < encode_sparse(sf).size());
}

TEST_CASE("sparse codec roundtrips") {
   std::vector<transaction> txs{make_tx("S1", "a", "1"), make_tx("S2", "b", "2")};
   block b = seal_block(1, digest32{}, txs);
   sparse_block sb = make_sparse(b, contract_filter{"p", {"S2"}});
   sparse_block rt = decode_sparse(encode_sparse(sb));
   CHECK(rt.number == sb.number);
   CHECK(rt.hash == sb.hash);
   CHECK(rt.all_tx_ids == sb.all_tx_ids);
   REQUIRE(rt.included.size() == 1);
   CHECK(rt.included[0].first == 1);
   CHECK(rt.included[0].second.id == sb.included[0].second.id);
   CHECK(rt.applied_filter.contracts == sb.applied_filter.contracts);
}

TEST_CASE("sparse verification rejects tampering") {
   std::vector<transaction> txs{make_tx("S1", "a", "1"), make_tx("S2", "b", "2"),
                                make_tx("S1", "c", "3")};
   digest32 prev{};
   prev[5] = 9;
   block b = seal_block(2, prev, txs);
   sparse_block good = make_sparse(b, contract_filter{"p", {"S1"}});
   REQUIRE(!verify_sparse(good, prev).has_value());

   sparse_block t = good;
   t.included[0].second.writes[0].value[0] ^= 0x01;
   CHECK(verify_sparse(t, prev).has_value());

   t = good;
   t.all_tx_ids[1][4] ^= 0x01;
   CHECK(verify_sparse(t, prev).has_value());

   t = good;
   t.prev_hash[0] ^= 0x01;
   CHECK(verify_sparse(t, prev).has_value());

   t = good;
   t.merkle_root[0] ^= 0x01;
   CHECK(verify_sparse(t, prev).has_value());

   // wrong chain linkage: the block is internally sound but does not extend
   // the expected head.
   digest32 other = prev;
   other[6] ^= 0x40;
   CHECK(verify_sparse(good, other).has_value());
}

TEST_CASE("tx id set flags replays, including within one batch") {
   tx_id_set seen;
   auto ids = std::vector<digest32>{leaf(1), leaf(2), leaf(1)};
   auto dup = seen.check_and_insert(ids);
   CHECK(dup == std::vector<std::uint32_t>{2}); // later occurrence flagged
   CHECK(seen.size() == 2);
   dup = seen.check_and_insert({leaf(2), leaf(3)});
   CHECK(dup == std::vector<std::uint32_t>{0});
   CHECK(seen.contains(leaf(3)));
}
