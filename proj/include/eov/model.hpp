#pragma once

#include <eov/bytes.hpp>
#include <eov/codec.hpp>
#include <eov/errors.hpp>

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace eov {

// keys live in per-contract namespaces. ordering is lexicographic on
// (contract, key) so contract-scoped iteration and range scans fall out of
// one ordered map.
struct state_key {
   std::string contract;
   bytes key;

   auto operator<=>(const state_key&) const = default;
};

inline state_key skey(std::string contract, std::string_view key) {
   return state_key{std::move(contract), to_bytes(key)};
}

inline std::string to_string(const state_key& k) {
   return k.contract + "/" + to_string(k.key);
}

// version stamp of a committed value: the block number and intra-block index
// of the transaction that wrote it. doubles as a transaction reference, since
// both name "the tx at position (block, index)".
struct version {
   std::uint64_t block = 0;
   std::uint32_t tx = 0;

   auto operator<=>(const version&) const = default;
};

using tx_ref = version;

std::string to_string(const version& v);

// reserved namespace: endorsement policies are ordinary state entries under
// contract "_policy", keyed by the governed contract's name. they version,
// conflict and snapshot like any other key.
inline constexpr std::string_view policy_contract = "_policy";

// the namespace a key counts against for filtering/snapshot purposes:
// policy entries ride with the contract they govern.
inline std::string effective_contract(const state_key& k) {
   return k.contract == policy_contract ? to_string(k.key) : k.contract;
}

struct read_entry {
   state_key key;
   std::optional<version> ver; // nullopt: key absent when read

   bool operator==(const read_entry&) const = default;
};

struct write_entry {
   state_key key;
   bytes value;
   bool is_delete = false;

   bool operator==(const write_entry&) const = default;
};

// a range query is re-checkable: it records the half-open window
// [start_key, end_key) and every (key, version) the scan observed.
// end_key nullopt means "to the end of the contract's keyspace".
struct range_query_info {
   std::string contract;
   bytes start_key;
   std::optional<bytes> end_key;
   std::vector<read_entry> observed;

   bool operator==(const range_query_info&) const = default;

   bool contains(const state_key& k) const;
};

// keyed digest over the response bytes; org names who produced it.
struct endorsement {
   std::string org;
   digest32 mac{};

   bool operator==(const endorsement&) const = default;
};

// value format of "_policy" entries: the orgs allowed to endorse and how
// many of them must have done so.
// invariants: 1 <= threshold <= |orgs|; orgs sorted and unique after encode.
struct endorsement_policy {
   std::string contract;
   std::vector<std::string> orgs;
   std::uint32_t threshold = 0;

   bool operator==(const endorsement_policy&) const = default;
};

bytes encode_policy(const endorsement_policy& p);
endorsement_policy decode_policy(const bytes& b);

struct transaction {
   digest32 id{};                       // sha256 of the canonical bytes
   std::vector<std::string> contracts;  // invoked contracts, ordered, unique
   std::vector<read_entry> reads;
   std::vector<write_entry> writes;
   std::vector<range_query_info> ranges;
   std::vector<endorsement> endorsements;
};

// contracts a transaction touches, derived from its read/write/range sets
// (policy reads count toward the governed contract). declaration order of
// first appearance: reads, then writes, then ranges.
std::vector<std::string> derive_contracts(const transaction& tx);

// body = everything the endorsers signed off on; endorsements then wrap it.
bytes encode_tx_body(const transaction& tx);

// response bytes: what an endorsement's keyed digest is computed over.
inline bytes response_bytes(const transaction& tx) { return encode_tx_body(tx); }

// canonical bytes = body || endorsements. the id is the digest of this.
bytes encode_tx(const transaction& tx);
transaction decode_tx(reader& r);
transaction decode_tx(const bytes& b);

digest32 compute_tx_id(const transaction& tx);

// per-transaction outcome, persisted next to the block.
enum class tx_validity : std::uint8_t {
   not_validated = 0,
   valid = 1,
   invalid_serializability = 2,
   invalid_endorsement = 3,
   invalid_duplicate = 4,
   deferred = 5,
};

std::string_view to_string(tx_validity v);
bool is_invalid(tx_validity v);

struct block {
   std::uint64_t number = 0;
   digest32 prev_hash{};
   digest32 merkle_root{}; // over the transaction ids, in order
   digest32 hash{};        // sha256(number || prev_hash || merkle_root)
   std::vector<transaction> txs;
};

// invariants of a sealed block:
//  - every tx.id equals compute_tx_id(tx)
//  - merkle_root covers exactly txs[0..n) ids in order
//  - hash binds (number, prev_hash, merkle_root)
block seal_block(std::uint64_t number, const digest32& prev_hash, std::vector<transaction> txs);

digest32 block_header_hash(std::uint64_t number, const digest32& prev_hash,
                           const digest32& merkle_root);

bytes encode_block(const block& b);
block decode_block(const bytes& b);

struct bad_block : std::runtime_error {
   explicit bad_block(const std::string& what) : std::runtime_error(what) {}
};

// header + tx-id checks; throws bad_block on the first violation.
void check_block(const block& b);

} // namespace eov
