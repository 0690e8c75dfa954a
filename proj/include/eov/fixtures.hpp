#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <eov/model.hpp>
#include <eov/peer_core.hpp>
#include <eov/sparse_block.hpp>

// hand-built worked examples with every expectation derived on paper first:
// dependency edges, dispatch schedules, validity bitmaps, dirty-buffer and
// committed-state progressions, verdict traffic, snapshot contents. the
// golden tests and the `golden` CLI command replay these and compare.
namespace eov::fixtures {

using state_row = std::pair<state_key, std::pair<version, bytes>>;

// two blocks of six single-contract transactions whose conflicts exercise
// every local dependency kind: rw, wr, ww, phantom, and range-covered wr.
struct conflict_fixture {
   std::vector<std::pair<state_key, bytes>> genesis_states;
   std::vector<endorsement_policy> genesis_policies;
   std::vector<block> blocks; // [T1..T4], [T5, T6]

   struct edge {
      std::uint32_t from_block, from_tx, to_block, to_tx;
      std::uint8_t kinds;
   };
   std::vector<edge> edges;                        // with both blocks ingested
   std::vector<std::uint32_t> dispatch_order;      // flat tx numbers 1..6
   std::vector<std::vector<tx_validity>> bitmaps;  // per block
   std::vector<state_row> state_after_b1;          // committed rows, sorted
   std::vector<state_row> dirty_after_b1;          // still-buffered rows
   std::vector<state_row> final_state;             // after both commits
};
conflict_fixture make_conflict_fixture();

// one block of three transactions across three single-contract sparse peers;
// T2 spans two scopes, T3 spans all three and dies by fate on P1.
struct distributed_fixture {
   std::vector<std::pair<state_key, bytes>> genesis_states;
   std::vector<endorsement_policy> genesis_policies;
   block b1;
   std::vector<contract_filter> filters; // P1{S1}, P2{S2}, P3{S3}

   std::vector<std::vector<tx_validity>> peer_bitmaps;
   std::vector<tx_validity> org_verdicts;
   std::vector<verdict_msg> expected_verdicts; // compared as a multiset
   std::vector<std::vector<state_row>> peer_states;
};
distributed_fixture make_distributed_fixture();

// four single-transaction blocks: three creates, then a delete plus an
// update, so an as-of-3 snapshot must pull two of its three values out of
// the block store rather than the live db.
struct snapshot_fixture {
   std::vector<std::pair<state_key, bytes>> genesis_states; // empty
   std::vector<endorsement_policy> genesis_policies;
   std::vector<block> blocks;

   std::vector<state_row> expected_at_3; // includes the policy row
   std::vector<state_row> final_live;
};
snapshot_fixture make_snapshot_fixture();

} // namespace eov::fixtures
