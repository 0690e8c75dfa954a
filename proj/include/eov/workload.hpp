#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include <eov/model.hpp>
#include <eov/oracle.hpp>

namespace eov {

// every scenario knob, parsed from a flat key=value file (camelCase keys,
// '#' comments). members mirror the keys; check_config() normalizes and
// rejects out-of-range combinations with config_invalid.
struct scenario_config {
   std::uint64_t seed = 1;

   // topology
   std::size_t org_count = 1;         // orgCount
   std::size_t peers_per_org = 1;     // peersPerOrg
   std::size_t filters_per_peer = 0;  // filtersPerPeer; 0 = full peers
   std::vector<std::string> contracts = {"S1"};

   // stream shape
   std::size_t block_size = 10;       // blockSize
   std::string workload = "smallbank"; // smallbank | ycsb | mixed
   double zipf_s = 0.5;               // zipfS
   std::size_t account_count = 100;   // accountCount, per contract
   std::size_t value_size_bytes = 10; // valueSizeBytes
   double tx_rate = 0;                // txRate, txs/s fed to the orderer; 0 = saturate
   std::size_t block_count = 20;      // durationOrBlockCount
   std::size_t worker_count = 4;      // workerCount, validators per peer
   bool sparse_blocks_enabled = false; // sparseBlocksEnabled

   // op mix
   double cross_contract_rate = 0;     // crossContractMix, first component
   std::size_t cross_contract_fanout = 2; // crossContractMix, second component
   std::size_t endorse_staleness = 0;  // endorseStaleness, blocks behind tip
   double bad_endorse_rate = 0;        // badEndorseRate
   double range_rate = 0;              // rangeRate
   double delete_rate = 0;             // deleteRate
   double policy_update_rate = 0;      // policyUpdateRate
   double duplicate_rate = 0;          // duplicateRate

   // cost model
   double validate_cost_ms = 1.0;  // validateCostMs, per tx
   double commit_cost_ms = 2.0;    // commitCostMs, per block (virtual mode)
   double verdict_latency_ms = 0.5; // verdictLatencyMs, peer-to-peer
   double commit_delay_ms = 0;     // commitDelayMs, committer sleep (threaded mode)
   unsigned endorse_spin = 0;      // endorseSpin, digest rounds per signature check
   std::string protocol = "deferred"; // deferred | strawman
   std::string mode = "virtual";      // virtual | threaded
   bool fsync_each = false;           // fsyncEach
   std::vector<double> peer_speeds;   // peerSpeeds, per-peer multipliers; empty = all 1.0

   // scale-up scenario
   std::uint64_t join_at_block = 0;          // joinAtBlock; 0 = disabled
   std::vector<std::string> join_contracts;  // joinPeerContracts
};

scenario_config parse_config_text(const std::string& text);
scenario_config load_config_file(const std::string& path);
void check_config(scenario_config& cfg); // throws config_invalid

// zipf(s) over {0..n-1} by inverse-cdf table lookup.
class zipf_sampler {
 public:
   zipf_sampler() = default;
   zipf_sampler(std::size_t n, double s);
   std::size_t operator()(std::mt19937_64& rng) const;

 private:
   std::vector<double> cdf_;
};

// deterministic transaction-stream generator. it simulates the endorsement
// phase: reads (and range scans) are executed against a configurable-lag
// historical view of committed state, writes are proposed, policy reads for
// every invoked contract are stamped in, and the required orgs sign the
// response bytes. an internal reference validator advances block by block so
// later endorsements see the true effects of earlier blocks.
class workload_gen {
 public:
   explicit workload_gen(const scenario_config& cfg);

   const std::vector<std::pair<state_key, bytes>>& genesis_states() const {
      return genesis_states_;
   }
   const std::vector<endorsement_policy>& genesis_policies() const { return genesis_policies_; }

   // the next block's transactions, in order.
   std::vector<transaction> next_block();

   std::uint64_t blocks_generated() const { return next_block_ - 1; }
   const serial_oracle& truth() const { return truth_; }

 private:
   transaction make_tx(const state_view& view);
   void gen_smallbank_op(transaction& tx, const std::string& contract, const state_view& view);
   void gen_ycsb_op(transaction& tx, const std::string& contract, const state_view& view);
   void add_range(transaction& tx, const std::string& contract, const state_view& view,
                  const std::string& prefix);
   void read_key(transaction& tx, const state_view& view, const state_key& k);
   void write_key(transaction& tx, const state_key& k);
   bytes make_value();
   double unit();
   std::size_t pick(std::size_t n);

   scenario_config cfg_;
   std::mt19937_64 rng_;
   std::vector<std::pair<state_key, bytes>> genesis_states_;
   std::vector<endorsement_policy> genesis_policies_;
   serial_oracle truth_;
   std::deque<state_view> history_; // trailing block-end views, oldest first
   std::vector<transaction> pool_;  // emitted txs; duplicate replays draw from here
   std::uint64_t next_block_ = 1;
   std::uint64_t value_ctr_ = 0;
   zipf_sampler zipf_;
};

// account key helpers, shared with tests: zero-padded so lexicographic order
// matches numeric order inside one prefix.
std::string account_key(const std::string& prefix, std::size_t n);

} // namespace eov
