#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <vector>

#include <eov/peer_core.hpp>
#include <eov/pipeline.hpp>
#include <eov/workload.hpp>

namespace eov {

// commit-path throughput ceiling: a block of |B| transactions costs V ms of
// validation plus C ms of commit, so a committer can never clear more than
// |B|·1000/(V+C) transactions per second.
inline std::uint64_t theoretical_max_tps_int(std::uint64_t block_size, std::uint64_t v_ms,
                                             std::uint64_t c_ms) {
   return block_size * 1000 / (v_ms + c_ms);
}
inline double theoretical_max_tps(double block_size, double v_ms, double c_ms) {
   return block_size * 1000.0 / (v_ms + c_ms);
}

// deterministic discrete-event scheduler: events fire ordered by time, ties
// broken by insertion order. all simulated concurrency is expressed as
// events, so a fixed seed reproduces the exact interleaving.
class des_scheduler {
 public:
   void schedule(double delay_ms, std::function<void()> fn) {
      q_.push(ev{now_ + delay_ms, seq_++, std::move(fn)});
   }
   void run() {
      while (!q_.empty()) {
         ev e = std::move(const_cast<ev&>(q_.top()));
         q_.pop();
         now_ = e.at;
         e.fn();
      }
   }
   double now() const { return now_; }

 private:
   struct ev {
      double at;
      std::uint64_t seq;
      std::function<void()> fn;
   };
   struct later {
      bool operator()(const ev& a, const ev& b) const {
         if (a.at != b.at)
            return a.at > b.at;
         return a.seq > b.seq;
      }
   };
   std::priority_queue<ev, std::vector<ev>, later> q_;
   double now_ = 0;
   std::uint64_t seq_ = 0;
};

struct peer_report {
   std::string name;
   std::vector<std::string> hosted; // empty = full peer
   peer_counters counters;
   digest32 state_digest{};
   std::uint64_t committed_height = 0;
   double stall_ms_total = 0;      // idle committer blocked only on remote finality
   double deferral_rate = 0;       // deferred pops / admitted pops
   std::uint64_t wire_bytes = 0;   // block bytes this peer received
   std::uint64_t store_bytes = 0;  // appended to the block store
   std::uint64_t db_bytes = 0;     // live state db footprint
};

struct join_report {
   bool enabled = false;
   std::uint64_t joined_at = 0;
   std::uint64_t manifest_bytes = 0; // snapshot transfer: manifests + known ids + header
   std::uint64_t replay_bytes = 0;   // what full block replay would have shipped
   double join_ms = 0;               // wall time: seed from manifests + catch-up drain
   bool bitmaps_match = false;       // joiner vs always-present peer, post-join blocks
   bool state_matches = false;
};

struct run_report {
   std::uint64_t blocks = 0;
   std::uint64_t leaves = 0;
   double virtual_ms = 0; // simulated clock at quiescence (virtual mode)
   double wall_ms = 0;    // real elapsed time (threaded mode)

   std::vector<peer_report> peers;

   // org-level verdict tallies, assembled from the hosting peers' bitmaps.
   std::uint64_t org_committed = 0;
   std::uint64_t org_valid = 0;
   std::uint64_t org_invalid = 0;
   std::uint64_t org_duplicate = 0;
   std::uint64_t org_deferred = 0; // commits that popped a still-pending result
   double stall_ms_total = 0;      // summed idle-committer stall across peers
   double deferral_rate = 0;       // org-wide deferred pops / admitted pops

   digest32 oracle_digest{};
   digest32 org_digest{};          // union of the peers' partitions
   bool full_bitmaps_match = true; // every full peer's bitmaps equal the oracle's
   bool org_bitmap_matches = true; // hosting peers' verdict classes match the oracle
   bool org_state_matches = true;  // partition union equals the oracle state
   bool all_resolved = true;       // everything committed, no deferral outstanding

   std::uint64_t verdict_messages = 0; // delivered peer-to-peer verdicts
   std::uint64_t verdict_bytes = 0;
   std::uint64_t full_dissemination_bytes = 0;   // cost if every peer took full blocks
   std::uint64_t sparse_dissemination_bytes = 0; // actual filtered-wire bytes

   join_report join;
   pipeline_metrics threaded; // threaded mode only

   // peer,block,time,committedTps,validTps,queueLen,V_ms,C_ms,theoreticalMaxTps
   std::string csv;
   std::string summary; // human-readable run report
};

// run one scenario end to end: generate the stream, order it, drive every
// peer to quiescence, then audit the outcome against the reference
// validator. cfg.mode picks the engine: "virtual" is the deterministic
// discrete-event simulation, "threaded" drives one full peer with real
// threads. set store_dir to put block stores on disk.
run_report run_scenario(const scenario_config& cfg, const std::string& store_dir = "");

// comparison runs for the bench command.
struct bench_report {
   std::string baseline;
   double baseline_tps = 0;
   double candidate_tps = 0;
   double speedup = 0;            // candidate over baseline
   double peer_work_fraction = 0; // sparse: max per-peer share of the full peer's work
   std::uint64_t baseline_overlap_events = 0;  // serial baseline: must stay 0
   std::uint64_t candidate_overlap_events = 0; // pipelined runs: commit/validate overlap
   bool checks_ok = true;         // state/bitmap audits of every run involved
   std::string text;
};
bench_report run_bench(const scenario_config& cfg, const std::string& baseline,
                       const std::string& store_dir = "");

void write_run_outputs(const run_report& r, const std::string& out_dir);

} // namespace eov
