#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <thread>
#include <variant>
#include <vector>

#include <eov/peer_core.hpp>

namespace eov {

struct pipeline_config {
   std::size_t workers = 4;
   bool pipelined = true;          // false: next block enters only after the previous commits
   double commit_delay_ms = 0;     // extra committer latency per block (models commit io)
   std::size_t queue_capacity = 8; // bounded ingress channel
};

// per-block validate/commit spans, milliseconds since start(). a block with
// no locally validated transaction has no validation span.
struct block_span {
   std::uint64_t number = 0;
   double val_start = -1, val_end = -1;
   double commit_start = -1, commit_end = -1;
};

struct pipeline_metrics {
   std::uint64_t blocks = 0;
   std::uint64_t leaves = 0;
   std::uint64_t valid = 0;
   double wall_ms = 0;
   double validate_ms_total = 0;
   double commit_ms_total = 0;
   // commits of block i that ran concurrently with validation of a block > i.
   std::uint64_t overlap_events = 0;
   double overlapped_ms = 0;
   std::vector<block_span> spans;
};

// the threaded shell around one peer: a bounded ingress channel, a worker
// pool pulling dispatchable transactions, and a committer pushing finished
// blocks to disk — all concurrent. in serial mode the ingress gate holds the
// next block back until the previous one is fully committed, which is the
// no-overlap baseline.
class pipelined_peer {
 public:
   pipelined_peer(peer_core& peer, pipeline_config cfg);
   ~pipelined_peer();

   void start();
   void submit(block b);        // blocks while the ingress queue is full
   void submit(sparse_block sb); // filtered-wire variant of the same channel
   void finish();               // close the stream, drain everything, join threads

   const pipeline_metrics& metrics() const { return metrics_; } // valid after finish()

 private:
   void ingress_main();
   void worker_main();
   void committer_main();
   double now_ms() const;
   void mark_validation(std::uint64_t block, double t0, double t1);

   peer_core& peer_;
   pipeline_config cfg_;

   std::mutex mu_;
   std::condition_variable ingress_cv_; // submit <-> ingress handshake
   std::condition_variable work_cv_;    // wakes workers and the committer
   std::deque<std::variant<block, sparse_block>> queue_;
   void push(std::variant<block, sparse_block> item);
   bool closed_ = false;        // no more submissions
   bool aborting_ = false;      // destructor teardown: bail out wherever we are
   bool ingress_done_ = false;  // queue drained and ingested
   bool committing_ = false;    // commit (incl. modeled latency) in flight
   std::uint64_t gen_ = 0;      // bumps on every state-changing event
   std::map<std::uint64_t, block_span> spans_;
   std::chrono::steady_clock::time_point t0_;

   std::vector<std::thread> threads_;
   bool started_ = false, finished_ = false;
   pipeline_metrics metrics_;
};

} // namespace eov
