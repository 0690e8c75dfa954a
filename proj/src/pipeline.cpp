#include <eov/pipeline.hpp>

#include <algorithm>
#include <chrono>

#include <eov/errors.hpp>

namespace eov {

pipelined_peer::pipelined_peer(peer_core& peer, pipeline_config cfg)
    : peer_(peer), cfg_(cfg) {
   if (cfg_.workers < 1 || cfg_.queue_capacity < 1)
      throw config_invalid("pipeline needs at least one worker and queue slot");
}

pipelined_peer::~pipelined_peer() {
   if (started_ && !finished_) {
      {
         std::lock_guard lk(mu_);
         closed_ = true;
         aborting_ = true;
      }
      ingress_cv_.notify_all();
      peer_.results().shutdown(); // unblocks a waiting committer
      work_cv_.notify_all();
      for (auto& t : threads_)
         if (t.joinable())
            t.join();
   }
}

double pipelined_peer::now_ms() const {
   return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_)
       .count();
}

void pipelined_peer::start() {
   if (started_)
      return;
   started_ = true;
   t0_ = std::chrono::steady_clock::now();
   threads_.emplace_back([this] { ingress_main(); });
   for (std::size_t i = 0; i < cfg_.workers; ++i)
      threads_.emplace_back([this] { worker_main(); });
   threads_.emplace_back([this] { committer_main(); });
}

void pipelined_peer::push(std::variant<block, sparse_block> item) {
   std::unique_lock lk(mu_);
   ingress_cv_.wait(lk, [&] { return queue_.size() < cfg_.queue_capacity || closed_; });
   if (closed_)
      throw pipeline_shutdown("submit after close");
   queue_.push_back(std::move(item));
   ingress_cv_.notify_all();
   work_cv_.notify_all();
}

void pipelined_peer::submit(block b) { push(std::move(b)); }
void pipelined_peer::submit(sparse_block sb) { push(std::move(sb)); }

void pipelined_peer::finish() {
   if (!started_ || finished_)
      return;
   {
      std::lock_guard lk(mu_);
      closed_ = true;
   }
   ingress_cv_.notify_all();
   work_cv_.notify_all();
   for (auto& t : threads_)
      t.join();
   threads_.clear();
   finished_ = true;

   metrics_.wall_ms = now_ms();
   for (auto& [n, s] : spans_) {
      metrics_.spans.push_back(s);
      if (s.val_start >= 0)
         metrics_.validate_ms_total += s.val_end - s.val_start;
      if (s.commit_start >= 0)
         metrics_.commit_ms_total += s.commit_end - s.commit_start;
   }
   // overlap: block i's commit running while any later block validates.
   for (const auto& a : metrics_.spans) {
      if (a.commit_start < 0)
         continue;
      double got = 0;
      for (const auto& b : metrics_.spans) {
         if (b.number <= a.number || b.val_start < 0)
            continue;
         const double lo = std::max(a.commit_start, b.val_start);
         const double hi = std::min(a.commit_end, b.val_end);
         if (hi > lo)
            got += hi - lo;
      }
      if (got > 0) {
         ++metrics_.overlap_events;
         metrics_.overlapped_ms += got;
      }
   }
}

void pipelined_peer::mark_validation(std::uint64_t block, double t0, double t1) {
   std::lock_guard lk(mu_);
   auto& s = spans_[block];
   s.number = block;
   if (s.val_start < 0 || t0 < s.val_start)
      s.val_start = t0;
   if (t1 > s.val_end)
      s.val_end = t1;
}

void pipelined_peer::ingress_main() {
   for (;;) {
      std::variant<block, sparse_block> b;
      {
         std::unique_lock lk(mu_);
         ingress_cv_.wait(lk, [&] { return !queue_.empty() || closed_; });
         if (queue_.empty()) {
            ingress_done_ = true;
            ++gen_;
            work_cv_.notify_all();
            return;
         }
         b = std::move(queue_.front());
         queue_.pop_front();
         ingress_cv_.notify_all();
      }
      if (!cfg_.pipelined) {
         // serial baseline: the previous block must be fully committed —
         // modeled commit latency included — before this one becomes
         // visible to the workers.
         std::unique_lock lk(mu_);
         work_cv_.wait(lk, [&] {
            return aborting_ || (!committing_ && !peer_.front_block().has_value() &&
                                 peer_.waiting_count() == 0);
         });
         if (aborting_)
            return;
      }
      std::visit([&](const auto& blk) { peer_.ingest(blk); }, b);
      {
         std::lock_guard lk(mu_);
         ++gen_;
      }
      work_cv_.notify_all();
   }
}

void pipelined_peer::worker_main() {
   for (;;) {
      std::optional<dispatch> d = peer_.next_transaction();
      if (!d) {
         std::unique_lock lk(mu_);
         if (aborting_ || (ingress_done_ && queue_.empty() && peer_.waiting_count() == 0))
            return;
         const std::uint64_t seen = gen_;
         work_cv_.wait_for(lk, std::chrono::milliseconds(50),
                           [&] { return gen_ != seen || (ingress_done_ && queue_.empty()); });
         continue;
      }
      const double t0 = now_ms();
      const bool endorsed = peer_.check_endorsements_for(d->tx);
      peer_.finish_validation(d->ref, endorsed);
      mark_validation(d->ref.block, t0, now_ms());
      {
         std::lock_guard lk(mu_);
         ++gen_;
      }
      work_cv_.notify_all();
   }
}

void pipelined_peer::committer_main() {
   for (;;) {
      std::optional<peer_core::front_info> fi;
      {
         std::unique_lock lk(mu_);
         work_cv_.wait(lk, [&] {
            if (aborting_)
               return true;
            fi = peer_.front_block();
            return fi.has_value() || (ingress_done_ && queue_.empty());
         });
         if (aborting_ || !fi)
            return;
         committing_ = true;
      }
      std::vector<tx_validity> popped;
      popped.reserve(fi->admitted.size());
      try {
         for (std::uint32_t idx : fi->admitted)
            popped.push_back(peer_.results().pop(tx_ref{fi->number, idx}, false));
      } catch (const pipeline_shutdown&) {
         std::lock_guard lk(mu_);
         committing_ = false;
         return; // torn down mid-drain by the destructor
      }
      const double c0 = now_ms();
      const commit_stats st = peer_.commit_front(popped);
      if (cfg_.commit_delay_ms > 0)
         std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(cfg_.commit_delay_ms));
      const double c1 = now_ms();
      {
         std::lock_guard lk(mu_);
         auto& s = spans_[st.number];
         s.number = st.number;
         s.commit_start = c0;
         s.commit_end = c1;
         metrics_.blocks += 1;
         metrics_.leaves += st.leaves;
         metrics_.valid += st.valid;
         committing_ = false;
         ++gen_;
      }
      work_cv_.notify_all();
   }
}

} // namespace eov
