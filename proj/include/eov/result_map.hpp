#pragma once

#include <eov/errors.hpp>
#include <eov/model.hpp>

#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>

namespace eov {

// validity results flowing from validators to the committer. an entry is
// either final, or pending: a pending entry carries the verdict the committer
// would take *right now* (deferred) and may still be upgraded in place while
// it sits here. popping consumes the entry.
class result_map {
 public:
   // final verdict; replaces a pending entry if one is waiting.
   void post_final(tx_ref ref, tx_validity v) {
      {
         std::lock_guard lk(mu_);
         m_[ref] = entry{v, true};
      }
      cv_.notify_all();
   }

   // provisional verdict. never downgrades an existing entry.
   void post_pending(tx_ref ref, tx_validity v) {
      {
         std::lock_guard lk(mu_);
         m_.emplace(ref, entry{v, false});
      }
      cv_.notify_all();
   }

   // pending -> final. false when the entry is gone (already popped) or
   // already final — the caller then owes the verdict to the committed block.
   bool upgrade(tx_ref ref, tx_validity v) {
      {
         std::lock_guard lk(mu_);
         auto it = m_.find(ref);
         if (it == m_.end() || it->second.final)
            return false;
         it->second = entry{v, true};
      }
      cv_.notify_all();
      return true;
   }

   bool contains(tx_ref ref) const {
      std::lock_guard lk(mu_);
      return m_.count(ref) != 0;
   }

   bool ready(tx_ref ref, bool need_final) const {
      std::lock_guard lk(mu_);
      auto it = m_.find(ref);
      return it != m_.end() && (!need_final || it->second.final);
   }

   std::optional<tx_validity> peek(tx_ref ref) const {
      std::lock_guard lk(mu_);
      auto it = m_.find(ref);
      if (it == m_.end())
         return std::nullopt;
      return it->second.v;
   }

   // blocks until the entry exists (and, when wait_final, is final), then
   // consumes and returns it. throws pipeline_shutdown if torn down first.
   tx_validity pop(tx_ref ref, bool wait_final) {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [&] {
         if (down_)
            return true;
         auto it = m_.find(ref);
         return it != m_.end() && (!wait_final || it->second.final);
      });
      auto it = m_.find(ref);
      if (it == m_.end() || (wait_final && !it->second.final))
         throw pipeline_shutdown("result map torn down while waiting for " + to_string(ref));
      tx_validity v = it->second.v;
      m_.erase(it);
      return v;
   }

   void shutdown() {
      {
         std::lock_guard lk(mu_);
         down_ = true;
      }
      cv_.notify_all();
   }

   std::size_t size() const {
      std::lock_guard lk(mu_);
      return m_.size();
   }

 private:
   struct entry {
      tx_validity v = tx_validity::not_validated;
      bool final = false;
   };

   mutable std::mutex mu_;
   std::condition_variable cv_;
   std::map<tx_ref, entry> m_;
   bool down_ = false;
};

} // namespace eov
