#include <eov/orderer.hpp>

#include <stdexcept>

namespace eov {

orderer::orderer(std::size_t batch_size) : batch_size_(batch_size) {
   if (batch_size_ == 0)
      throw std::invalid_argument("orderer: batch size must be positive");
}

void orderer::subscribe_full(full_sink s) { full_subs_.push_back(std::move(s)); }

void orderer::subscribe_sparse(contract_filter f, sparse_sink s) {
   sparse_subs_.emplace_back(std::move(f), std::move(s));
}

void orderer::submit(transaction tx) {
   pending_.push_back(std::move(tx));
   if (pending_.size() >= batch_size_)
      seal_and_deliver();
}

void orderer::flush() {
   if (!pending_.empty())
      seal_and_deliver();
}

void orderer::seal_and_deliver() {
   block b = seal_block(next_number_, prev_hash_, std::move(pending_));
   pending_.clear();
   prev_hash_ = b.hash;
   ++next_number_;
   ++blocks_sealed_;
   txs_sealed_ += b.txs.size();

   if (!full_subs_.empty()) {
      const std::uint64_t wire = encode_block(b).size();
      for (auto& sink : full_subs_) {
         full_bytes_ += wire;
         sink(b);
      }
   }
   for (auto& [filter, sink] : sparse_subs_) {
      sparse_block sb = make_sparse(b, filter);
      sparse_bytes_ += encode_sparse(sb).size();
      sink(sb);
   }
}

} // namespace eov
