#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <eov/model.hpp>
#include <eov/sparse_block.hpp>

namespace eov {

// assembles the total-order stream: collects endorsed transactions into
// fixed-size batches, seals each batch into the hash chain, and hands every
// subscriber its view of the block — the full body, or a filtered view cut
// to the subscriber's contract filter. also keeps the wire-byte tally for
// each dissemination style so scenarios can compare them.
//
// invariants:
//  - block numbers start at 1 and are contiguous; block 1's prev-hash is the
//    zero digest.
//  - every subscriber sees every sealed block exactly once, in order.
class orderer {
 public:
   using full_sink = std::function<void(const block&)>;
   using sparse_sink = std::function<void(const sparse_block&)>;

   explicit orderer(std::size_t batch_size);

   void subscribe_full(full_sink s);
   void subscribe_sparse(contract_filter f, sparse_sink s);

   // queue one endorsed transaction; seals and delivers a block once the
   // batch fills.
   void submit(transaction tx);

   // seal whatever is pending as a short final block. no-op when empty.
   void flush();

   std::uint64_t blocks_sealed() const { return blocks_sealed_; }
   std::uint64_t txs_sealed() const { return txs_sealed_; }

   // bytes that would cross the wire for each style, summed over deliveries.
   std::uint64_t full_bytes_sent() const { return full_bytes_; }
   std::uint64_t sparse_bytes_sent() const { return sparse_bytes_; }

   const digest32& head_hash() const { return prev_hash_; }
   std::uint64_t next_number() const { return next_number_; }

 private:
   void seal_and_deliver();

   std::size_t batch_size_;
   std::vector<transaction> pending_;
   std::uint64_t next_number_ = 1;
   digest32 prev_hash_{}; // zero digest before the first block
   std::uint64_t blocks_sealed_ = 0;
   std::uint64_t txs_sealed_ = 0;
   std::uint64_t full_bytes_ = 0;
   std::uint64_t sparse_bytes_ = 0;
   std::vector<full_sink> full_subs_;
   std::vector<std::pair<contract_filter, sparse_sink>> sparse_subs_;
};

} // namespace eov
