#include <eov/sparse_block.hpp>

#include <eov/merkle.hpp>

namespace eov {

sparse_block make_sparse(const block& b, const contract_filter& filter) {
   sparse_block sb;
   sb.number = b.number;
   sb.prev_hash = b.prev_hash;
   sb.merkle_root = b.merkle_root;
   sb.hash = b.hash;
   sb.applied_filter = filter;
   sb.all_tx_ids.reserve(b.txs.size());
   for (std::uint32_t i = 0; i < b.txs.size(); ++i) {
      sb.all_tx_ids.push_back(b.txs[i].id);
      if (filter.admits(b.txs[i]))
         sb.included.emplace_back(i, b.txs[i]);
   }
   return sb;
}

std::optional<std::string> verify_sparse(const sparse_block& sb, const digest32& expected_prev) {
   if (sb.prev_hash != expected_prev)
      return "prev hash breaks the chain";
   if (sb.all_tx_ids.empty())
      return "empty leaf vector";
   if (merkle_root(sb.all_tx_ids) != sb.merkle_root)
      return "merkle root does not cover the leaf vector";
   if (block_header_hash(sb.number, sb.prev_hash, sb.merkle_root) != sb.hash)
      return "block hash does not bind the header";
   std::uint32_t prev_index = 0;
   bool first = true;
   for (const auto& [i, tx] : sb.included) {
      if (i >= sb.all_tx_ids.size())
         return "included index beyond leaf vector";
      if (!first && i <= prev_index)
         return "included indices out of order";
      first = false;
      prev_index = i;
      if (compute_tx_id(tx) != sb.all_tx_ids[i])
         return "included transaction does not hash to its leaf";
      if (!sb.applied_filter.admits(tx))
         return "included transaction outside the filter";
   }
   return std::nullopt;
}

bytes encode_sparse(const sparse_block& sb) {
   writer w;
   w.u64(sb.number);
   w.digest(sb.prev_hash);
   w.digest(sb.merkle_root);
   w.digest(sb.hash);
   w.str(sb.applied_filter.peer);
   w.u32(static_cast<std::uint32_t>(sb.applied_filter.contracts.size()));
   for (const auto& c : sb.applied_filter.contracts)
      w.str(c);
   w.u32(static_cast<std::uint32_t>(sb.all_tx_ids.size()));
   for (const auto& id : sb.all_tx_ids)
      w.digest(id);
   w.u32(static_cast<std::uint32_t>(sb.included.size()));
   for (const auto& [i, tx] : sb.included) {
      w.u32(i);
      w.bstr(encode_tx(tx));
   }
   return w.take();
}

sparse_block decode_sparse(const bytes& buf) {
   reader r(buf);
   sparse_block sb;
   sb.number = r.u64();
   sb.prev_hash = r.digest();
   sb.merkle_root = r.digest();
   sb.hash = r.digest();
   sb.applied_filter.peer = r.str();
   std::uint32_t nf = r.u32();
   for (std::uint32_t i = 0; i < nf; ++i)
      sb.applied_filter.contracts.insert(r.str());
   std::uint32_t nl = r.u32();
   sb.all_tx_ids.reserve(nl);
   for (std::uint32_t i = 0; i < nl; ++i)
      sb.all_tx_ids.push_back(r.digest());
   std::uint32_t ni = r.u32();
   sb.included.reserve(ni);
   for (std::uint32_t i = 0; i < ni; ++i) {
      std::uint32_t idx = r.u32();
      sb.included.emplace_back(idx, decode_tx(r.bstr()));
   }
   if (!r.done())
      throw codec_error("trailing bytes after sparse block");
   return sb;
}

std::vector<std::uint32_t> tx_id_set::check_and_insert(const std::vector<digest32>& ids) {
   std::vector<std::uint32_t> dups;
   for (std::uint32_t i = 0; i < ids.size(); ++i) {
      if (!ids_.insert(ids[i]).second)
         dups.push_back(i);
   }
   return dups;
}

} // namespace eov
