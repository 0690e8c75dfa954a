#include <eov/model.hpp>

#include <eov/hash.hpp>
#include <eov/merkle.hpp>

#include <algorithm>

namespace eov {

std::string to_string(const version& v) {
   return "(" + std::to_string(v.block) + "," + std::to_string(v.tx) + ")";
}

bool range_query_info::contains(const state_key& k) const {
   if (k.contract != contract)
      return false;
   if (k.key < start_key)
      return false;
   return !end_key || k.key < *end_key;
}

bytes encode_policy(const endorsement_policy& p) {
   std::vector<std::string> orgs = p.orgs;
   std::sort(orgs.begin(), orgs.end());
   orgs.erase(std::unique(orgs.begin(), orgs.end()), orgs.end());
   writer w;
   w.str(p.contract);
   w.u32(static_cast<std::uint32_t>(orgs.size()));
   for (const auto& o : orgs)
      w.str(o);
   w.u32(p.threshold);
   return w.take();
}

endorsement_policy decode_policy(const bytes& b) {
   reader r(b);
   endorsement_policy p;
   p.contract = r.str();
   std::uint32_t n = r.u32();
   p.orgs.reserve(n);
   for (std::uint32_t i = 0; i < n; ++i)
      p.orgs.push_back(r.str());
   p.threshold = r.u32();
   if (!r.done())
      throw codec_error("trailing bytes after policy");
   return p;
}

std::vector<std::string> derive_contracts(const transaction& tx) {
   std::vector<std::string> out;
   auto add = [&](const std::string& c) {
      if (std::find(out.begin(), out.end(), c) == out.end())
         out.push_back(c);
   };
   for (const auto& re : tx.reads)
      add(effective_contract(re.key));
   for (const auto& we : tx.writes)
      add(effective_contract(we.key));
   for (const auto& rq : tx.ranges)
      add(rq.contract);
   return out;
}

namespace {

void put_key(writer& w, const state_key& k) {
   w.str(k.contract);
   w.bstr(k.key);
}

state_key get_key(reader& r) {
   state_key k;
   k.contract = r.str();
   k.key = r.bstr();
   return k;
}

void put_read(writer& w, const read_entry& re) {
   put_key(w, re.key);
   w.u8(re.ver ? 1 : 0);
   if (re.ver) {
      w.u64(re.ver->block);
      w.u32(re.ver->tx);
   }
}

read_entry get_read(reader& r) {
   read_entry re;
   re.key = get_key(r);
   if (r.u8()) {
      version v;
      v.block = r.u64();
      v.tx = r.u32();
      re.ver = v;
   }
   return re;
}

} // namespace

bytes encode_tx_body(const transaction& tx) {
   writer w;
   w.u32(static_cast<std::uint32_t>(tx.contracts.size()));
   for (const auto& c : tx.contracts)
      w.str(c);
   w.u32(static_cast<std::uint32_t>(tx.reads.size()));
   for (const auto& re : tx.reads)
      put_read(w, re);
   w.u32(static_cast<std::uint32_t>(tx.writes.size()));
   for (const auto& we : tx.writes) {
      put_key(w, we.key);
      w.u8(we.is_delete ? 1 : 0);
      w.bstr(we.value);
   }
   w.u32(static_cast<std::uint32_t>(tx.ranges.size()));
   for (const auto& rq : tx.ranges) {
      w.str(rq.contract);
      w.bstr(rq.start_key);
      w.u8(rq.end_key ? 1 : 0);
      if (rq.end_key)
         w.bstr(*rq.end_key);
      w.u32(static_cast<std::uint32_t>(rq.observed.size()));
      for (const auto& re : rq.observed)
         put_read(w, re);
   }
   return w.take();
}

bytes encode_tx(const transaction& tx) {
   writer w;
   bytes body = encode_tx_body(tx);
   w.raw(body.data(), body.size());
   w.u32(static_cast<std::uint32_t>(tx.endorsements.size()));
   for (const auto& e : tx.endorsements) {
      w.str(e.org);
      w.digest(e.mac);
   }
   return w.take();
}

transaction decode_tx(reader& r) {
   transaction tx;
   std::uint32_t nc = r.u32();
   tx.contracts.reserve(nc);
   for (std::uint32_t i = 0; i < nc; ++i)
      tx.contracts.push_back(r.str());
   std::uint32_t nr = r.u32();
   tx.reads.reserve(nr);
   for (std::uint32_t i = 0; i < nr; ++i)
      tx.reads.push_back(get_read(r));
   std::uint32_t nw = r.u32();
   tx.writes.reserve(nw);
   for (std::uint32_t i = 0; i < nw; ++i) {
      write_entry we;
      we.key = get_key(r);
      we.is_delete = r.u8() != 0;
      we.value = r.bstr();
      tx.writes.push_back(std::move(we));
   }
   std::uint32_t nq = r.u32();
   tx.ranges.reserve(nq);
   for (std::uint32_t i = 0; i < nq; ++i) {
      range_query_info rq;
      rq.contract = r.str();
      rq.start_key = r.bstr();
      if (r.u8())
         rq.end_key = r.bstr();
      std::uint32_t no = r.u32();
      rq.observed.reserve(no);
      for (std::uint32_t j = 0; j < no; ++j)
         rq.observed.push_back(get_read(r));
      tx.ranges.push_back(std::move(rq));
   }
   std::uint32_t ne = r.u32();
   tx.endorsements.reserve(ne);
   for (std::uint32_t i = 0; i < ne; ++i) {
      endorsement e;
      e.org = r.str();
      e.mac = r.digest();
      tx.endorsements.push_back(std::move(e));
   }
   tx.id = compute_tx_id(tx);
   return tx;
}

transaction decode_tx(const bytes& b) {
   reader r(b);
   transaction tx = decode_tx(r);
   if (!r.done())
      throw codec_error("trailing bytes after transaction");
   return tx;
}

digest32 compute_tx_id(const transaction& tx) {
   return sha256(encode_tx(tx));
}

std::string_view to_string(tx_validity v) {
   switch (v) {
      case tx_validity::not_validated: return "not_validated";
      case tx_validity::valid: return "valid";
      case tx_validity::invalid_serializability: return "invalid_serializability";
      case tx_validity::invalid_endorsement: return "invalid_endorsement";
      case tx_validity::invalid_duplicate: return "invalid_duplicate";
      case tx_validity::deferred: return "deferred";
   }
   return "?";
}

bool is_invalid(tx_validity v) {
   return v == tx_validity::invalid_serializability || v == tx_validity::invalid_endorsement ||
          v == tx_validity::invalid_duplicate;
}

digest32 block_header_hash(std::uint64_t number, const digest32& prev_hash,
                           const digest32& merkle_root) {
   writer w;
   w.u64(number);
   w.digest(prev_hash);
   w.digest(merkle_root);
   return sha256(w.out());
}

block seal_block(std::uint64_t number, const digest32& prev_hash, std::vector<transaction> txs) {
   if (txs.empty())
      throw empty_block("blocks must carry at least one transaction");
   block b;
   b.number = number;
   b.prev_hash = prev_hash;
   b.txs = std::move(txs);
   std::vector<digest32> leaves;
   leaves.reserve(b.txs.size());
   for (auto& tx : b.txs) {
      tx.id = compute_tx_id(tx);
      leaves.push_back(tx.id);
   }
   b.merkle_root = merkle_root(leaves);
   b.hash = block_header_hash(b.number, b.prev_hash, b.merkle_root);
   return b;
}

bytes encode_block(const block& b) {
   writer w;
   w.u64(b.number);
   w.digest(b.prev_hash);
   w.digest(b.merkle_root);
   w.digest(b.hash);
   w.u32(static_cast<std::uint32_t>(b.txs.size()));
   for (const auto& tx : b.txs)
      w.bstr(encode_tx(tx));
   return w.take();
}

block decode_block(const bytes& buf) {
   reader r(buf);
   block b;
   b.number = r.u64();
   b.prev_hash = r.digest();
   b.merkle_root = r.digest();
   b.hash = r.digest();
   std::uint32_t n = r.u32();
   b.txs.reserve(n);
   for (std::uint32_t i = 0; i < n; ++i)
      b.txs.push_back(decode_tx(r.bstr()));
   if (!r.done())
      throw codec_error("trailing bytes after block");
   return b;
}

void check_block(const block& b) {
   std::vector<digest32> leaves;
   leaves.reserve(b.txs.size());
   for (const auto& tx : b.txs) {
      if (tx.id != compute_tx_id(tx))
         throw bad_block("transaction id does not match its content");
      leaves.push_back(tx.id);
   }
   if (b.merkle_root != merkle_root(leaves))
      throw bad_block("merkle root does not cover the transactions");
   if (b.hash != block_header_hash(b.number, b.prev_hash, b.merkle_root))
      throw bad_block("block hash does not bind the header");
}

} // namespace eov
