#include <eov/state_engine.hpp>

#include <eov/codec.hpp>
#include <eov/errors.hpp>
#include <eov/hash.hpp>

#include <algorithm>

#include <fcntl.h>
#include <unistd.h>

namespace eov {

// ---------------------------------------------------------------- state_db

std::optional<std::pair<version, bytes>> state_db::get(const state_key& k) const {
   auto it = m_.find(k);
   if (it == m_.end())
      return std::nullopt;
   return it->second;
}

void state_db::put(const state_key& k, version v, bytes value) {
   m_[k] = {v, std::move(value)};
}

void state_db::erase(const state_key& k) {
   m_.erase(k);
}

std::vector<std::tuple<state_key, version, bytes>> state_db::scan(
   const std::string& contract, const bytes& start, const std::optional<bytes>& end) const {
   std::vector<std::tuple<state_key, version, bytes>> out;
   auto it = m_.lower_bound(state_key{contract, start});
   for (; it != m_.end(); ++it) {
      const auto& k = it->first;
      if (k.contract != contract)
         break;
      if (end && !(k.key < *end))
         break;
      out.emplace_back(k, it->second.first, it->second.second);
   }
   return out;
}

std::size_t state_db::byte_size() const {
   std::size_t n = 0;
   for (const auto& [k, vv] : m_)
      n += k.contract.size() + k.key.size() + sizeof(version) + vv.second.size();
   return n;
}

digest32 state_view_digest(const state_view& m) {
   writer w;
   w.u64(m.size());
   for (const auto& [k, vv] : m) {
      w.str(k.contract);
      w.bstr(k.key);
      w.u64(vv.first.block);
      w.u32(vv.first.tx);
      w.bstr(vv.second);
   }
   return sha256(w.out());
}

digest32 state_db::digest() const { return state_view_digest(m_); }

std::string state_db::dump() const {
   std::string s;
   for (const auto& [k, vv] : m_) {
      s += to_string(k);
      s += " ";
      s += to_string(vv.first);
      s += " ";
      s += hex8(sha256(vv.second));
      s += "\n";
   }
   return s;
}

// ------------------------------------------------------ dirty_state_buffer

void dirty_state_buffer::apply(tx_ref ref, const write_entry& we) {
   state_key k{we.key.contract, we.key.key};
   m_[k].push_back(entry{ref, we.value, we.is_delete});
   by_block_[ref.block].insert(k);
}

const dirty_state_buffer::entry* dirty_state_buffer::latest(const state_key& k) const {
   auto it = m_.find(k);
   if (it == m_.end() || it->second.empty())
      return nullptr;
   return &it->second.back();
}

std::size_t dirty_state_buffer::entry_count() const {
   std::size_t n = 0;
   for (const auto& [k, list] : m_)
      n += list.size();
   return n;
}

std::string dirty_state_buffer::dump() const {
   std::string s;
   for (const auto& [k, list] : m_)
      for (const auto& e : list) {
         s += to_string(k);
         s += " ";
         s += to_string(e.ver);
         if (e.is_delete)
            s += " delete";
         s += "\n";
      }
   return s;
}

// --------------------------------------------------------------- block_store

namespace {
constexpr std::uint8_t rec_full = 1;
constexpr std::uint8_t rec_sparse = 2;
constexpr std::uint8_t rec_correction = 3;

bytes encode_validity(const std::vector<tx_validity>& v) {
   writer w;
   w.u32(static_cast<std::uint32_t>(v.size()));
   for (auto x : v)
      w.u8(static_cast<std::uint8_t>(x));
   return w.take();
}
} // namespace

void block_store::set_base(std::uint64_t height) {
   if (!blocks_.empty())
      throw std::logic_error("set_base on a non-empty block store");
   base_ = height;
}

const transaction* block_store::stored_block::find_tx(std::uint32_t index) const {
   for (const auto& [i, tx] : txs)
      if (i == index)
         return &tx;
   return nullptr;
}

block_store::block_store(std::string path, bool fsync_each)
   : path_(std::move(path)), fsync_each_(fsync_each) {
   if (path_.empty())
      return; // in-memory: frames are only counted, never written
   fd_ = ::open(path_.c_str(), O_CREAT | O_WRONLY | O_TRUNC, 0644);
   if (fd_ < 0)
      throw std::runtime_error("block_store: cannot open " + path_);
}

void block_store::write_record(std::uint8_t type, const bytes& payload) {
   writer w;
   w.u8(type);
   w.u32(static_cast<std::uint32_t>(payload.size()));
   w.raw(payload.data(), payload.size());
   const bytes& frame = w.out();
   bytes_written_ += frame.size();
   if (fd_ >= 0) {
      std::size_t off = 0;
      while (off < frame.size()) {
         ssize_t n = ::write(fd_, frame.data() + off, frame.size() - off);
         if (n <= 0)
            throw std::runtime_error("block_store: short write to " + path_);
         off += static_cast<std::size_t>(n);
      }
      if (fsync_each_)
         ::fsync(fd_);
   }
}

void block_store::append(const block& b, std::vector<tx_validity> validity) {
   std::uint64_t expect = base_ + blocks_.size() + 1;
   if (b.number != expect)
      throw non_contiguous_block("store expected block " + std::to_string(expect) + ", got " +
                                 std::to_string(b.number));
   if (validity.size() != b.txs.size())
      throw std::invalid_argument("validity count mismatch");

   stored_block sb;
   sb.number = b.number;
   sb.prev_hash = b.prev_hash;
   sb.merkle_root = b.merkle_root;
   sb.hash = b.hash;
   sb.validity = validity;
   sb.sparse = false;
   for (std::uint32_t i = 0; i < b.txs.size(); ++i) {
      sb.all_tx_ids.push_back(b.txs[i].id);
      sb.txs.emplace_back(i, b.txs[i]);
   }

   bytes payload = encode_block(b);
   bytes vb = encode_validity(validity);
   payload.insert(payload.end(), vb.begin(), vb.end());
   write_record(rec_full, payload);
   blocks_.push_back(std::move(sb));
}

void block_store::append(const sparse_block& s, std::vector<tx_validity> validity) {
   std::uint64_t expect = base_ + blocks_.size() + 1;
   if (s.number != expect)
      throw non_contiguous_block("store expected block " + std::to_string(expect) + ", got " +
                                 std::to_string(s.number));
   if (validity.size() != s.all_tx_ids.size())
      throw std::invalid_argument("validity count mismatch");

   stored_block sb;
   sb.number = s.number;
   sb.prev_hash = s.prev_hash;
   sb.merkle_root = s.merkle_root;
   sb.hash = s.hash;
   sb.all_tx_ids = s.all_tx_ids;
   sb.txs = s.included;
   sb.validity = validity;
   sb.sparse = true;

   bytes payload = encode_sparse(s);
   bytes vb = encode_validity(validity);
   payload.insert(payload.end(), vb.begin(), vb.end());
   write_record(rec_sparse, payload);
   blocks_.push_back(std::move(sb));
}

void block_store::correct(std::uint64_t block, std::uint32_t tx, tx_validity final_v) {
   if (block <= base_ || block > base_ + blocks_.size())
      throw unknown_tx("correction targets unknown block " + std::to_string(block));
   auto& sb = blocks_[block - base_ - 1];
   if (tx >= sb.validity.size())
      throw unknown_tx("correction targets unknown tx index " + std::to_string(tx));
   sb.validity[tx] = final_v;

   writer w;
   w.u64(block);
   w.u32(tx);
   w.u8(static_cast<std::uint8_t>(final_v));
   write_record(rec_correction, w.take());
}

const block_store::stored_block* block_store::find(std::uint64_t number) const {
   if (number <= base_ || number > base_ + blocks_.size())
      return nullptr;
   return &blocks_[number - base_ - 1];
}

std::size_t block_store::content_bytes() const {
   std::size_t n = 0;
   for (const auto& sb : blocks_)
      for (const auto& [i, tx] : sb.txs)
         n += encode_tx(tx).size();
   return n;
}

// -------------------------------------------------------------- ledger_state

std::optional<std::pair<bytes, version>> ledger_state::read_through(const state_key& k) const {
   if (const auto* e = dirty_.latest(k)) {
      if (e->is_delete)
         return std::nullopt;
      return std::make_pair(e->value, e->ver);
   }
   auto got = db_.get(k);
   if (!got)
      return std::nullopt;
   return std::make_pair(got->second, got->first);
}

std::vector<std::tuple<state_key, version, bytes>> ledger_state::range_through(
   const std::string& contract, const bytes& start, const std::optional<bytes>& end) const {
   // merge committed scan with dirty overlay, key order, latest-dirty wins.
   auto committed = db_.scan(contract, start, end);
   std::map<state_key, std::pair<version, bytes>> merged;
   for (auto& [k, v, val] : committed)
      merged[k] = {v, std::move(val)};
   auto it = dirty_.by_key().lower_bound(state_key{contract, start});
   for (; it != dirty_.by_key().end(); ++it) {
      const auto& k = it->first;
      if (k.contract != contract)
         break;
      if (end && !(k.key < *end))
         break;
      if (it->second.empty())
         continue;
      const auto& e = it->second.back();
      if (e.is_delete)
         merged.erase(k);
      else
         merged[k] = {e.ver, e.value};
   }
   std::vector<std::tuple<state_key, version, bytes>> out;
   out.reserve(merged.size());
   for (auto& [k, vv] : merged)
      out.emplace_back(k, vv.first, std::move(vv.second));
   return out;
}

std::optional<version> ledger_state::version_of(const state_key& k) const {
   if (const auto* e = dirty_.latest(k))
      return e->is_delete ? std::nullopt : std::optional<version>(e->ver);
   auto got = db_.get(k);
   if (!got)
      return std::nullopt;
   return got->first;
}

void ledger_state::fold_block(std::uint64_t block) {
   dirty_.purge_block(block, [this](const state_key& k, const dirty_state_buffer::entry& e) {
      if (e.is_delete)
         db_.erase(k);
      else
         db_.put(k, e.ver, e.value);
      history_.append(k, e.ver);
   });
}

void ledger_state::put_committed(const state_key& k, version v, bytes value, bool is_delete,
                                 bool record_history) {
   auto cur = db_.get(k);
   if (!cur || cur->first < v || cur->first == v) {
      if (is_delete)
         db_.erase(k);
      else
         db_.put(k, v, std::move(value));
   }
   if (record_history)
      history_.append(k, v);
}

} // namespace eov
