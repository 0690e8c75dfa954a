#include <eov/mod_index.hpp>

#include <eov/codec.hpp>
#include <eov/errors.hpp>
#include <eov/hash.hpp>
#include <eov/state_engine.hpp>

#include <algorithm>
#include <set>

namespace eov {

namespace {

// the index files policy writes under the contract they govern; the state db
// files them under the reserved namespace. map between the two.
state_key entry_state_key(const std::string& contract, const mod_entry& e) {
   if (e.is_policy)
      return state_key{std::string(policy_contract), e.key};
   return state_key{contract, e.key};
}

struct lookup_target {
   std::string contract; // index contract (effective)
   bytes key;
   bool is_policy = false;
};

lookup_target target_for(const state_key& key) {
   if (key.contract == policy_contract)
      return {std::string(key.key.begin(), key.key.end()), key.key, true};
   return {key.contract, key.key, false};
}

} // namespace

void modification_index::record(const std::string& contract, tx_ref ref, mod_entry entry) {
   m_[index_key{contract, ref.block, ref.tx}].push_back(std::move(entry));
}

void modification_index::finalize_deferred(tx_ref ref) {
   for (auto& [k, entries] : m_) {
      if (std::get<1>(k) != ref.block || std::get<2>(k) != ref.tx)
         continue;
      for (auto& e : entries)
         e.is_deferred = false;
   }
}

void modification_index::erase_tx(tx_ref ref) {
   for (auto it = m_.begin(); it != m_.end();) {
      if (std::get<1>(it->first) == ref.block && std::get<2>(it->first) == ref.tx)
         it = m_.erase(it);
      else
         ++it;
   }
}

std::vector<state_key> modification_index::keys_modified(const std::string& contract,
                                                         std::uint64_t up_to) const {
   std::set<state_key> keys;
   auto it = m_.lower_bound(index_key{contract, 0, 0});
   for (; it != m_.end(); ++it) {
      if (std::get<0>(it->first) != contract || std::get<1>(it->first) > up_to)
         break;
      for (const auto& e : it->second)
         keys.insert(entry_state_key(contract, e));
   }
   return {keys.begin(), keys.end()};
}

std::optional<modification_index::last_write> modification_index::find_last_write(
   const state_key& key, std::uint64_t up_to) const {
   auto t = target_for(key);
   auto it = m_.upper_bound(
      index_key{t.contract, up_to, std::numeric_limits<std::uint32_t>::max()});
   while (it != m_.begin()) {
      --it;
      if (std::get<0>(it->first) != t.contract)
         break;
      for (auto e = it->second.rbegin(); e != it->second.rend(); ++e) {
         if (e->is_policy != t.is_policy || e->key != t.key)
            continue;
         return last_write{tx_ref{std::get<1>(it->first), std::get<2>(it->first)}, e->is_delete,
                           e->is_deferred};
      }
   }
   return std::nullopt;
}

std::size_t modification_index::record_count() const {
   std::size_t n = 0;
   for (const auto& [k, entries] : m_)
      n += entries.size();
   return n;
}

// ----------------------------------------------------------------- manifest

namespace {
bytes encode_manifest_body(const snapshot_manifest& m) {
   writer w;
   w.str(m.contract);
   w.u64(m.as_of_block);
   w.u32(static_cast<std::uint32_t>(m.entries.size()));
   for (const auto& [k, v, val] : m.entries) {
      w.str(k.contract);
      w.bstr(k.key);
      w.u64(v.block);
      w.u32(v.tx);
      w.bstr(val);
   }
   return w.take();
}
} // namespace

bytes encode_manifest(const snapshot_manifest& m) {
   bytes body = encode_manifest_body(m);
   writer w;
   w.raw(body.data(), body.size());
   w.digest(sha256(body));
   return w.take();
}

snapshot_manifest decode_manifest(const bytes& b) {
   if (b.size() < 32)
      throw codec_error("manifest shorter than its digest");
   bytes body(b.begin(), b.end() - 32);
   digest32 want;
   std::copy(b.end() - 32, b.end(), want.begin());
   if (sha256(body) != want)
      throw codec_error("manifest digest mismatch");

   reader r(body);
   snapshot_manifest m;
   m.contract = r.str();
   m.as_of_block = r.u64();
   std::uint32_t n = r.u32();
   for (std::uint32_t i = 0; i < n; ++i) {
      state_key k;
      k.contract = r.str();
      k.key = r.bstr();
      version v{r.u64(), r.u32()};
      bytes val = r.bstr();
      m.entries.emplace_back(std::move(k), v, std::move(val));
   }
   if (!r.done())
      throw codec_error("trailing bytes after manifest");
   return m;
}

std::size_t snapshot_manifest::byte_size() const {
   return encode_manifest(*this).size();
}

// ----------------------------------------------------------------- recovery

namespace {

// pull the value the transaction at `ref` wrote for `key` out of the block
// store. last write in the write-set wins, matching apply order.
std::pair<bytes, bool> write_from_store(const state_key& key, tx_ref ref,
                                        const block_store& store) {
   const auto* sb = store.find(ref.block);
   if (!sb)
      throw unknown_tx("recovery needs block " + std::to_string(ref.block) +
                       " which this store does not hold");
   const transaction* tx = sb->find_tx(ref.tx);
   if (!tx)
      throw unknown_tx("recovery needs tx " + to_string(ref) +
                       " which this store does not hold");
   const write_entry* found = nullptr;
   for (const auto& we : tx->writes) {
      if (we.key.contract == key.contract && we.key.key == key.key)
         found = &we;
   }
   if (!found)
      throw unknown_tx("tx " + to_string(ref) + " holds no write for " + to_string(key));
   return {found->value, found->is_delete};
}

} // namespace

std::optional<std::pair<bytes, version>> recover_value(const state_key& key, std::uint64_t up_to,
                                                       const modification_index& index,
                                                       const state_db& db,
                                                       const block_store& store,
                                                       const state_view* seeded) {
   auto t = target_for(key);
   const auto& raw = index.raw();
   auto it = raw.upper_bound(modification_index::index_key{
      t.contract, up_to, std::numeric_limits<std::uint32_t>::max()});
   while (it != raw.begin()) {
      --it;
      if (std::get<0>(it->first) != t.contract)
         break;
      for (auto e = it->second.rbegin(); e != it->second.rend(); ++e) {
         if (e->is_policy != t.is_policy || e->key != t.key)
            continue;
         if (e->is_deferred)
            continue; // unresolved: its write may never materialize
         version v{std::get<1>(it->first), std::get<2>(it->first)};
         if (e->is_delete)
            return std::nullopt;
         // fast path: the db still holds exactly this version.
         auto got = db.get(key);
         if (got && got->first == v)
            return std::make_pair(got->second, v);
         // seeded values (genesis, join manifests) were never in any block.
         if (seeded) {
            auto sit = seeded->find(key);
            if (sit != seeded->end() && sit->second.first == v)
               return std::make_pair(sit->second.second, v);
         }
         auto [val, del] = write_from_store(key, v, store);
         if (del)
            return std::nullopt;
         return std::make_pair(std::move(val), v);
      }
   }
   return std::nullopt;
}

snapshot_manifest extract_snapshot(const std::string& contract, std::uint64_t as_of,
                                   const modification_index& index, const state_db& db,
                                   const block_store& store, const state_view* seeded) {
   snapshot_manifest m;
   m.contract = contract;
   m.as_of_block = as_of;
   for (const auto& key : index.keys_modified(contract, as_of)) {
      auto rv = recover_value(key, as_of, index, db, store, seeded);
      if (rv)
         m.entries.emplace_back(key, rv->second, std::move(rv->first));
   }
   std::sort(m.entries.begin(), m.entries.end(),
             [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
   return m;
}

} // namespace eov
