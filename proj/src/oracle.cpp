#include <eov/oracle.hpp>

#include <algorithm>

#include <eov/errors.hpp>
#include <eov/hash.hpp>
#include <eov/validation.hpp>

namespace eov {

std::optional<version> view_version(const state_view& m, const state_key& k) {
   auto it = m.find(k);
   if (it == m.end())
      return std::nullopt;
   return it->second.first;
}

std::vector<read_entry> view_scan(const state_view& m, const std::string& contract,
                                  const bytes& start, const std::optional<bytes>& end) {
   std::vector<read_entry> out;
   auto it = m.lower_bound(state_key{contract, start});
   for (; it != m.end() && it->first.contract == contract; ++it) {
      if (end && !(it->first.key < *end))
         break;
      out.push_back(read_entry{it->first, it->second.first});
   }
   return out;
}

void seed_view(state_view& m, const std::vector<std::pair<state_key, bytes>>& states,
               const std::vector<endorsement_policy>& policies) {
   std::uint32_t seq = 0;

   std::vector<std::pair<state_key, bytes>> sorted = states;
   std::sort(sorted.begin(), sorted.end(),
             [](const auto& a, const auto& b) { return a.first < b.first; });
   for (auto& [k, v] : sorted)
      m[k] = {version{0, seq++}, v};

   std::vector<endorsement_policy> pols = policies;
   std::sort(pols.begin(), pols.end(),
             [](const auto& a, const auto& b) { return a.contract < b.contract; });
   for (const auto& p : pols)
      m[skey(std::string(policy_contract), p.contract)] = {version{0, seq++}, encode_policy(p)};
}

serial_oracle::serial_oracle(const std::vector<std::pair<state_key, bytes>>& states,
                             const std::vector<endorsement_policy>& policies) {
   seed_view(state_, states, policies);
}

std::optional<std::pair<version, bytes>> serial_oracle::get(const state_key& k) const {
   auto it = state_.find(k);
   if (it == state_.end())
      return std::nullopt;
   return it->second;
}

tx_validity serial_oracle::classify(const transaction& tx) const {
   // endorsements: every invoked contract's policy must be met by distinct
   // orgs with valid keyed digests over the response bytes.
   const bytes body = response_bytes(tx);
   for (const auto& c : tx.contracts) {
      auto pol_entry = state_.find(skey(std::string(policy_contract), c));
      if (pol_entry == state_.end())
         throw unknown_policy("no endorsement policy for contract " + c);
      const endorsement_policy pol = decode_policy(pol_entry->second.second);

      std::set<std::string> good;
      for (const auto& e : tx.endorsements) {
         if (std::find(pol.orgs.begin(), pol.orgs.end(), e.org) == pol.orgs.end())
            continue;
         if (keyed_digest(org_secret(e.org), body) == e.mac)
            good.insert(e.org);
      }
      if (good.size() < pol.threshold)
         return tx_validity::invalid_endorsement;
   }

   // read-set re-check: every observed version must still be current.
   for (const auto& re : tx.reads)
      if (view_version(state_, re.key) != re.ver)
         return tx_validity::invalid_serializability;
   for (const auto& rq : tx.ranges)
      if (view_scan(state_, rq.contract, rq.start_key, rq.end_key) != rq.observed)
         return tx_validity::invalid_serializability;

   return tx_validity::valid;
}

std::vector<tx_validity> serial_oracle::process_block(std::uint64_t number,
                                                      const std::vector<transaction>& txs) {
   if (number != height_ + 1)
      throw non_contiguous_block("oracle expected block " + std::to_string(height_ + 1) +
                                 ", got " + std::to_string(number));

   std::vector<tx_validity> out;
   out.reserve(txs.size());
   for (std::uint32_t i = 0; i < txs.size(); ++i) {
      const transaction& tx = txs[i];
      if (!seen_.insert(tx.id).second) {
         out.push_back(tx_validity::invalid_duplicate);
         continue;
      }
      const tx_validity v = classify(tx);
      out.push_back(v);
      if (v != tx_validity::valid)
         continue;
      for (const auto& w : tx.writes) {
         if (w.is_delete)
            state_.erase(w.key);
         else
            state_[w.key] = {version{number, i}, w.value};
      }
   }
   height_ = number;
   return out;
}

} // namespace eov
