#include <eov/validation.hpp>

#include <eov/errors.hpp>
#include <eov/hash.hpp>

#include <algorithm>
#include <set>

namespace eov {

bytes org_secret(const std::string& org) {
   return to_bytes("org-secret:" + org);
}

endorsement endorse(const transaction& tx, const std::string& org) {
   return endorsement{org, keyed_digest(org_secret(org), response_bytes(tx))};
}

bool in_scope(const std::vector<std::string>& scope, const std::string& contract) {
   return std::find(scope.begin(), scope.end(), contract) != scope.end();
}

std::map<std::string, bytes> collect_policies(const transaction& tx,
                                              const std::vector<std::string>& scope,
                                              const ledger_state& st) {
   std::map<std::string, bytes> out;
   for (const auto& contract : tx.contracts) {
      if (!in_scope(scope, contract))
         continue;
      auto got = st.read_through(skey(std::string(policy_contract), contract));
      if (!got)
         throw unknown_policy("no policy on record for contract " + contract);
      out[contract] = got->first;
   }
   return out;
}

bool check_endorsements_against(const transaction& tx,
                                const std::map<std::string, bytes>& policies,
                                std::uint64_t spin_rounds) {
   // verify each mac once; spin models the per-signature crypto cost.
   bytes resp = response_bytes(tx);
   std::set<std::string> verified;
   for (const auto& e : tx.endorsements) {
      if (spin_rounds)
         digest_spin(e.mac, spin_rounds);
      if (e.mac == keyed_digest(org_secret(e.org), resp))
         verified.insert(e.org);
   }

   for (const auto& [contract, raw] : policies) {
      endorsement_policy pol = decode_policy(raw);
      std::uint32_t have = 0;
      for (const auto& org : pol.orgs)
         if (verified.count(org))
            ++have;
      if (have < pol.threshold)
         return false;
   }
   return true;
}

bool check_endorsements(const transaction& tx, const std::vector<std::string>& scope,
                        const ledger_state& st, std::uint64_t spin_rounds) {
   return check_endorsements_against(tx, collect_policies(tx, scope, st), spin_rounds);
}

bool check_serializability(const transaction& tx, const std::vector<std::string>& scope,
                           const ledger_state& st) {
   for (const auto& re : tx.reads) {
      if (!in_scope(scope, effective_contract(re.key)))
         continue;
      if (st.version_of(re.key) != re.ver)
         return false;
   }
   for (const auto& rq : tx.ranges) {
      if (!in_scope(scope, rq.contract))
         continue;
      auto rows = st.range_through(rq.contract, rq.start_key, rq.end_key);
      if (rows.size() != rq.observed.size())
         return false;
      for (std::size_t i = 0; i < rows.size(); ++i) {
         const auto& [k, v, val] = rows[i];
         const auto& ob = rq.observed[i];
         if (k != ob.key || !ob.ver || *ob.ver != v)
            return false;
      }
   }
   return true;
}

} // namespace eov
