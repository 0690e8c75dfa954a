#pragma once

#include <eov/model.hpp>
#include <eov/state_engine.hpp>

#include <map>

namespace eov {

// shared-secret stand-in for an org's signing identity. both the endorsing
// side (workload generator) and the verifying side derive the same key.
bytes org_secret(const std::string& org);

// mac over the transaction's response bytes (body sans endorsements).
endorsement endorse(const transaction& tx, const std::string& org);

// true when `contract` (already mapped through effective_contract) is one of
// the names in `scope`.
bool in_scope(const std::vector<std::string>& scope, const std::string& contract);

// policy bytes for every scoped contract, read through the ledger (dirty
// included) so an uncommitted policy update binds immediately. throws
// unknown_policy when a scoped contract has no policy on record.
std::map<std::string, bytes> collect_policies(const transaction& tx,
                                              const std::vector<std::string>& scope,
                                              const ledger_state& st);

// the crypto half: at least `threshold` distinct orgs listed in each policy
// must carry a verifying mac. `spin_rounds` models per-endorsement
// signature-verification cost (0 = free). pure; safe without any lock.
bool check_endorsements_against(const transaction& tx,
                                const std::map<std::string, bytes>& policies,
                                std::uint64_t spin_rounds);

// both halves in one call.
bool check_endorsements(const transaction& tx, const std::vector<std::string>& scope,
                        const ledger_state& st, std::uint64_t spin_rounds = 0);

// multi-version concurrency check over every scoped read and range: each
// point read must still see exactly the version the endorser observed
// (absent counts as a version), and each range re-executed over live state
// must reproduce the observed (key, version) sequence exactly.
bool check_serializability(const transaction& tx, const std::vector<std::string>& scope,
                           const ledger_state& st);

} // namespace eov
