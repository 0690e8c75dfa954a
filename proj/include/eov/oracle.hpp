#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include <eov/model.hpp>
#include <eov/state_engine.hpp>

namespace eov {

// point lookup / half-open scan over a plain state view. shared between the
// reference validator below and the workload generator's historical views so
// an endorsement and its later re-check go through the same code.
std::optional<version> view_version(const state_view& m, const state_key& k);
std::vector<read_entry> view_scan(const state_view& m, const std::string& contract,
                                  const bytes& start, const std::optional<bytes>& end);

// single-threaded reference validator. blocks are processed strictly in
// order; each transaction is judged against the fully up-to-date state —
// duplicate check first, endorsement check second, read-set re-check last —
// and a valid transaction's writes apply before the next one is looked at.
// the concurrent engine must be observationally equal to this.
class serial_oracle {
 public:
   serial_oracle(const std::vector<std::pair<state_key, bytes>>& states,
                 const std::vector<endorsement_policy>& policies);

   std::vector<tx_validity> process_block(std::uint64_t number,
                                          const std::vector<transaction>& txs);

   const state_view& state() const { return state_; }
   std::optional<std::pair<version, bytes>> get(const state_key& k) const;
   digest32 digest() const { return state_view_digest(state_); }
   std::uint64_t height() const { return height_; }

 private:
   tx_validity classify(const transaction& tx) const;

   state_view state_;
   std::set<digest32> seen_;
   std::uint64_t height_ = 0;
};

// genesis seeding over a plain view, using the same globally-canonical
// version stamps as a bootstrapping peer: sequence numbers are assigned
// across the full genesis — states in key order, then policies in contract
// order — at version (0, seq).
void seed_view(state_view& m, const std::vector<std::pair<state_key, bytes>>& states,
               const std::vector<endorsement_policy>& policies);

} // namespace eov
