#include <eov/workload.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <eov/errors.hpp>
#include <eov/validation.hpp>

namespace eov {

namespace {

std::string trim(std::string s) {
   const auto first = s.find_first_not_of(" \t\r");
   if (first == std::string::npos)
      return {};
   const auto last = s.find_last_not_of(" \t\r");
   return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& v) {
   std::vector<std::string> out;
   std::string item;
   std::istringstream in(v);
   while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty())
         out.push_back(item);
   }
   return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
   try {
      std::size_t used = 0;
      const std::uint64_t n = std::stoull(v, &used);
      if (used != v.size())
         throw std::invalid_argument(v);
      return n;
   } catch (const std::exception&) {
      throw config_invalid(key + ": expected a non-negative integer, got '" + v + "'");
   }
}

double parse_f64(const std::string& key, const std::string& v) {
   try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size())
         throw std::invalid_argument(v);
      return d;
   } catch (const std::exception&) {
      throw config_invalid(key + ": expected a number, got '" + v + "'");
   }
}

bool parse_bool(const std::string& key, const std::string& v) {
   if (v == "true" || v == "1")
      return true;
   if (v == "false" || v == "0")
      return false;
   throw config_invalid(key + ": expected true/false, got '" + v + "'");
}

void apply_key(scenario_config& cfg, const std::string& key, const std::string& val) {
   if (key == "seed")
      cfg.seed = parse_u64(key, val);
   else if (key == "orgCount")
      cfg.org_count = parse_u64(key, val);
   else if (key == "peersPerOrg")
      cfg.peers_per_org = parse_u64(key, val);
   else if (key == "filtersPerPeer")
      cfg.filters_per_peer = parse_u64(key, val);
   else if (key == "contracts")
      cfg.contracts = split_list(val);
   else if (key == "blockSize")
      cfg.block_size = parse_u64(key, val);
   else if (key == "workload")
      cfg.workload = val;
   else if (key == "zipfS")
      cfg.zipf_s = parse_f64(key, val);
   else if (key == "accountCount")
      cfg.account_count = parse_u64(key, val);
   else if (key == "valueSizeBytes")
      cfg.value_size_bytes = parse_u64(key, val);
   else if (key == "txRate")
      cfg.tx_rate = parse_f64(key, val);
   else if (key == "durationOrBlockCount")
      cfg.block_count = parse_u64(key, val);
   else if (key == "workerCount")
      cfg.worker_count = parse_u64(key, val);
   else if (key == "sparseBlocksEnabled")
      cfg.sparse_blocks_enabled = parse_bool(key, val);
   else if (key == "crossContractMix") {
      const auto parts = split_list(val);
      if (parts.empty() || parts.size() > 2)
         throw config_invalid("crossContractMix: expected 'fraction' or 'fraction,fanout'");
      cfg.cross_contract_rate = parse_f64(key, parts[0]);
      if (parts.size() == 2)
         cfg.cross_contract_fanout = parse_u64(key, parts[1]);
   } else if (key == "endorseStaleness")
      cfg.endorse_staleness = parse_u64(key, val);
   else if (key == "badEndorseRate")
      cfg.bad_endorse_rate = parse_f64(key, val);
   else if (key == "rangeRate")
      cfg.range_rate = parse_f64(key, val);
   else if (key == "deleteRate")
      cfg.delete_rate = parse_f64(key, val);
   else if (key == "policyUpdateRate")
      cfg.policy_update_rate = parse_f64(key, val);
   else if (key == "duplicateRate")
      cfg.duplicate_rate = parse_f64(key, val);
   else if (key == "validateCostMs")
      cfg.validate_cost_ms = parse_f64(key, val);
   else if (key == "commitCostMs")
      cfg.commit_cost_ms = parse_f64(key, val);
   else if (key == "verdictLatencyMs")
      cfg.verdict_latency_ms = parse_f64(key, val);
   else if (key == "commitDelayMs")
      cfg.commit_delay_ms = parse_f64(key, val);
   else if (key == "endorseSpin")
      cfg.endorse_spin = static_cast<unsigned>(parse_u64(key, val));
   else if (key == "protocol")
      cfg.protocol = val;
   else if (key == "mode")
      cfg.mode = val;
   else if (key == "fsyncEach")
      cfg.fsync_each = parse_bool(key, val);
   else if (key == "peerSpeeds") {
      cfg.peer_speeds.clear();
      for (const auto& p : split_list(val))
         cfg.peer_speeds.push_back(parse_f64(key, p));
   } else if (key == "joinAtBlock")
      cfg.join_at_block = parse_u64(key, val);
   else if (key == "joinPeerContracts")
      cfg.join_contracts = split_list(val);
   else
      throw config_invalid("unknown config key '" + key + "'");
}

std::vector<std::string> key_prefixes(const std::string& workload) {
   if (workload == "smallbank")
      return {"c:", "s:"};
   if (workload == "ycsb")
      return {"y:"};
   return {"c:", "s:", "y:"}; // mixed
}

std::vector<std::pair<state_key, bytes>> build_genesis_states(const scenario_config& cfg) {
   std::vector<std::pair<state_key, bytes>> out;
   std::uint64_t ctr = 0;
   for (const auto& c : cfg.contracts)
      for (const auto& p : key_prefixes(cfg.workload))
         for (std::size_t i = 0; i < cfg.account_count; ++i) {
            std::string v = "g" + std::to_string(ctr++);
            v.resize(cfg.value_size_bytes, '.');
            out.emplace_back(skey(c, account_key(p, i)), to_bytes(v));
         }
   return out;
}

std::vector<endorsement_policy> build_genesis_policies(const scenario_config& cfg) {
   std::vector<std::string> orgs;
   for (std::size_t i = 1; i <= cfg.org_count; ++i) {
      std::string n = std::to_string(i);
      if (n.size() < 2)
         n.insert(0, "0");
      orgs.push_back("org" + n);
   }
   std::vector<endorsement_policy> out;
   for (const auto& c : cfg.contracts)
      out.push_back(endorsement_policy{
          c, orgs, static_cast<std::uint32_t>((cfg.org_count + 1) / 2)});
   return out;
}

} // namespace

scenario_config parse_config_text(const std::string& text) {
   scenario_config cfg;
   std::istringstream in(text);
   std::string line;
   std::size_t lineno = 0;
   while (std::getline(in, line)) {
      ++lineno;
      if (const auto h = line.find('#'); h != std::string::npos)
         line.erase(h);
      line = trim(line);
      if (line.empty())
         continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
         throw config_invalid("line " + std::to_string(lineno) + ": expected key=value");
      apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
   }
   check_config(cfg);
   return cfg;
}

scenario_config load_config_file(const std::string& path) {
   std::ifstream in(path, std::ios::binary);
   if (!in)
      throw config_invalid("cannot open config file: " + path);
   std::ostringstream buf;
   buf << in.rdbuf();
   return parse_config_text(buf.str());
}

void check_config(scenario_config& cfg) {
   auto fail = [](const std::string& why) { throw config_invalid(why); };

   if (cfg.org_count < 1 || cfg.org_count > 99)
      fail("orgCount must be in [1, 99]");
   if (cfg.peers_per_org < 1)
      fail("peersPerOrg must be >= 1");
   if (cfg.contracts.empty())
      fail("contracts must list at least one contract");
   std::set<std::string> uniq(cfg.contracts.begin(), cfg.contracts.end());
   if (uniq.size() != cfg.contracts.size())
      fail("contracts must be unique");
   for (const auto& c : cfg.contracts)
      if (c.empty() || c == policy_contract)
         fail("contract names must be non-empty and must not be the reserved policy namespace");
   if (cfg.filters_per_peer > cfg.contracts.size())
      fail("filtersPerPeer cannot exceed the contract count");
   if (cfg.block_size < 1)
      fail("blockSize must be >= 1");
   if (cfg.workload != "smallbank" && cfg.workload != "ycsb" && cfg.workload != "mixed")
      fail("workload must be smallbank, ycsb or mixed");
   if (cfg.zipf_s < 0)
      fail("zipfS must be >= 0");
   if (cfg.account_count < 4 || cfg.account_count > 999999)
      fail("accountCount must be in [4, 999999]");
   if (cfg.value_size_bytes < 1 || cfg.value_size_bytes > (1u << 20))
      fail("valueSizeBytes must be in [1, 1048576]");
   if (cfg.tx_rate < 0)
      fail("txRate must be >= 0");
   if (cfg.block_count < 1)
      fail("durationOrBlockCount must be >= 1");
   if (cfg.worker_count < 1)
      fail("workerCount must be >= 1");
   for (double r : {cfg.cross_contract_rate, cfg.bad_endorse_rate, cfg.range_rate,
                    cfg.delete_rate, cfg.policy_update_rate, cfg.duplicate_rate})
      if (r < 0 || r > 1)
         fail("rates must be fractions in [0, 1]");
   if (cfg.cross_contract_rate > 0 &&
       (cfg.cross_contract_fanout < 2 || cfg.cross_contract_fanout > cfg.contracts.size()))
      fail("crossContractMix fan-out must be in [2, contract count]");
   if (cfg.endorse_staleness > 64)
      fail("endorseStaleness must be <= 64");
   if (cfg.validate_cost_ms < 0 || cfg.commit_cost_ms < 0 || cfg.verdict_latency_ms < 0 ||
       cfg.commit_delay_ms < 0)
      fail("cost-model delays must be >= 0");
   if (cfg.protocol != "deferred" && cfg.protocol != "strawman")
      fail("protocol must be deferred or strawman");
   if (cfg.mode != "virtual" && cfg.mode != "threaded")
      fail("mode must be virtual or threaded");
   for (double s : cfg.peer_speeds)
      if (s <= 0)
         fail("peerSpeeds entries must be > 0");
   for (const auto& c : cfg.join_contracts)
      if (!uniq.count(c))
         fail("joinPeerContracts must be a subset of contracts");
}

zipf_sampler::zipf_sampler(std::size_t n, double s) {
   cdf_.resize(n);
   double sum = 0;
   for (std::size_t r = 0; r < n; ++r) {
      sum += 1.0 / std::pow(static_cast<double>(r + 1), s);
      cdf_[r] = sum;
   }
   for (auto& c : cdf_)
      c /= sum;
}

std::size_t zipf_sampler::operator()(std::mt19937_64& rng) const {
   const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
   const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
   if (it == cdf_.end())
      return cdf_.size() - 1;
   return static_cast<std::size_t>(it - cdf_.begin());
}

std::string account_key(const std::string& prefix, std::size_t n) {
   std::string num = std::to_string(n);
   if (num.size() < 6)
      num.insert(0, 6 - num.size(), '0');
   return prefix + num;
}

workload_gen::workload_gen(const scenario_config& cfg)
    : cfg_(cfg),
      rng_(cfg.seed),
      genesis_states_(build_genesis_states(cfg)),
      genesis_policies_(build_genesis_policies(cfg)),
      truth_(genesis_states_, genesis_policies_),
      zipf_(cfg.account_count, cfg.zipf_s) {
   history_.push_back(truth_.state());
}

double workload_gen::unit() {
   return std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
}

std::size_t workload_gen::pick(std::size_t n) {
   return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
}

bytes workload_gen::make_value() {
   std::string s = "v" + std::to_string(value_ctr_++);
   s.resize(cfg_.value_size_bytes, '.');
   return to_bytes(s);
}

void workload_gen::read_key(transaction& tx, const state_view& view, const state_key& k) {
   tx.reads.push_back(read_entry{k, view_version(view, k)});
}

void workload_gen::write_key(transaction& tx, const state_key& k) {
   tx.writes.push_back(write_entry{k, make_value(), false});
}

void workload_gen::gen_smallbank_op(transaction& tx, const std::string& c,
                                    const state_view& view) {
   const std::size_t a = pick(cfg_.account_count);
   const state_key ck = skey(c, account_key("c:", a));
   const state_key sk = skey(c, account_key("s:", a));
   switch (pick(6)) {
      case 0: // balance: read-only
         read_key(tx, view, ck);
         read_key(tx, view, sk);
         break;
      case 1: // deposit into checking
         read_key(tx, view, ck);
         write_key(tx, ck);
         break;
      case 2: // savings transaction
         read_key(tx, view, sk);
         write_key(tx, sk);
         break;
      case 3: // amalgamate both balances
         read_key(tx, view, ck);
         read_key(tx, view, sk);
         write_key(tx, ck);
         write_key(tx, sk);
         break;
      case 4: // write check against both balances
         read_key(tx, view, ck);
         read_key(tx, view, sk);
         write_key(tx, ck);
         break;
      case 5: { // payment to a distinct account
         const std::size_t b = (a + 1 + pick(cfg_.account_count - 1)) % cfg_.account_count;
         const state_key cb = skey(c, account_key("c:", b));
         read_key(tx, view, ck);
         read_key(tx, view, cb);
         write_key(tx, ck);
         write_key(tx, cb);
         break;
      }
   }
}

void workload_gen::gen_ycsb_op(transaction& tx, const std::string& c, const state_view& view) {
   const std::size_t k1 = zipf_(rng_);
   const std::size_t k2 = (k1 + 1 + zipf_(rng_) % (cfg_.account_count - 1)) % cfg_.account_count;
   const state_key a = skey(c, account_key("y:", k1));
   const state_key b = skey(c, account_key("y:", k2));
   read_key(tx, view, a);
   read_key(tx, view, b);
   write_key(tx, a);
   write_key(tx, b);
}

void workload_gen::add_range(transaction& tx, const std::string& c, const state_view& view,
                             const std::string& prefix) {
   const std::size_t lo = pick(cfg_.account_count);
   const std::size_t span = 1 + pick(8);
   range_query_info rq;
   rq.contract = c;
   rq.start_key = to_bytes(account_key(prefix, lo));
   rq.end_key = to_bytes(account_key(prefix, std::min(lo + span, cfg_.account_count)));
   rq.observed = view_scan(view, c, rq.start_key, rq.end_key);
   tx.ranges.push_back(std::move(rq));
}

transaction workload_gen::make_tx(const state_view& view) {
   transaction tx;

   if (unit() < cfg_.policy_update_rate) {
      // rotate the contract's endorsement threshold; the policy read added
      // below doubles as this update's concurrency check.
      const std::string& c = cfg_.contracts[pick(cfg_.contracts.size())];
      const auto cur = view.find(skey(std::string(policy_contract), c));
      endorsement_policy pol = decode_policy(cur->second.second);
      pol.threshold = static_cast<std::uint32_t>(1 + pol.threshold % pol.orgs.size());
      tx.writes.push_back(
          write_entry{skey(std::string(policy_contract), c), encode_policy(pol), false});
   } else {
      const std::size_t fan =
          (unit() < cfg_.cross_contract_rate) ? cfg_.cross_contract_fanout : 1;
      std::vector<std::size_t> idx(cfg_.contracts.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < fan && i + 1 < idx.size(); ++i)
         std::swap(idx[i], idx[i + pick(idx.size() - i)]);

      std::string first_prefix = "c:";
      for (std::size_t i = 0; i < fan; ++i) {
         const std::string& c = cfg_.contracts[idx[i]];
         std::string wl = cfg_.workload;
         if (wl == "mixed")
            wl = (pick(2) == 0) ? "smallbank" : "ycsb";
         if (wl == "ycsb") {
            gen_ycsb_op(tx, c, view);
            if (i == 0)
               first_prefix = "y:";
         } else {
            gen_smallbank_op(tx, c, view);
         }
      }
      if (unit() < cfg_.range_rate)
         add_range(tx, cfg_.contracts[idx[0]], view, first_prefix);

      if (!tx.writes.empty() && unit() < cfg_.delete_rate)
         if (tx.writes[0].key.contract != policy_contract) {
            tx.writes[0].is_delete = true;
            tx.writes[0].value.clear();
         }
   }

   // the endorser's policy reads: one per invoked contract, stamped with the
   // policy version its view held.
   tx.contracts = derive_contracts(tx);
   for (const auto& c : tx.contracts) {
      const state_key pk = skey(std::string(policy_contract), c);
      tx.reads.push_back(read_entry{pk, view_version(view, pk)});
   }
   tx.contracts = derive_contracts(tx);

   // sign with the first threshold orgs of each invoked contract's policy,
   // as that policy stands in the endorser's view.
   std::set<std::string> signers;
   for (const auto& c : tx.contracts) {
      const auto it = view.find(skey(std::string(policy_contract), c));
      const endorsement_policy pol = decode_policy(it->second.second);
      for (std::uint32_t i = 0; i < pol.threshold && i < pol.orgs.size(); ++i)
         signers.insert(pol.orgs[i]);
   }
   for (const auto& org : signers)
      tx.endorsements.push_back(endorse(tx, org));

   if (!tx.endorsements.empty() && unit() < cfg_.bad_endorse_rate)
      tx.endorsements[0].mac[0] ^= 0x5A;

   tx.id = compute_tx_id(tx);
   return tx;
}

std::vector<transaction> workload_gen::next_block() {
   const state_view& view = history_.front();

   std::vector<transaction> txs;
   txs.reserve(cfg_.block_size);
   for (std::size_t i = 0; i < cfg_.block_size; ++i) {
      if (!pool_.empty() && unit() < cfg_.duplicate_rate) {
         txs.push_back(pool_[pick(pool_.size())]);
         continue;
      }
      txs.push_back(make_tx(view));
   }

   truth_.process_block(next_block_, txs);
   ++next_block_;
   for (const auto& t : txs)
      pool_.push_back(t);
   history_.push_back(truth_.state());
   while (history_.size() > cfg_.endorse_staleness + 1)
      history_.pop_front();
   return txs;
}

} // namespace eov
