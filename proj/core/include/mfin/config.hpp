#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfin/dates.hpp"
#include "mfin/mfin.hpp"

namespace mfin {

// Run-wide configuration: universe, calendar, strategy grids and the model
// block. Loaded from JSON; every field has the desk default.
struct FrameworkConfig {
    std::vector<std::string> assets = {"BCH", "BTC", "DASH", "DOGE", "ETH", "LTC", "ZEC"};
    std::vector<std::string> cmc_features = {"open",   "high",      "low",
                                             "close",  "volume",    "market_cap"};
    std::vector<std::string> bic_features = {
        "transactions",       "block_size",       "sent_addresses",
        "sent_usd",           "difficulty",       "mining_profitability",
        "hashrate",           "avg_transaction_size", "avg_transaction_value",
        "confirmation_time",  "tweets",           "google_trends"};
    std::vector<std::string> bc_features = {"fee_reward_ratio", "chain_size_increase",
                                            "coin_days_destroyed", "cost_per_transaction"};
    std::string open_feature = "open";

    Day calendar_first = days_from_civil(2018, 1, 1);
    Day calendar_last = days_from_civil(2023, 3, 31);
    Day first_test_start = days_from_civil(2019, 4, 1);

    double sigma_target = kSigmaTarget;
    std::vector<double> cost_grid_bps = {0.0, 2.5, 5.0, 7.5, 10.0, 12.5};
    double adf_max_pvalue = 0.01;

    int n_seeds = 10;
    std::uint64_t base_seed = 1;
    int threads = 1;

    MfinConfig mfin;

    std::vector<std::string> all_features() const;  // CMC + BIC + BC, in order
    std::vector<std::string> alt_features() const;  // BIC + BC (strategy grids)
};

FrameworkConfig load_config(const std::filesystem::path& path);
void save_config(const FrameworkConfig& cfg, const std::filesystem::path& path);

// FNV-1a over a file's bytes; 0 for a missing file.
std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace mfin
