#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "adx/market/config.hpp"
#include "adx/synth/records.hpp"

namespace adx::pipeline {

// Weekly buyer records from one simulated exchange: bidders are buyers and
// sites are genres. Site values persist across weeks; impressions and
// residuals are redrawn every week. From intervention_week on, the treated
// bidder alone sees the site of each impression.
struct BuyerSimConfig {
    market::MarketConfig market{.n_bidders = 25, .n_sites = 3, .site_shares = market::MarketConfig::equal_shares(3)};
    int weeks = 24;
    int intervention_week = 21; // first treated week, 1-based
    market::BidderIndex treated_bidder = 0;
    bool treat = true;          // false gives a no-effect panel with the same draws before the intervention
    std::uint64_t seed = 0;
    double supply_sd = 0.1;     // log-sd of weekly impression volume
    // Each simulated impression stands for this many real ones, so small
    // simulations can still clear the daily-volume filter.
    double impression_scale = 1.0;

    void validate() const;
    static BuyerSimConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
};

std::string buyer_id(market::BidderIndex bidder, std::size_t n_bidders);
std::string genre_id(market::SiteIndex site, std::size_t n_sites);

// One record per (buyer, week, genre), zero-win cells included with price 0.
// avg_price is the mean price paid per thousand impressions.
std::vector<synth::BuyerWeekRecord> simulate_buyer_records(const BuyerSimConfig& config);

} // namespace adx::pipeline
