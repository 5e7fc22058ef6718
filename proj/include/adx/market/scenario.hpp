#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "adx/market/auction.hpp"
#include "adx/market/valuation.hpp"

namespace adx::market {

struct AuctionOutcome {
    std::size_t impression_id = 0;
    SiteIndex site_id = 0;
    std::optional<BidderIndex> winner;
    double price = 0.0;
    std::size_t n_participants = 0;

    bool operator==(const AuctionOutcome&) const = default;
};

// Aggregates over one scenario's outcomes. Prices here are selling prices,
// so means and quantiles run over sold impressions only; a site with no
// sales reports 0. Quantiles interpolate linearly between order statistics.
struct ScenarioSummary {
    std::vector<std::size_t> site_impressions;
    std::vector<std::size_t> site_sold;
    std::vector<double> site_mean_price;
    std::vector<double> site_p50;
    std::vector<double> site_p90;
    std::vector<double> site_p99;
    std::vector<double> bidder_win_share;
    double overall_mean_price = 0.0;
    double zero_price_share = 0.0; // zero-price sales / sales
    double unsold_share = 0.0;     // unsold / impressions
};

struct Scenario {
    DisclosureRegime regime = DisclosureRegime::none();
    std::vector<AuctionOutcome> outcomes;
    ScenarioSummary summary;
};

// Runs one auction per impression of `draw` under `regime`, in impression
// order. Tie-breaks draw from `rng`.
std::vector<AuctionOutcome> run_market(const ValuationDraw& draw, const MarketConfig& config,
                                       const DisclosureRegime& regime, Rng& rng);

ScenarioSummary summarize(std::span<const AuctionOutcome> outcomes, std::size_t n_sites, std::size_t n_bidders);

// Draws valuations from config.seed and runs the auctions under `regime`.
Scenario simulate_scenario(const MarketConfig& config, const DisclosureRegime& regime);

// One valuation draw shared by every regime. Each regime's auctions start
// from the same post-draw stream state, so a regime list {none, full} gives
// the same per-regime results as separate simulate_scenario calls.
std::vector<Scenario> simulate_paired(const MarketConfig& config, std::span<const DisclosureRegime> regimes);

struct PartialReport {
    BidderIndex treated = 0;
    double win_share_treated_none = 0.0;
    double win_share_treated_partial = 0.0;
    // Mean price over the impressions the treated bidder won; 0 if none.
    double mean_price_treated_none = 0.0;
    double mean_price_treated_partial = 0.0;
};

PartialReport simulate_partial(const MarketConfig& config, BidderIndex treated);

// Same comparison on scenarios already produced by simulate_paired.
PartialReport compare_partial(const Scenario& none, const Scenario& partial, BidderIndex treated);

// Delimited output: impression_id,site_id,winner,price,n_participants. An
// unsold impression has an empty winner field.
void write_outcomes_csv(std::ostream& out, std::span<const AuctionOutcome> outcomes);

// key=value lines.
void write_summary_kv(std::ostream& out, const ScenarioSummary& summary, const std::string& prefix = "");

// One row per site: site_id,impressions,sold,mean_price,p50,p90,p99.
void write_site_table(std::ostream& out, const ScenarioSummary& summary);

} // namespace adx::market
