#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adx/market/scenario.hpp"

namespace adx::pipeline {

inline constexpr int kDaysPerWeek = 7;

// Revenue per thousand supplied impressions. Unsold impressions count in
// `supply` with zero revenue.
double cpm_from_revenue(double revenue, double supply);

// Mean over days of the number of distinct winners that day.
double average_daily_buyers(std::span<const std::size_t> distinct_winners_per_day);

// One site-week of auctions. Simulated prices are quoted per thousand
// impressions, so an impression sold at price p earns p / 1000.
struct SiteWeekOutcomes {
    std::span<const market::AuctionOutcome> outcomes;
    // Day (0..6) of each outcome; empty spreads impressions evenly over the
    // week in impression order.
    std::span<const int> day;
    // Supplied impressions; 0 means one per outcome.
    double supply = 0.0;
};

struct SiteWeekAggregate {
    double supply = 0.0;
    double sold = 0.0;
    double revenue = 0.0;
    double cpm = 0.0;
    double avg_daily_buyers = 0.0;
};

// Empty when the site supplied nothing that week: such rows are left out
// of the panel.
std::optional<SiteWeekAggregate> aggregate_outcomes(const SiteWeekOutcomes& cell);

} // namespace adx::pipeline
