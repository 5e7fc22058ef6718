#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "adx/econ/panel.hpp"
#include "adx/market/config.hpp"

namespace adx::pipeline {

// Two years of weekly rows. partial_flag and full_flag mark the disclosure
// periods in both years; the regimes themselves only change in the
// treatment year (year 1) unless treatment_year_only is off.
struct TimelineConfig {
    int weeks_per_year = 27;
    int partial_start_week = 12; // weeks are 1-based
    int full_start_week = 16;
    bool treatment_year_only = true;

    void validate() const;
    int partial_flag(int week) const;
    int full_flag(int week) const;
    // Regime in force for (year, week).
    market::DisclosureRegime::Kind regime(int year, int week) const;
};

// Mechanism mode: every site is its own simulated exchange. Site values
// persist over both years; residuals and impression sites are redrawn each
// week, and the weekly supply varies around market.n_impressions.
struct MechanismSettings {
    market::MarketConfig market;
    std::vector<market::MarketConfig> per_site; // optional, one per site, overrides `market`
    market::BidderIndex treated_bidder = 0;      // sees sites during the partial period
};

// Reduced-form mode: CPM is linear in the panel regressors plus a site
// effect, optional iid noise and additive uplifts. Uplift keys: "partial",
// "full", "partial:<tag>", "full:<tag>"; a tagged uplift applies to sites
// carrying the tag. Uplifts apply only where the regime is actually in force.
struct ReducedFormSettings {
    double base_cpm = 0.88;
    double site_sd = 0.3;
    double year_effect = 0.193;
    double partial_period = -0.006;
    double full_period = 0.182;
    double supply_coef = -0.001;
    double ad_spend_coef = 0.0002;
    double noise_sd = 0.0;
    std::map<std::string, double> uplifts;
    double base_buyers = 30.0;
    double buyers_sd = 8.0;
    double weekly_supply = 3.5e6;
};

struct PanelGeneratorConfig {
    TimelineConfig timeline;
    std::size_t n_sites = 10;
    std::uint64_t seed = 0;
    std::optional<MechanismSettings> mechanism;
    std::optional<ReducedFormSettings> reduced_form;
    std::map<std::string, std::set<std::string>> site_tags;
    double supply_sd = 0.1;        // log-sd of weekly supply around its site mean
    double ad_spend_mean = 100.0;
    double ad_spend_sd = 0.05;     // relative week-to-week variation

    // Exactly one mode must be set; throws ConfigError otherwise.
    void validate() const;
    std::vector<std::string> site_ids() const;

    // Keys: timeline, n_sites, seed, mechanism {market, per_site, treated_bidder},
    // reduced_form {...}, site_tags, supply_sd, ad_spend_mean, ad_spend_sd.
    static PanelGeneratorConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
};

struct GeneratedPanel {
    std::vector<econ::PanelObservation> rows;
    std::string mode; // mechanism or reduced_form
    nlohmann::json provenance;
    std::vector<std::string> warnings;
};

// Rows ordered by site, year, week. Weight = supplied impressions; extra
// columns carry avg_daily_buyers and revenue.
GeneratedPanel generate_panel(const PanelGeneratorConfig& config);

// Independent engine for (seed, stream, index).
market::Rng stream_rng(std::uint64_t seed, std::uint32_t stream, std::uint32_t index);

} // namespace adx::pipeline
