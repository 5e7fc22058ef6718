#pragma once

#include <vector>

#include <Eigen/Dense>

#include "adx/market/config.hpp"

namespace adx::market {

// One realization of every random quantity behind a simulated market.
//   site_values(i, k) = s_ik, bidder i's value for site k (N x K)
//   residuals(i, j)   = r_ij, bidder i's residual value for impression j (N x M)
struct ValuationDraw {
    Eigen::MatrixXd site_values;
    Eigen::MatrixXd residuals;
    std::vector<SiteIndex> site_of_impression;

    std::size_t n_bidders() const { return static_cast<std::size_t>(site_values.rows()); }
    std::size_t n_impressions() const { return site_of_impression.size(); }

    bool operator==(const ValuationDraw& other) const;
};

// Site values, drawn bidder by bidder. Consumes exactly N*K normal variates.
Eigen::MatrixXd draw_site_values(const MarketConfig& config, Rng& rng);

// Impression sites and residuals for config.n_impressions impressions, paired
// with an existing site-value matrix. For each impression the site is drawn
// first, then one residual per bidder.
ValuationDraw draw_impressions(const MarketConfig& config, Eigen::MatrixXd site_values, Rng& rng);

ValuationDraw draw_valuations(const MarketConfig& config, Rng& rng);

// What bidder i believes impression j is worth under `regime`: r_ij + s_ik when
// the site is disclosed to i, otherwise r_ij plus the share-weighted mean of
// i's site values.
double effective_valuation(const ValuationDraw& draw, const MarketConfig& config,
                           const DisclosureRegime& regime, BidderIndex bidder, std::size_t impression);

// Share-weighted mean site value per bidder (the undisclosed term).
Eigen::VectorXd pooled_site_values(const ValuationDraw& draw, const MarketConfig& config);

} // namespace adx::market
