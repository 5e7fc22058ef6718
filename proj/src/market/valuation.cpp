#include "adx/market/valuation.hpp"

#include "adx/errors.hpp"

namespace adx::market {

bool ValuationDraw::operator==(const ValuationDraw& other) const {
    return site_values.rows() == other.site_values.rows() && site_values.cols() == other.site_values.cols() &&
           residuals.rows() == other.residuals.rows() && residuals.cols() == other.residuals.cols() &&
           site_values == other.site_values && residuals == other.residuals &&
           site_of_impression == other.site_of_impression;
}

Eigen::MatrixXd draw_site_values(const MarketConfig& config, Rng& rng) {
    config.validate();
    std::normal_distribution<double> standard(0.0, 1.0);
    Eigen::MatrixXd values(config.n_bidders, config.n_sites);
    for (std::size_t i = 0; i < config.n_bidders; ++i) {
        for (std::size_t k = 0; k < config.n_sites; ++k) {
            // Always consume a variate so sigma = 0 keeps the stream aligned.
            values(i, k) = config.site_mean(k) + config.sigma * standard(rng);
        }
    }
    return values;
}

ValuationDraw draw_impressions(const MarketConfig& config, Eigen::MatrixXd site_values, Rng& rng) {
    config.validate();
    if (static_cast<std::size_t>(site_values.rows()) != config.n_bidders ||
        static_cast<std::size_t>(site_values.cols()) != config.n_sites) {
        throw ConfigError("site value matrix does not match n_bidders x n_sites");
    }
    std::normal_distribution<double> standard(0.0, 1.0);
    std::discrete_distribution<SiteIndex> site_pick(config.site_shares.begin(), config.site_shares.end());

    ValuationDraw draw;
    draw.site_values = std::move(site_values);
    draw.residuals.resize(config.n_bidders, config.n_impressions);
    draw.site_of_impression.resize(config.n_impressions);
    for (std::size_t j = 0; j < config.n_impressions; ++j) {
        draw.site_of_impression[j] = site_pick(rng);
        for (std::size_t i = 0; i < config.n_bidders; ++i) {
            draw.residuals(i, j) = config.omega * standard(rng);
        }
    }
    return draw;
}

ValuationDraw draw_valuations(const MarketConfig& config, Rng& rng) {
    auto site_values = draw_site_values(config, rng);
    return draw_impressions(config, std::move(site_values), rng);
}

namespace {

double pooled_value(const ValuationDraw& draw, const MarketConfig& config, BidderIndex bidder) {
    double pooled = 0.0;
    for (std::size_t k = 0; k < config.n_sites; ++k) pooled += config.site_shares[k] * draw.site_values(bidder, k);
    return pooled;
}

} // namespace

Eigen::VectorXd pooled_site_values(const ValuationDraw& draw, const MarketConfig& config) {
    Eigen::VectorXd pooled(draw.site_values.rows());
    for (Eigen::Index i = 0; i < pooled.size(); ++i) pooled(i) = pooled_value(draw, config, static_cast<BidderIndex>(i));
    return pooled;
}

double effective_valuation(const ValuationDraw& draw, const MarketConfig& config,
                           const DisclosureRegime& regime, BidderIndex bidder, std::size_t impression) {
    if (bidder >= draw.n_bidders()) throw InputError("bidder index out of range");
    if (impression >= draw.n_impressions()) throw InputError("impression index out of range");
    const double residual = draw.residuals(bidder, impression);
    if (regime.discloses_to(bidder)) {
        return residual + draw.site_values(bidder, draw.site_of_impression[impression]);
    }
    return residual + pooled_value(draw, config, bidder);
}

} // namespace adx::market
