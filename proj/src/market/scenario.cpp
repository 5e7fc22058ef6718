#include "adx/market/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "adx/errors.hpp"
#include "adx/text.hpp"

namespace adx::market {

namespace {

// Linear interpolation between closest ranks on sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double position = q * static_cast<double>(sorted.size() - 1);
    const auto lower = static_cast<std::size_t>(std::floor(position));
    const auto upper = std::min(lower + 1, sorted.size() - 1);
    const double fraction = position - static_cast<double>(lower);
    return sorted[lower] + fraction * (sorted[upper] - sorted[lower]);
}

} // namespace

std::vector<AuctionOutcome> run_market(const ValuationDraw& draw, const MarketConfig& config,
                                       const DisclosureRegime& regime, Rng& rng) {
    config.validate();
    regime.validate(config);
    const std::size_t n = draw.n_bidders();
    const Eigen::VectorXd pooled = pooled_site_values(draw, config);

    std::vector<double> bids(n);
    std::vector<AuctionOutcome> outcomes;
    outcomes.reserve(draw.n_impressions());
    for (std::size_t j = 0; j < draw.n_impressions(); ++j) {
        const SiteIndex site = draw.site_of_impression[j];
        for (std::size_t i = 0; i < n; ++i) {
            const double site_term = regime.discloses_to(i) ? draw.site_values(i, site) : pooled(i);
            bids[i] = draw.residuals(i, j) + site_term;
        }
        const auto result = run_auction(bids, rng);
        outcomes.push_back({j, site, result.winner, result.price, result.n_participants});
    }
    return outcomes;
}

ScenarioSummary summarize(std::span<const AuctionOutcome> outcomes, std::size_t n_sites, std::size_t n_bidders) {
    ScenarioSummary summary;
    summary.site_impressions.assign(n_sites, 0);
    summary.site_sold.assign(n_sites, 0);
    summary.site_mean_price.assign(n_sites, 0.0);
    summary.site_p50.assign(n_sites, 0.0);
    summary.site_p90.assign(n_sites, 0.0);
    summary.site_p99.assign(n_sites, 0.0);
    summary.bidder_win_share.assign(n_bidders, 0.0);

    std::vector<std::vector<double>> prices(n_sites);
    std::vector<std::size_t> wins(n_bidders, 0);
    std::size_t sold = 0;
    std::size_t zero_price = 0;
    double total_price = 0.0;
    for (const auto& outcome : outcomes) {
        if (outcome.site_id >= n_sites) throw InputError("summarize: site index out of range");
        ++summary.site_impressions[outcome.site_id];
        if (!outcome.winner) continue;
        if (*outcome.winner >= n_bidders) throw InputError("summarize: winner index out of range");
        ++wins[*outcome.winner];
        ++summary.site_sold[outcome.site_id];
        prices[outcome.site_id].push_back(outcome.price);
        total_price += outcome.price;
        ++sold;
        if (outcome.price == 0.0) ++zero_price;
    }

    for (std::size_t k = 0; k < n_sites; ++k) {
        auto& site_prices = prices[k];
        if (site_prices.empty()) continue;
        double sum = 0.0;
        for (double p : site_prices) sum += p;
        summary.site_mean_price[k] = sum / static_cast<double>(site_prices.size());
        std::sort(site_prices.begin(), site_prices.end());
        summary.site_p50[k] = quantile(site_prices, 0.50);
        summary.site_p90[k] = quantile(site_prices, 0.90);
        summary.site_p99[k] = quantile(site_prices, 0.99);
    }
    const double total = static_cast<double>(outcomes.size());
    if (!outcomes.empty()) {
        for (std::size_t i = 0; i < n_bidders; ++i) summary.bidder_win_share[i] = static_cast<double>(wins[i]) / total;
        summary.unsold_share = static_cast<double>(outcomes.size() - sold) / total;
    }
    if (sold > 0) {
        summary.overall_mean_price = total_price / static_cast<double>(sold);
        summary.zero_price_share = static_cast<double>(zero_price) / static_cast<double>(sold);
    }
    return summary;
}

std::vector<Scenario> simulate_paired(const MarketConfig& config, std::span<const DisclosureRegime> regimes) {
    config.validate();
    for (const auto& regime : regimes) regime.validate(config);

    Rng rng = make_rng(config.seed);
    const ValuationDraw draw = draw_valuations(config, rng);

    std::vector<Scenario> scenarios;
    scenarios.reserve(regimes.size());
    for (const auto& regime : regimes) {
        Rng auction_rng = rng;
        Scenario scenario;
        scenario.regime = regime;
        scenario.outcomes = run_market(draw, config, regime, auction_rng);
        scenario.summary = summarize(scenario.outcomes, config.n_sites, config.n_bidders);
        scenarios.push_back(std::move(scenario));
    }
    return scenarios;
}

Scenario simulate_scenario(const MarketConfig& config, const DisclosureRegime& regime) {
    const DisclosureRegime regimes[] = {regime};
    return std::move(simulate_paired(config, regimes).front());
}

PartialReport compare_partial(const Scenario& none, const Scenario& partial, BidderIndex treated) {
    const auto treated_stats = [treated](const Scenario& scenario) {
        std::size_t wins = 0;
        double paid = 0.0;
        for (const auto& outcome : scenario.outcomes) {
            if (outcome.winner == treated) {
                ++wins;
                paid += outcome.price;
            }
        }
        const double share =
            scenario.outcomes.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(scenario.outcomes.size());
        const double mean_price = wins > 0 ? paid / static_cast<double>(wins) : 0.0;
        return std::pair{share, mean_price};
    };
    PartialReport report;
    report.treated = treated;
    std::tie(report.win_share_treated_none, report.mean_price_treated_none) = treated_stats(none);
    std::tie(report.win_share_treated_partial, report.mean_price_treated_partial) = treated_stats(partial);
    return report;
}

PartialReport simulate_partial(const MarketConfig& config, BidderIndex treated) {
    config.validate();
    if (treated >= config.n_bidders) {
        throw InputError("treated bidder " + std::to_string(treated) + " is out of range (n_bidders = " +
                         std::to_string(config.n_bidders) + ")");
    }
    const DisclosureRegime regimes[] = {DisclosureRegime::none(), DisclosureRegime::partial({treated})};
    const auto scenarios = simulate_paired(config, regimes);
    return compare_partial(scenarios[0], scenarios[1], treated);
}

void write_outcomes_csv(std::ostream& out, std::span<const AuctionOutcome> outcomes) {
    out << "impression_id,site_id,winner,price,n_participants\n";
    for (const auto& o : outcomes) {
        out << o.impression_id << ',' << o.site_id << ',';
        if (o.winner) out << *o.winner;
        out << ',' << text::real(o.price) << ',' << o.n_participants << '\n';
    }
}

void write_summary_kv(std::ostream& out, const ScenarioSummary& summary, const std::string& prefix) {
    out << prefix << "overall_mean_price=" << text::real(summary.overall_mean_price) << '\n';
    out << prefix << "zero_price_share=" << text::real(summary.zero_price_share) << '\n';
    out << prefix << "unsold_share=" << text::real(summary.unsold_share) << '\n';
    for (std::size_t k = 0; k < summary.site_mean_price.size(); ++k) {
        out << prefix << "site" << k << "_impressions=" << summary.site_impressions[k] << '\n';
        out << prefix << "site" << k << "_sold=" << summary.site_sold[k] << '\n';
        out << prefix << "site" << k << "_mean_price=" << text::real(summary.site_mean_price[k]) << '\n';
        out << prefix << "site" << k << "_p50=" << text::real(summary.site_p50[k]) << '\n';
        out << prefix << "site" << k << "_p90=" << text::real(summary.site_p90[k]) << '\n';
        out << prefix << "site" << k << "_p99=" << text::real(summary.site_p99[k]) << '\n';
    }
    for (std::size_t i = 0; i < summary.bidder_win_share.size(); ++i) {
        out << prefix << "bidder" << i << "_win_share=" << text::real(summary.bidder_win_share[i]) << '\n';
    }
}

void write_site_table(std::ostream& out, const ScenarioSummary& summary) {
    out << "site_id,impressions,sold,mean_price,p50,p90,p99\n";
    for (std::size_t k = 0; k < summary.site_mean_price.size(); ++k) {
        out << k << ',' << summary.site_impressions[k] << ',' << summary.site_sold[k] << ','
            << text::real(summary.site_mean_price[k]) << ',' << text::real(summary.site_p50[k]) << ','
            << text::real(summary.site_p90[k]) << ',' << text::real(summary.site_p99[k]) << '\n';
    }
}

} // namespace adx::market
