#include "adx/pipeline/buyers.hpp"

#include <cmath>

#include "adx/errors.hpp"
#include "adx/market/config_io.hpp"
#include "adx/market/scenario.hpp"
#include "adx/market/valuation.hpp"
#include "adx/pipeline/generate.hpp"

namespace adx::pipeline {

namespace {

constexpr std::uint32_t kBuyerStream = 7;

std::string padded(const std::string& prefix, std::size_t index, std::size_t count) {
    const auto width = std::max<std::size_t>(2, std::to_string(count).size());
    const auto number = std::to_string(index + 1);
    return prefix + std::string(width - std::min(width, number.size()), '0') + number;
}

} // namespace

void BuyerSimConfig::validate() const {
    market.validate();
    if (market.n_bidders < 2) throw ConfigError("market.n_bidders must be at least 2 buyers");
    if (weeks < 2) throw ConfigError("weeks must be at least 2");
    if (intervention_week < 2 || intervention_week > weeks)
        throw ConfigError("intervention_week must lie in 2..weeks");
    if (treated_bidder >= market.n_bidders) throw ConfigError("treated_bidder is out of range");
    if (!(supply_sd >= 0.0)) throw ConfigError("supply_sd must be >= 0");
    if (!(impression_scale > 0.0) || !std::isfinite(impression_scale))
        throw ConfigError("impression_scale must be positive");
}

BuyerSimConfig BuyerSimConfig::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("buyer simulation config must be a JSON object");
    const std::set<std::string> known{"market",  "weeks", "intervention_week", "treated_bidder",
                                      "treat",   "seed",  "supply_sd",         "impression_scale"};
    for (const auto& [key, value] : doc.items())
        if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in buyer simulation config");
    BuyerSimConfig config;
    if (doc.contains("market")) config.market = market::market_config_from_json(doc.at("market"));
    try {
        if (doc.contains("weeks")) config.weeks = doc.at("weeks").get<int>();
        if (doc.contains("intervention_week")) config.intervention_week = doc.at("intervention_week").get<int>();
        if (doc.contains("treated_bidder")) config.treated_bidder = doc.at("treated_bidder").get<std::size_t>();
        if (doc.contains("treat")) config.treat = doc.at("treat").get<bool>();
        if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("supply_sd")) config.supply_sd = doc.at("supply_sd").get<double>();
        if (doc.contains("impression_scale")) config.impression_scale = doc.at("impression_scale").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("buyer simulation config: ") + e.what());
    }
    config.validate();
    return config;
}

nlohmann::json BuyerSimConfig::to_json() const {
    return {{"market", market::to_json(market)},
            {"weeks", weeks},
            {"intervention_week", intervention_week},
            {"treated_bidder", treated_bidder},
            {"treat", treat},
            {"seed", seed},
            {"supply_sd", supply_sd},
            {"impression_scale", impression_scale}};
}

std::string buyer_id(market::BidderIndex bidder, std::size_t n_bidders) { return padded("buyer", bidder, n_bidders); }

std::string genre_id(market::SiteIndex site, std::size_t n_sites) { return padded("genre", site, n_sites); }

std::vector<synth::BuyerWeekRecord> simulate_buyer_records(const BuyerSimConfig& config) {
    config.validate();
    const auto n = config.market.n_bidders;
    const auto k = config.market.n_sites;
    auto rng = stream_rng(config.seed, kBuyerStream, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::MatrixXd site_values = market::draw_site_values(config.market, rng);

    std::vector<synth::BuyerWeekRecord> records;
    records.reserve(n * k * static_cast<std::size_t>(config.weeks));
    for (int week = 1; week <= config.weeks; ++week) {
        market::MarketConfig week_market = config.market;
        week_market.n_impressions = static_cast<std::size_t>(std::max(
            1.0, std::round(static_cast<double>(config.market.n_impressions) * std::exp(config.supply_sd * normal(rng)))));
        const auto regime = config.treat && week >= config.intervention_week
                                ? market::DisclosureRegime::partial({config.treated_bidder})
                                : market::DisclosureRegime::none();
        const auto draw = market::draw_impressions(week_market, site_values, rng);
        const auto outcomes = market::run_market(draw, week_market, regime, rng);

        Eigen::MatrixXd wins = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
        Eigen::MatrixXd paid = wins;
        for (const auto& outcome : outcomes) {
            if (!outcome.winner) continue;
            const auto i = static_cast<Eigen::Index>(*outcome.winner);
            const auto s = static_cast<Eigen::Index>(outcome.site_id);
            wins(i, s) += 1.0;
            paid(i, s) += outcome.price;
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t s = 0; s < k; ++s) {
                const auto ii = static_cast<Eigen::Index>(i);
                const auto ss = static_cast<Eigen::Index>(s);
                synth::BuyerWeekRecord r;
                r.buyer_id = buyer_id(i, n);
                r.week = week;
                r.genre = genre_id(s, k);
                r.impressions_won = wins(ii, ss) * config.impression_scale;
                r.avg_price = wins(ii, ss) > 0.0 ? paid(ii, ss) / wins(ii, ss) : 0.0;
                records.push_back(std::move(r));
            }
        }
    }
    return records;
}

} // namespace adx::pipeline
