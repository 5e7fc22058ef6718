#pragma once

#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "adx/market/config.hpp"

namespace adx::market {

// JSON keys match the MarketConfig field names. Missing keys keep their
// defaults; site_shares defaults to equal shares over n_sites. Unknown keys
// and invalid values raise ConfigError. The result is validated.
MarketConfig market_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const MarketConfig& config);

// A scenario file: the MarketConfig keys plus an optional "regime"
// (none|partial|full) and "treated" (bidder indices, partial only).
struct ScenarioFile {
    MarketConfig config;
    std::optional<DisclosureRegime::Kind> regime;
    std::set<BidderIndex> treated;
};

ScenarioFile scenario_from_json(const nlohmann::json& doc);

// Builds the regime of `kind`; a partial regime needs a nonempty treated set.
DisclosureRegime make_regime(DisclosureRegime::Kind kind, const std::set<BidderIndex>& treated,
                             const MarketConfig& config);

nlohmann::json parse_json_text(const std::string& text, const std::string& what);

} // namespace adx::market
