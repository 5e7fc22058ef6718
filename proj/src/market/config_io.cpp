#include "adx/market/config_io.hpp"

#include "adx/errors.hpp"

namespace adx::market {

namespace {

const std::set<std::string> kConfigKeys{"n_bidders", "n_sites", "site_shares", "mu",   "delta",
                                        "sigma",     "omega",   "n_impressions", "seed"};

template <typename T>
void read_field(const nlohmann::json& doc, const char* key, T& target) {
    if (!doc.contains(key)) return;
    try {
        target = doc.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string(key) + ": invalid value " + doc.at(key).dump());
    }
}

void read_count(const nlohmann::json& doc, const char* key, std::size_t& target) {
    if (!doc.contains(key)) return;
    const auto& value = doc.at(key);
    if (!value.is_number_integer() || value.get<long long>() < 0)
        throw ConfigError(std::string(key) + ": expected a non-negative integer, got " + value.dump());
    target = value.get<std::size_t>();
}

} // namespace

MarketConfig market_config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("market config must be a JSON object");
    MarketConfig config;
    read_count(doc, "n_bidders", config.n_bidders);
    read_count(doc, "n_sites", config.n_sites);
    config.site_shares = MarketConfig::equal_shares(config.n_sites);
    read_field(doc, "site_shares", config.site_shares);
    read_field(doc, "mu", config.mu);
    read_field(doc, "delta", config.delta);
    read_field(doc, "sigma", config.sigma);
    read_field(doc, "omega", config.omega);
    read_count(doc, "n_impressions", config.n_impressions);
    if (doc.contains("seed")) {
        const auto& seed = doc.at("seed");
        if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
            throw ConfigError("seed: expected an unsigned 64-bit integer, got " + seed.dump());
        config.seed = seed.get<std::uint64_t>();
    }
    config.validate();
    return config;
}

nlohmann::json to_json(const MarketConfig& config) {
    return nlohmann::json{{"n_bidders", config.n_bidders}, {"n_sites", config.n_sites},
                          {"site_shares", config.site_shares}, {"mu", config.mu},
                          {"delta", config.delta},           {"sigma", config.sigma},
                          {"omega", config.omega},           {"n_impressions", config.n_impressions},
                          {"seed", config.seed}};
}

ScenarioFile scenario_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("scenario config must be a JSON object");
    nlohmann::json market = nlohmann::json::object();
    for (const auto& [key, value] : doc.items()) {
        if (kConfigKeys.contains(key)) {
            market[key] = value;
        } else if (key != "regime" && key != "treated") {
            throw ConfigError("unknown scenario config key '" + key + "'");
        }
    }
    ScenarioFile file;
    file.config = market_config_from_json(market);
    if (doc.contains("regime")) {
        if (!doc.at("regime").is_string()) throw ConfigError("regime: expected a string");
        file.regime = DisclosureRegime::parse_kind(doc.at("regime").get<std::string>());
    }
    if (doc.contains("treated")) {
        const auto& treated = doc.at("treated");
        if (!treated.is_array()) throw ConfigError("treated: expected an array of bidder indices");
        for (const auto& id : treated) {
            if (!id.is_number_integer() || id.get<long long>() < 0)
                throw ConfigError("treated: invalid bidder index " + id.dump());
            file.treated.insert(id.get<BidderIndex>());
        }
    }
    return file;
}

DisclosureRegime make_regime(DisclosureRegime::Kind kind, const std::set<BidderIndex>& treated,
                             const MarketConfig& config) {
    DisclosureRegime regime = DisclosureRegime::none();
    switch (kind) {
    case DisclosureRegime::Kind::None:
        break;
    case DisclosureRegime::Kind::Full:
        regime = DisclosureRegime::full();
        break;
    case DisclosureRegime::Kind::Partial:
        regime = DisclosureRegime::partial(treated);
        break;
    }
    regime.validate(config);
    return regime;
}

nlohmann::json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(what + ": malformed JSON: " + e.what());
    }
}

} // namespace adx::market
