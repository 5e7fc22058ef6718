#include "adx/pipeline/generate.hpp"

#include <algorithm>
#include <cmath>

#include "adx/errors.hpp"
#include "adx/market/config_io.hpp"
#include "adx/market/scenario.hpp"
#include "adx/market/valuation.hpp"
#include "adx/pipeline/aggregate.hpp"

namespace adx::pipeline {

namespace {

constexpr std::uint32_t kControlStream = 1;
constexpr std::uint32_t kMarketStream = 2;
constexpr std::uint32_t kReducedFormStream = 3;

void check_keys(const nlohmann::json& doc, const std::set<std::string>& known, const std::string& where) {
    if (!doc.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : doc.items())
        if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const nlohmann::json& doc, const char* key, T& target, const std::string& where) {
    if (!doc.contains(key)) return;
    try {
        target = doc.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + ": invalid value " + doc.at(key).dump());
    }
}

bool valid_uplift_key(const std::string& key) {
    for (const std::string prefix : {"partial", "full"}) {
        if (key == prefix) return true;
        if (key.size() > prefix.size() + 1 && key.compare(0, prefix.size() + 1, prefix + ":") == 0) return true;
    }
    return false;
}

double uplift_for(const ReducedFormSettings& rf, market::DisclosureRegime::Kind kind,
                  const std::set<std::string>& tags) {
    if (kind == market::DisclosureRegime::Kind::None) return 0.0;
    const std::string base = kind == market::DisclosureRegime::Kind::Partial ? "partial" : "full";
    double total = 0.0;
    if (const auto it = rf.uplifts.find(base); it != rf.uplifts.end()) total += it->second;
    for (const auto& tag : tags)
        if (const auto it = rf.uplifts.find(base + ":" + tag); it != rf.uplifts.end()) total += it->second;
    return total;
}

} // namespace

market::Rng stream_rng(std::uint64_t seed, std::uint32_t stream, std::uint32_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), stream,
                      index};
    return market::Rng(seq);
}

void TimelineConfig::validate() const {
    if (weeks_per_year < 2) throw ConfigError("timeline.weeks_per_year must be at least 2");
    if (partial_start_week < 1) throw ConfigError("timeline.partial_start_week must be at least 1");
    if (full_start_week <= partial_start_week)
        throw ConfigError("timeline.full_start_week must come after partial_start_week");
    if (full_start_week > weeks_per_year) throw ConfigError("timeline.full_start_week exceeds weeks_per_year");
}

int TimelineConfig::partial_flag(int week) const {
    return week >= partial_start_week && week < full_start_week ? 1 : 0;
}

int TimelineConfig::full_flag(int week) const { return week >= full_start_week ? 1 : 0; }

market::DisclosureRegime::Kind TimelineConfig::regime(int year, int week) const {
    using Kind = market::DisclosureRegime::Kind;
    if (treatment_year_only && year != 1) return Kind::None;
    if (full_flag(week)) return Kind::Full;
    if (partial_flag(week)) return Kind::Partial;
    return Kind::None;
}

void PanelGeneratorConfig::validate() const {
    timeline.validate();
    if (n_sites < 2) throw ConfigError("n_sites must be at least 2");
    if (mechanism && reduced_form)
        throw ConfigError("conflicting modes: set either mechanism or reduced_form, not both");
    if (!mechanism && !reduced_form) throw ConfigError("no generation mode: set mechanism or reduced_form");
    if (!(supply_sd >= 0.0)) throw ConfigError("supply_sd must be >= 0");
    if (!(ad_spend_mean > 0.0)) throw ConfigError("ad_spend_mean must be positive");
    if (!(ad_spend_sd >= 0.0)) throw ConfigError("ad_spend_sd must be >= 0");
    if (mechanism) {
        if (!mechanism->per_site.empty() && mechanism->per_site.size() != n_sites)
            throw ConfigError("mechanism.per_site needs one market config per site (" + std::to_string(n_sites) + ")");
        std::vector<market::MarketConfig> markets = mechanism->per_site;
        if (markets.empty()) markets.push_back(mechanism->market);
        for (const auto& m : markets) {
            m.validate();
            if (mechanism->treated_bidder >= m.n_bidders)
                throw ConfigError("mechanism.treated_bidder is out of range for a site with " +
                                  std::to_string(m.n_bidders) + " bidders");
        }
    }
    if (reduced_form) {
        const auto& rf = *reduced_form;
        if (!(rf.noise_sd >= 0.0)) throw ConfigError("reduced_form.noise_sd must be >= 0");
        if (!(rf.site_sd >= 0.0)) throw ConfigError("reduced_form.site_sd must be >= 0");
        if (!(rf.buyers_sd >= 0.0)) throw ConfigError("reduced_form.buyers_sd must be >= 0");
        if (!(rf.weekly_supply > 0.0)) throw ConfigError("reduced_form.weekly_supply must be positive");
        for (const auto& [key, value] : rf.uplifts) {
            if (!valid_uplift_key(key))
                throw ConfigError("reduced_form.uplifts: key '" + key + "' is not partial, full, partial:<tag> or full:<tag>");
            if (!std::isfinite(value)) throw ConfigError("reduced_form.uplifts." + key + " must be finite");
        }
    }
    const auto ids = site_ids();
    for (const auto& [site, tags] : site_tags)
        if (std::find(ids.begin(), ids.end(), site) == ids.end())
            throw ConfigError("site_tags: unknown site '" + site + "'");
}

std::vector<std::string> PanelGeneratorConfig::site_ids() const {
    const auto width = std::max<std::size_t>(2, std::to_string(n_sites).size());
    std::vector<std::string> ids;
    for (std::size_t s = 1; s <= n_sites; ++s) {
        auto number = std::to_string(s);
        ids.push_back("site" + std::string(width - number.size(), '0') + number);
    }
    return ids;
}

PanelGeneratorConfig PanelGeneratorConfig::from_json(const nlohmann::json& doc) {
    check_keys(doc,
               {"timeline", "n_sites", "seed", "mechanism", "reduced_form", "site_tags", "supply_sd", "ad_spend_mean",
                "ad_spend_sd"},
               "panel config");
    PanelGeneratorConfig config;
    if (doc.contains("timeline")) {
        const auto& t = doc.at("timeline");
        check_keys(t, {"weeks_per_year", "partial_start_week", "full_start_week", "treatment_year_only"}, "timeline");
        read(t, "weeks_per_year", config.timeline.weeks_per_year, "timeline");
        read(t, "partial_start_week", config.timeline.partial_start_week, "timeline");
        read(t, "full_start_week", config.timeline.full_start_week, "timeline");
        read(t, "treatment_year_only", config.timeline.treatment_year_only, "timeline");
    }
    read(doc, "n_sites", config.n_sites, "panel config");
    read(doc, "seed", config.seed, "panel config");
    read(doc, "supply_sd", config.supply_sd, "panel config");
    read(doc, "ad_spend_mean", config.ad_spend_mean, "panel config");
    read(doc, "ad_spend_sd", config.ad_spend_sd, "panel config");
    if (doc.contains("site_tags")) {
        const auto& tags = doc.at("site_tags");
        if (!tags.is_object()) throw ConfigError("site_tags must map site ids to tag arrays");
        for (const auto& [site, list] : tags.items()) {
            std::vector<std::string> values;
            read(tags, site.c_str(), values, "site_tags");
            config.site_tags[site] = {values.begin(), values.end()};
        }
    }
    if (doc.contains("mechanism")) {
        const auto& m = doc.at("mechanism");
        check_keys(m, {"market", "per_site", "treated_bidder"}, "mechanism");
        MechanismSettings settings;
        if (m.contains("market")) settings.market = market::market_config_from_json(m.at("market"));
        if (m.contains("per_site")) {
            if (!m.at("per_site").is_array()) throw ConfigError("mechanism.per_site must be an array");
            for (const auto& site : m.at("per_site")) settings.per_site.push_back(market::market_config_from_json(site));
        }
        read(m, "treated_bidder", settings.treated_bidder, "mechanism");
        config.mechanism = settings;
    }
    if (doc.contains("reduced_form")) {
        const auto& r = doc.at("reduced_form");
        check_keys(r,
                   {"base_cpm", "site_sd", "year_effect", "partial_period", "full_period", "supply_coef",
                    "ad_spend_coef", "noise_sd", "uplifts", "base_buyers", "buyers_sd", "weekly_supply"},
                   "reduced_form");
        ReducedFormSettings rf;
        read(r, "base_cpm", rf.base_cpm, "reduced_form");
        read(r, "site_sd", rf.site_sd, "reduced_form");
        read(r, "year_effect", rf.year_effect, "reduced_form");
        read(r, "partial_period", rf.partial_period, "reduced_form");
        read(r, "full_period", rf.full_period, "reduced_form");
        read(r, "supply_coef", rf.supply_coef, "reduced_form");
        read(r, "ad_spend_coef", rf.ad_spend_coef, "reduced_form");
        read(r, "noise_sd", rf.noise_sd, "reduced_form");
        read(r, "uplifts", rf.uplifts, "reduced_form");
        read(r, "base_buyers", rf.base_buyers, "reduced_form");
        read(r, "buyers_sd", rf.buyers_sd, "reduced_form");
        read(r, "weekly_supply", rf.weekly_supply, "reduced_form");
        config.reduced_form = rf;
    }
    config.validate();
    return config;
}

nlohmann::json PanelGeneratorConfig::to_json() const {
    nlohmann::json doc;
    doc["timeline"] = {{"weeks_per_year", timeline.weeks_per_year},
                       {"partial_start_week", timeline.partial_start_week},
                       {"full_start_week", timeline.full_start_week},
                       {"treatment_year_only", timeline.treatment_year_only}};
    doc["n_sites"] = n_sites;
    doc["seed"] = seed;
    doc["supply_sd"] = supply_sd;
    doc["ad_spend_mean"] = ad_spend_mean;
    doc["ad_spend_sd"] = ad_spend_sd;
    auto tags = nlohmann::json::object();
    for (const auto& [site, labels] : site_tags) tags[site] = labels;
    doc["site_tags"] = tags;
    if (mechanism) {
        auto per_site = nlohmann::json::array();
        for (const auto& m : mechanism->per_site) per_site.push_back(market::to_json(m));
        doc["mechanism"] = {{"market", market::to_json(mechanism->market)},
                            {"per_site", per_site},
                            {"treated_bidder", mechanism->treated_bidder}};
    }
    if (reduced_form) {
        const auto& rf = *reduced_form;
        doc["reduced_form"] = {{"base_cpm", rf.base_cpm},           {"site_sd", rf.site_sd},
                               {"year_effect", rf.year_effect},     {"partial_period", rf.partial_period},
                               {"full_period", rf.full_period},     {"supply_coef", rf.supply_coef},
                               {"ad_spend_coef", rf.ad_spend_coef}, {"noise_sd", rf.noise_sd},
                               {"uplifts", rf.uplifts},             {"base_buyers", rf.base_buyers},
                               {"buyers_sd", rf.buyers_sd},         {"weekly_supply", rf.weekly_supply}};
    }
    return doc;
}

GeneratedPanel generate_panel(const PanelGeneratorConfig& config) {
    config.validate();
    GeneratedPanel panel;
    panel.mode = config.mechanism ? "mechanism" : "reduced_form";
    panel.provenance = {{"mode", panel.mode}, {"seed", config.seed}, {"config", config.to_json()}};
    const auto& timeline = config.timeline;
    const auto ids = config.site_ids();
    std::normal_distribution<double> normal(0.0, 1.0);

    for (std::size_t s = 0; s < config.n_sites; ++s) {
        const auto index = static_cast<std::uint32_t>(s);
        const auto tags_it = config.site_tags.find(ids[s]);
        const std::set<std::string> tags = tags_it == config.site_tags.end() ? std::set<std::string>{} : tags_it->second;

        const market::MarketConfig* site_market = nullptr;
        if (config.mechanism) {
            site_market = config.mechanism->per_site.empty() ? &config.mechanism->market
                                                             : &config.mechanism->per_site[s];
        }
        const double mean_supply = config.mechanism ? static_cast<double>(site_market->n_impressions)
                                                    : config.reduced_form->weekly_supply;

        // Controls come from their own stream, so both modes see the same
        // supply and ad spend for a given seed.
        auto controls = stream_rng(config.seed, kControlStream, index);
        const double ad_base = config.ad_spend_mean * std::exp(0.2 * normal(controls));
        std::vector<econ::PanelObservation> rows;
        for (int year = 0; year < 2; ++year) {
            for (int week = 1; week <= timeline.weeks_per_year; ++week) {
                econ::PanelObservation row;
                row.site_id = ids[s];
                row.year = year;
                row.week = week;
                row.weight = std::max(1.0, std::round(mean_supply * std::exp(config.supply_sd * normal(controls))));
                row.supply_millions = row.weight / 1e6;
                row.monthly_ad_spend = ad_base * (1.0 + config.ad_spend_sd * normal(controls));
                row.partial_flag = timeline.partial_flag(week);
                row.full_flag = timeline.full_flag(week);
                row.tags = tags;
                rows.push_back(std::move(row));
            }
        }

        std::vector<econ::PanelObservation> kept;
        if (config.mechanism) {
            auto rng = stream_rng(config.seed, kMarketStream, index);
            const Eigen::MatrixXd site_values = market::draw_site_values(*site_market, rng);
            for (auto& row : rows) {
                market::MarketConfig week_market = *site_market;
                week_market.n_impressions = static_cast<std::size_t>(row.weight);
                const auto kind = timeline.regime(row.year, row.week);
                const auto regime = kind == market::DisclosureRegime::Kind::Partial
                                        ? market::DisclosureRegime::partial({config.mechanism->treated_bidder})
                                        : (kind == market::DisclosureRegime::Kind::Full ? market::DisclosureRegime::full()
                                                                                        : market::DisclosureRegime::none());
                const auto draw = market::draw_impressions(week_market, site_values, rng);
                const auto outcomes = market::run_market(draw, week_market, regime, rng);
                const auto agg = aggregate_outcomes({outcomes, {}, row.weight});
                if (!agg) {
                    panel.warnings.push_back(row.site_id + " year " + std::to_string(row.year) + " week " +
                                             std::to_string(row.week) + ": no supply, row omitted");
                    continue;
                }
                row.outcome = agg->cpm;
                row.extra["avg_daily_buyers"] = agg->avg_daily_buyers;
                row.extra["revenue"] = agg->revenue;
                kept.push_back(std::move(row));
            }
        } else {
            const auto& rf = *config.reduced_form;
            auto rng = stream_rng(config.seed, kReducedFormStream, index);
            const double site_effect = rf.site_sd * normal(rng);
            const double buyers = rf.base_buyers + rf.buyers_sd * normal(rng);
            for (auto& row : rows) {
                const double noise = normal(rng);
                row.outcome = rf.base_cpm + site_effect + rf.year_effect * row.year +
                              rf.partial_period * row.partial_flag + rf.full_period * row.full_flag +
                              rf.supply_coef * row.supply_millions + rf.ad_spend_coef * row.monthly_ad_spend +
                              rf.noise_sd * noise + uplift_for(rf, timeline.regime(row.year, row.week), row.tags);
                row.extra["avg_daily_buyers"] = buyers;
                row.extra["revenue"] = row.outcome * row.weight / 1000.0;
                kept.push_back(std::move(row));
            }
        }

        double pre_sum = 0.0;
        std::size_t pre_count = 0;
        for (const auto& row : kept) {
            if (row.week < timeline.partial_start_week) {
                pre_sum += row.extra.at("avg_daily_buyers");
                ++pre_count;
            }
        }
        const double pre_buyers = pre_count > 0 ? pre_sum / static_cast<double>(pre_count) : 0.0;
        for (auto& row : kept) {
            row.avg_daily_buyers_pre = pre_buyers;
            panel.rows.push_back(std::move(row));
        }
    }
    return panel;
}

} // namespace adx::pipeline
