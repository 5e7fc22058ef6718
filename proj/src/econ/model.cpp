#include "adx/econ/model.hpp"

#include <set>

#include "adx/errors.hpp"
#include "adx/text.hpp"

namespace adx::econ {

std::string Term::name() const {
    std::string joined;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        if (i > 0) joined += "_x_";
        joined += factors[i];
    }
    return joined;
}

Term Term::parse(const std::string& text) {
    Term term;
    for (const auto& part : text::split(text, '*')) {
        const auto factor = std::string(text::trim(part));
        if (factor.empty()) throw SpecError("empty factor in term '" + text + "'");
        term.factors.push_back(factor);
    }
    return term;
}

std::string to_string(ClusterBy cluster) {
    switch (cluster) {
    case ClusterBy::Week:
        return "week";
    case ClusterBy::YearWeek:
        return "year_week";
    case ClusterBy::Site:
        return "site";
    }
    return "year_week";
}

ClusterBy parse_cluster(const std::string& text) {
    if (text == "week") return ClusterBy::Week;
    if (text == "year_week") return ClusterBy::YearWeek;
    if (text == "site") return ClusterBy::Site;
    throw SpecError("cluster: expected week|year_week|site, got '" + text + "'");
}

ModelSpec ModelSpec::from_json(const nlohmann::json& doc) {
    static const std::set<std::string> known{"outcome", "terms", "tags", "fixed_effects", "cluster",
                                             "exclude_absorbed", "pre_period_only", "placebo",
                                             "placebo_split_week", "count_absorbed_in_dof"};
    if (!doc.is_object()) throw SpecError("model spec must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!known.contains(key)) throw SpecError("unknown model spec key '" + key + "'");
    }
    ModelSpec spec;
    try {
        spec.outcome = doc.value("outcome", spec.outcome);
        if (!doc.contains("terms") || !doc.at("terms").is_array() || doc.at("terms").empty())
            throw SpecError("terms: need a non-empty array");
        for (const auto& entry : doc.at("terms")) {
            if (entry.is_string()) {
                spec.terms.push_back(Term::parse(entry.get<std::string>()));
            } else if (entry.is_array()) {
                spec.terms.push_back(Term{entry.get<std::vector<std::string>>()});
            } else {
                throw SpecError("terms: entries must be strings like \"full*year\" or arrays of factors");
            }
        }
        spec.tags = doc.value("tags", std::vector<std::string>{});
        const auto fe = doc.value("fixed_effects", std::string("site"));
        if (fe == "site") {
            spec.site_fixed_effects = true;
        } else if (fe == "none") {
            spec.site_fixed_effects = false;
        } else {
            throw SpecError("fixed_effects: expected site|none, got '" + fe + "'");
        }
        spec.cluster = parse_cluster(doc.value("cluster", std::string("year_week")));
        spec.exclude_absorbed = doc.value("exclude_absorbed", spec.exclude_absorbed);
        spec.pre_period_only = doc.value("pre_period_only", spec.pre_period_only);
        spec.placebo = doc.value("placebo", spec.placebo);
        if (doc.contains("placebo_split_week")) {
            spec.placebo_split_week = doc.at("placebo_split_week").get<int>();
            spec.placebo = true;
        }
        spec.count_absorbed_in_dof = doc.value("count_absorbed_in_dof", spec.count_absorbed_in_dof);
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("malformed model spec: ") + e.what());
    }
    return spec;
}

nlohmann::json ModelSpec::to_json() const {
    nlohmann::json doc;
    doc["outcome"] = outcome;
    auto terms_json = nlohmann::json::array();
    for (const auto& term : terms) terms_json.push_back(term.factors);
    doc["terms"] = terms_json;
    doc["tags"] = tags;
    doc["fixed_effects"] = site_fixed_effects ? "site" : "none";
    doc["cluster"] = to_string(cluster);
    doc["exclude_absorbed"] = exclude_absorbed;
    doc["pre_period_only"] = pre_period_only;
    doc["placebo"] = placebo;
    if (placebo_split_week) doc["placebo_split_week"] = *placebo_split_week;
    doc["count_absorbed_in_dof"] = count_absorbed_in_dof;
    return doc;
}

ModelSpec ModelSpec::main_effects() {
    ModelSpec spec;
    spec.terms = {Term{{"partial", "year"}},
                  Term{{"full", "year"}},
                  Term{{"partial"}},
                  Term{{"full"}},
                  Term{{"year"}},
                  Term{{"supply_millions"}},
                  Term{{"avg_daily_buyers_pre"}},
                  Term{{"monthly_ad_spend"}}};
    return spec;
}

ModelSpec ModelSpec::without_controls() {
    ModelSpec spec = main_effects();
    spec.terms.resize(5);
    return spec;
}

ModelSpec ModelSpec::placebo_test() {
    ModelSpec spec;
    spec.terms = {Term{{"placebo", "year"}},       Term{{"placebo"}},
                  Term{{"year"}},                  Term{{"supply_millions"}},
                  Term{{"avg_daily_buyers_pre"}}, Term{{"monthly_ad_spend"}}};
    spec.pre_period_only = true;
    spec.placebo = true;
    return spec;
}

} // namespace adx::econ
