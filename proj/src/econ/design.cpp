#include "adx/econ/design.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "adx/errors.hpp"

namespace adx::econ {

namespace {

using FactorFn = std::function<double(const PanelObservation&)>;

FactorFn resolve_factor(const std::string& factor, const ModelSpec& spec, int placebo_split,
                        std::span<const PanelObservation> rows, const std::string& term_name) {
    if (factor == "partial") return [](const PanelObservation& r) { return double(r.partial_flag); };
    if (factor == "full") return [](const PanelObservation& r) { return double(r.full_flag); };
    if (factor == "year") return [](const PanelObservation& r) { return double(r.year); };
    if (factor == "supply_millions") return [](const PanelObservation& r) { return r.supply_millions; };
    if (factor == "avg_daily_buyers_pre") return [](const PanelObservation& r) { return r.avg_daily_buyers_pre; };
    if (factor == "monthly_ad_spend") return [](const PanelObservation& r) { return r.monthly_ad_spend; };
    if (factor == "placebo") {
        if (!spec.placebo) throw SpecError("term " + term_name + " uses placebo but the spec has no placebo split");
        return [placebo_split](const PanelObservation& r) { return r.week > placebo_split ? 1.0 : 0.0; };
    }
    if (std::find(spec.tags.begin(), spec.tags.end(), factor) != spec.tags.end()) {
        return [factor](const PanelObservation& r) { return r.tags.contains(factor) ? 1.0 : 0.0; };
    }
    const bool extra_everywhere = !rows.empty() && std::all_of(rows.begin(), rows.end(), [&](const auto& r) {
        return r.extra.contains(factor);
    });
    if (extra_everywhere) return [factor](const PanelObservation& r) { return r.extra.at(factor); };
    throw SpecError("unknown factor '" + factor + "' in term " + term_name +
                    " (not a panel variable, declared tag or extra column)");
}

std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out += ", ";
        out += names[i];
    }
    return out;
}

} // namespace

int midpoint_week(std::span<const PanelObservation> panel) {
    if (panel.empty()) throw InputError("midpoint_week: empty panel");
    const auto [lo, hi] = std::minmax_element(panel.begin(), panel.end(),
                                              [](const auto& a, const auto& b) { return a.week < b.week; });
    const int sum = lo->week + hi->week;
    return sum >= 0 ? sum / 2 : -((-sum + 1) / 2);
}

DesignMatrix build_design(std::span<const PanelObservation> panel, const ModelSpec& spec) {
    if (panel.empty()) throw InputError("build_design: empty panel");
    if (spec.terms.empty()) throw SpecError("model spec has no terms");
    validate_panel(panel);

    std::vector<PanelObservation> rows;
    rows.reserve(panel.size());
    for (const auto& row : panel) {
        if (spec.pre_period_only && (row.partial_flag != 0 || row.full_flag != 0)) continue;
        rows.push_back(row);
    }
    if (rows.empty()) throw InputError("build_design: no rows left after the pre-period filter");

    DesignMatrix design;
    design.site_fixed_effects = spec.site_fixed_effects;
    design.count_absorbed_in_dof = spec.count_absorbed_in_dof;
    int split = -1;
    if (spec.placebo) {
        split = spec.placebo_split_week ? *spec.placebo_split_week : midpoint_week(rows);
        design.placebo_split_week = split;
    }

    std::set<std::string> seen_names;
    std::vector<std::string> names;
    std::vector<std::vector<FactorFn>> factor_fns;
    for (const auto& term : spec.terms) {
        if (term.factors.empty()) throw SpecError("empty term in model spec");
        const auto name = term.name();
        if (!seen_names.insert(name).second) throw SpecError("duplicate term " + name);
        std::vector<FactorFn> fns;
        for (const auto& factor : term.factors) fns.push_back(resolve_factor(factor, spec, split, rows, name));
        names.push_back(name);
        factor_fns.push_back(std::move(fns));
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd raw(n, static_cast<Eigen::Index>(names.size()));
    design.y.resize(n);
    design.w.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        design.y(i) = row.outcome;
        design.w(i) = row.weight;
        for (std::size_t c = 0; c < names.size(); ++c) {
            double value = 1.0;
            for (const auto& fn : factor_fns[c]) value *= fn(row);
            raw(i, static_cast<Eigen::Index>(c)) = value;
        }
    }

    std::map<std::string, int> site_ids;
    for (const auto& row : rows) site_ids.emplace(row.site_id, 0);
    int next = 0;
    for (auto& [label, id] : site_ids) id = next++;
    design.n_sites = site_ids.size();
    design.site.reserve(rows.size());
    for (const auto& row : rows) design.site.push_back(site_ids.at(row.site_id));

    std::map<std::tuple<int, int, std::string>, int> cluster_ids;
    const auto cluster_key = [&](const PanelObservation& row) -> std::tuple<int, int, std::string> {
        switch (spec.cluster) {
        case ClusterBy::Week:
            return {0, row.week, ""};
        case ClusterBy::YearWeek:
            return {row.year, row.week, ""};
        case ClusterBy::Site:
            return {0, 0, row.site_id};
        }
        return {0, 0, ""};
    };
    for (const auto& row : rows) cluster_ids.emplace(cluster_key(row), 0);
    next = 0;
    for (auto& [key, id] : cluster_ids) id = next++;
    design.n_clusters = cluster_ids.size();
    design.cluster.reserve(rows.size());
    for (const auto& row : rows) design.cluster.push_back(cluster_ids.at(cluster_key(row)));

    std::vector<Eigen::Index> keep;
    if (spec.site_fixed_effects) {
        for (Eigen::Index c = 0; c < raw.cols(); ++c) {
            const double scale = 1.0 + raw.col(c).cwiseAbs().maxCoeff();
            std::vector<double> first(design.n_sites, std::numeric_limits<double>::quiet_NaN());
            bool constant = true;
            for (Eigen::Index i = 0; i < n && constant; ++i) {
                auto& anchor = first[static_cast<std::size_t>(design.site[static_cast<std::size_t>(i)])];
                if (std::isnan(anchor)) {
                    anchor = raw(i, c);
                } else if (std::abs(raw(i, c) - anchor) > 1e-12 * scale) {
                    constant = false;
                }
            }
            if (constant) {
                design.absorbed.push_back(names[static_cast<std::size_t>(c)]);
            } else {
                keep.push_back(c);
            }
        }
        if (!design.absorbed.empty() && !spec.exclude_absorbed) {
            throw DegenerateColumnError("columns constant within every site are absorbed by site fixed effects: " +
                                        join(design.absorbed));
        }
    } else {
        std::vector<std::string> constant_columns;
        for (Eigen::Index c = 0; c < raw.cols(); ++c) {
            const double lo = raw.col(c).minCoeff();
            const double hi = raw.col(c).maxCoeff();
            if (hi - lo <= 1e-12 * (1.0 + std::max(std::abs(lo), std::abs(hi)))) {
                constant_columns.push_back(names[static_cast<std::size_t>(c)]);
            }
            keep.push_back(c);
        }
        if (!constant_columns.empty()) {
            throw DegenerateColumnError("zero-variance regressors collide with the intercept: " +
                                        join(constant_columns));
        }
    }

    const auto extra_const = spec.site_fixed_effects ? 0 : 1;
    if (keep.empty() && extra_const == 0) {
        throw DegenerateColumnError("no estimable regressors remain; absorbed: " + join(design.absorbed));
    }
    design.X.resize(n, static_cast<Eigen::Index>(keep.size()) + extra_const);
    for (std::size_t c = 0; c < keep.size(); ++c) {
        design.X.col(static_cast<Eigen::Index>(c)) = raw.col(keep[c]);
        design.columns.push_back(names[static_cast<std::size_t>(keep[c])]);
    }
    if (extra_const == 1) {
        design.X.col(design.X.cols() - 1).setOnes();
        design.columns.push_back("const");
    }
    return design;
}

DesignMatrix within_transform(DesignMatrix design) {
    if (design.demeaned) return design;
    if ((design.w.array() <= 0.0).any()) throw InputError("within_transform: weights must be positive");
    const auto n_sites = static_cast<Eigen::Index>(design.n_sites);
    const auto p = design.X.cols();

    Eigen::VectorXd weight_sum = Eigen::VectorXd::Zero(n_sites);
    Eigen::VectorXd y_sum = Eigen::VectorXd::Zero(n_sites);
    Eigen::MatrixXd x_sum = Eigen::MatrixXd::Zero(n_sites, p);
    std::vector<std::size_t> counts(design.n_sites, 0);
    for (Eigen::Index i = 0; i < design.X.rows(); ++i) {
        const auto s = design.site[static_cast<std::size_t>(i)];
        weight_sum(s) += design.w(i);
        y_sum(s) += design.w(i) * design.y(i);
        x_sum.row(s) += design.w(i) * design.X.row(i);
        ++counts[static_cast<std::size_t>(s)];
    }
    const Eigen::VectorXd scale = design.X.cwiseAbs().colwise().maxCoeff().transpose();
    for (Eigen::Index i = 0; i < design.X.rows(); ++i) {
        const auto s = design.site[static_cast<std::size_t>(i)];
        design.y(i) -= y_sum(s) / weight_sum(s);
        design.X.row(i) -= x_sum.row(s) / weight_sum(s);
    }
    design.singleton_sites = static_cast<std::size_t>(std::count(counts.begin(), counts.end(), 1u));
    design.flagged.clear();
    for (Eigen::Index c = 0; c < p; ++c) {
        if (design.X.col(c).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + scale(c))) {
            design.flagged.push_back(design.columns[static_cast<std::size_t>(c)]);
        }
    }
    design.demeaned = true;
    return design;
}

} // namespace adx::econ
