#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "adx/econ/regression.hpp"
#include "adx/errors.hpp"
#include "panel_fixtures.hpp"

using namespace adx::econ;

namespace {

PanelObservation row(std::string site, int week, int year, double outcome, double weight = 1.0) {
    PanelObservation r;
    r.site_id = std::move(site);
    r.week = week;
    r.year = year;
    r.outcome = outcome;
    r.weight = weight;
    return r;
}

DesignMatrix manual_design(Eigen::MatrixXd X, Eigen::VectorXd y, Eigen::VectorXd w, std::vector<int> cluster) {
    DesignMatrix d;
    d.X = std::move(X);
    d.y = std::move(y);
    d.w = std::move(w);
    d.cluster = std::move(cluster);
    d.n_clusters = static_cast<std::size_t>(*std::max_element(d.cluster.begin(), d.cluster.end()) + 1);
    d.site.assign(d.cluster.size(), 0);
    d.n_sites = 1;
    d.site_fixed_effects = false;
    for (Eigen::Index c = 0; c < d.X.cols(); ++c) d.columns.push_back("x" + std::to_string(c));
    return d;
}

} // namespace

TEST_CASE("canonical two-by-two design") {
    std::vector<PanelObservation> panel{row("control", 1, 0, 0.0), row("control", 1, 1, 0.0),
                                        row("treated", 1, 0, 0.0), row("treated", 1, 1, 0.0)};
    panel[2].tags = {"treated"};
    panel[3].tags = {"treated"};
    ModelSpec spec;
    spec.terms = {Term::parse("treated*year")};
    spec.tags = {"treated"};
    const auto design = build_design(panel, spec);
    REQUIRE(design.cols() == 1);
    CHECK(design.columns[0] == "treated_x_year");
    CHECK(design.X(0, 0) == 0.0);
    CHECK(design.X(1, 0) == 0.0);
    CHECK(design.X(2, 0) == 0.0);
    CHECK(design.X(3, 0) == 1.0);
}

TEST_CASE("main-effects spec on a 57-site by 54-week panel has seven columns") {
    fixtures::PanelShape shape;
    shape.sites = 57;
    shape.weeks = 27;
    shape.partial_start = 12;
    shape.full_start = 16;
    const auto panel = fixtures::random_panel(shape, {}, 1);
    CHECK(panel.size() == 57u * 54u);
    const auto design = build_design(panel, ModelSpec::main_effects());
    CHECK(design.cols() == 7);
    CHECK(design.columns ==
          std::vector<std::string>{"partial_x_year", "full_x_year", "partial", "full", "year", "supply_millions",
                                   "monthly_ad_spend"});
    CHECK(design.absorbed == std::vector<std::string>{"avg_daily_buyers_pre"});
    CHECK(design.n_clusters == 54);
    CHECK(design.n_sites == 57);

    auto keep = ModelSpec::main_effects();
    keep.exclude_absorbed = false;
    CHECK_THROWS_WITH_AS(build_design(panel, keep), doctest::Contains("avg_daily_buyers_pre"),
                         adx::DegenerateColumnError);

    // Without fixed effects the time-invariant control is estimable.
    auto pooled = ModelSpec::main_effects();
    pooled.site_fixed_effects = false;
    const auto pooled_design = build_design(panel, pooled);
    CHECK(pooled_design.cols() == 9);
    CHECK(pooled_design.columns.back() == "const");
}

TEST_CASE("placebo flag splits the pre-period at the midpoint") {
    fixtures::PanelShape shape;
    shape.weeks = 27;
    shape.partial_start = 12;
    shape.full_start = 16;
    const auto panel = fixtures::random_panel(shape, {}, 2);
    const auto design = build_design(panel, ModelSpec::placebo_test());
    CHECK(design.placebo_split_week == 6);
    CHECK(design.rows() == 10u * 11u * 2u);
    const auto placebo_col = std::find(design.columns.begin(), design.columns.end(), "placebo") - design.columns.begin();
    REQUIRE(placebo_col < static_cast<long>(design.columns.size()));
    std::vector<PanelObservation> pre;
    for (const auto& r : panel)
        if (r.partial_flag == 0 && r.full_flag == 0) pre.push_back(r);
    for (std::size_t i = 0; i < pre.size(); ++i) {
        CHECK(design.X(static_cast<Eigen::Index>(i), placebo_col) == (pre[i].week > 6 ? 1.0 : 0.0));
    }

    auto explicit_split = ModelSpec::placebo_test();
    explicit_split.placebo_split_week = 3;
    CHECK(build_design(panel, explicit_split).placebo_split_week == 3);
}

TEST_CASE("spec errors") {
    const auto panel = fixtures::random_panel({}, {}, 3);
    ModelSpec spec;
    spec.terms = {Term::parse("full*year*premium_small")};
    CHECK_THROWS_WITH_AS(build_design(panel, spec), doctest::Contains("premium_small"), adx::SpecError);
    spec.terms = {Term::parse("placebo*year")};
    CHECK_THROWS_AS(build_design(panel, spec), adx::SpecError);
    spec.terms = {Term::parse("full*year"), Term::parse("full*year")};
    CHECK_THROWS_AS(build_design(panel, spec), adx::SpecError);
    CHECK_THROWS_AS(Term::parse("full**year"), adx::SpecError);

    const auto doc = nlohmann::json::parse(R"({"terms": ["full*year"], "clustr": "week"})");
    CHECK_THROWS_WITH_AS(ModelSpec::from_json(doc), doctest::Contains("clustr"), adx::SpecError);
}

TEST_CASE("model spec JSON round-trips") {
    auto spec = ModelSpec::placebo_test();
    spec.tags = {"thin"};
    spec.cluster = ClusterBy::Week;
    const auto parsed = ModelSpec::from_json(spec.to_json());
    CHECK(parsed.terms == spec.terms);
    CHECK(parsed.tags == spec.tags);
    CHECK(parsed.cluster == ClusterBy::Week);
    CHECK(parsed.placebo);
    CHECK(parsed.pre_period_only);
}

TEST_CASE("within transform arithmetic") {
    SUBCASE("equal weights, two sites") {
        DesignMatrix d = manual_design(Eigen::MatrixXd::Constant(4, 1, 5.0), Eigen::Vector4d(0, 2, 2, 4),
                                       Eigen::VectorXd::Ones(4), {0, 1, 2, 3});
        d.site = {0, 0, 1, 1};
        d.n_sites = 2;
        const auto t = within_transform(d);
        CHECK(t.y(0) == -1.0);
        CHECK(t.y(1) == 1.0);
        CHECK(t.y(2) == -1.0);
        CHECK(t.y(3) == 1.0);
        CHECK(t.X.cwiseAbs().maxCoeff() == 0.0);
        CHECK(t.flagged == std::vector<std::string>{"x0"});
    }
    SUBCASE("weighted mean within one site") {
        DesignMatrix d = manual_design(Eigen::MatrixXd::Ones(2, 1), Eigen::Vector2d(0, 4), Eigen::Vector2d(1, 3), {0, 1});
        const auto t = within_transform(d);
        CHECK(t.y(0) == -3.0);
        CHECK(t.y(1) == 1.0);
    }
    SUBCASE("singleton site demeans to zero") {
        DesignMatrix d = manual_design(Eigen::Vector3d(1, 2, 7), Eigen::Vector3d(1, 3, 9), Eigen::VectorXd::Ones(3),
                                       {0, 1, 2});
        d.site = {0, 0, 1};
        d.n_sites = 2;
        const auto t = within_transform(d);
        CHECK(t.singleton_sites == 1);
        CHECK(t.y(2) == 0.0);
        CHECK(t.X(2, 0) == 0.0);
    }
}

TEST_CASE("perfect fit") {
    Eigen::VectorXd x(5);
    x << 1, 2, 3, 4, 6;
    const Eigen::VectorXd y = 2.0 * x;
    Eigen::VectorXd w(5);
    w << 1, 5, 2, 0.5, 3;
    auto design = manual_design(x, y, w, {0, 0, 1, 1, 2});
    auto fit = fit_wls(design);
    CHECK(fit.coefficients(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(fit.r_squared == doctest::Approx(1.0));
    cluster_robust_se(fit, design);
    CHECK(fit.std_errors(0) < 1e-12);
}

TEST_CASE("five-point regression matches the normal-equation oracle") {
    Eigen::MatrixXd X(5, 2);
    X << 1, 0.3, 1, 1.7, 1, 2.2, 1, 3.9, 1, 5.1;
    Eigen::VectorXd y(5);
    y << 1.2, 2.9, 3.1, 6.0, 7.4;
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(5);
    const auto fit = fit_wls(manual_design(X, y, w, {0, 1, 2, 3, 4}));
    const Eigen::VectorXd oracle = fixtures::normal_equations(X, y, w);
    CHECK((fit.coefficients - oracle).cwiseAbs().maxCoeff() < 1e-10);

    // Equal weights reduce to plain OLS.
    const Eigen::VectorXd ols = (X.transpose() * X).inverse() * X.transpose() * y;
    CHECK((fit.coefficients - ols).cwiseAbs().maxCoeff() < 1e-10);

    // Weighted case against the same oracle.
    Eigen::VectorXd wv(5);
    wv << 1, 2, 0.5, 4, 3;
    const auto weighted = fit_wls(manual_design(X, y, wv, {0, 1, 2, 3, 4}));
    CHECK((weighted.coefficients - fixtures::normal_equations(X, y, wv)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fixed-effect path equals dummy-variable OLS on random panels") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 dims(seed);
        fixtures::PanelShape shape;
        shape.sites = 2 + static_cast<int>(dims() % 19);
        shape.weeks = 4 + static_cast<int>(dims() % 7);
        shape.partial_start = 2;
        shape.full_start = 3 + static_cast<int>(dims() % static_cast<std::uint64_t>(shape.weeks - 2));
        fixtures::TrueEffects effects;
        effects.noise_sd = 0.05;
        const auto panel = fixtures::random_panel(shape, effects, seed + 100);
        const auto fit = estimate_did(panel, ModelSpec::main_effects());
        const Eigen::VectorXd oracle = fixtures::dummy_variable_ols(panel, fixtures::raw_regressors(panel));
        CHECK((fit.coefficients - oracle).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("singleton clusters reproduce the heteroskedasticity-robust sandwich") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index n = 40;
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    std::vector<int> cluster(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = normal(rng);
        X(i, 2) = normal(rng) * 2.0;
        y(i) = 0.5 + X(i, 1) - 0.3 * X(i, 2) + normal(rng) * (1.0 + std::abs(X(i, 1)));
        cluster[static_cast<std::size_t>(i)] = static_cast<int>(i);
    }
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    auto design = manual_design(X, y, w, cluster);
    auto fit = fit_wls(design);
    cluster_robust_se(fit, design);

    // HC0 with the same finite-sample factor: n/(n-1) * (n-1)/(n-k) = n/(n-k).
    const Eigen::MatrixXd bread = (X.transpose() * X).inverse();
    const Eigen::VectorXd beta = bread * X.transpose() * y;
    const Eigen::VectorXd e = y - X * beta;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(3, 3);
    for (Eigen::Index i = 0; i < n; ++i) meat += e(i) * e(i) * X.row(i).transpose() * X.row(i);
    const double factor = static_cast<double>(n) / static_cast<double>(n - 3);
    const Eigen::VectorXd hc = (factor * bread * meat * bread).diagonal().cwiseSqrt();
    CHECK((fit.std_errors - hc).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("duplicating rows inside their cluster changes SEs only through the correction factor") {
    Eigen::MatrixXd X(6, 2);
    X << 1, 0.5, 1, 1.5, 1, 2.0, 1, 3.5, 1, 4.0, 1, 6.0;
    Eigen::VectorXd y(6);
    y << 1.0, 2.2, 2.1, 4.3, 3.9, 6.8;
    const std::vector<int> cluster{0, 0, 1, 1, 2, 2};
    auto base = manual_design(X, y, Eigen::VectorXd::Ones(6), cluster);
    auto fit = fit_wls(base);
    cluster_robust_se(fit, base);

    Eigen::MatrixXd X2(12, 2);
    X2 << X, X;
    Eigen::VectorXd y2(12);
    y2 << y, y;
    std::vector<int> cluster2 = cluster;
    cluster2.insert(cluster2.end(), cluster.begin(), cluster.end());
    auto doubled = manual_design(X2, y2, Eigen::VectorXd::Ones(12), cluster2);
    auto fit2 = fit_wls(doubled);
    cluster_robust_se(fit2, doubled);

    CHECK((fit.coefficients - fit2.coefficients).cwiseAbs().maxCoeff() < 1e-12);
    const double c1 = 3.0 / 2.0 * 5.0 / 4.0;
    const double c2 = 3.0 / 2.0 * 11.0 / 10.0;
    for (Eigen::Index j = 0; j < 2; ++j) {
        CHECK(fit2.std_errors(j) == doctest::Approx(fit.std_errors(j) * std::sqrt(c2 / c1)).epsilon(1e-12));
    }
}

TEST_CASE("clustered inference needs two clusters") {
    Eigen::MatrixXd X(3, 1);
    X << 1, 2, 3;
    auto design = manual_design(X, Eigen::Vector3d(1, 2, 4), Eigen::VectorXd::Ones(3), {0, 0, 0});
    auto fit = fit_wls(design);
    CHECK_THROWS_AS(cluster_robust_se(fit, design), adx::InferenceError);
}

TEST_CASE("rank deficiency names the dependent column") {
    Eigen::MatrixXd X(5, 3);
    X << 1, 2, 3, 2, 1, 3, 3, 5, 8, 4, 4, 8, 5, 0, 5;
    auto design = manual_design(X, Eigen::VectorXd::LinSpaced(5, 0, 4), Eigen::VectorXd::Ones(5), {0, 1, 2, 3, 4});
    CHECK_THROWS_WITH_AS(fit_wls(design), doctest::Contains("x"), adx::SingularDesignError);

    // Full rank panel spec made singular by repeating a column under another name.
    const auto panel = fixtures::random_panel({}, {}, 8);
    ModelSpec spec;
    spec.terms = {Term::parse("full*year"), Term::parse("full"), Term::parse("year*full")};
    CHECK_THROWS_AS(estimate_did(panel, spec), adx::SingularDesignError);
}

TEST_CASE("weights scale and row order leave the fit unchanged") {
    fixtures::TrueEffects effects;
    effects.noise_sd = 0.1;
    auto panel = fixtures::random_panel({}, effects, 21);
    const auto reference = estimate_did(panel, ModelSpec::main_effects());

    auto scaled = panel;
    for (auto& r : scaled) r.weight *= 37.5;
    const auto scaled_fit = estimate_did(scaled, ModelSpec::main_effects());
    CHECK((scaled_fit.coefficients - reference.coefficients).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((scaled_fit.std_errors - reference.std_errors).cwiseAbs().maxCoeff() < 1e-10);

    auto shuffled = panel;
    std::mt19937_64 rng(3);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto shuffled_fit = estimate_did(shuffled, ModelSpec::main_effects());
    CHECK((shuffled_fit.coefficients - reference.coefficients).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((shuffled_fit.std_errors - reference.std_errors).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(shuffled_fit.adj_r_squared - reference.adj_r_squared) < 1e-12);
}

TEST_CASE("noiseless injected effects are recovered exactly") {
    const auto panel = fixtures::random_panel({}, {}, 4);
    const auto fit = estimate_did(panel, ModelSpec::main_effects());
    CHECK(std::abs(fit.coefficient("full_x_year") - 0.154) < 1e-10);
    CHECK(std::abs(fit.coefficient("partial_x_year") - 0.108) < 1e-10);
    CHECK(std::abs(fit.coefficient("year") - 0.193) < 1e-10);
    CHECK(std::abs(fit.coefficient("supply_millions") + 0.001) < 1e-10);
    CHECK(fit.absorbed == std::vector<std::string>{"avg_daily_buyers_pre"});

    // Same estimator on a daily-buyers outcome.
    fixtures::TrueEffects buyers;
    buyers.full_x_year = -8.932;
    buyers.partial_x_year = -2.0;
    auto buyer_panel = fixtures::random_panel({}, buyers, 5);
    const auto buyer_fit = estimate_did(buyer_panel, ModelSpec::main_effects());
    CHECK(std::abs(buyer_fit.coefficient("full_x_year") + 8.932) < 1e-10);
}

TEST_CASE("noisy estimates are unbiased") {
    fixtures::TrueEffects effects;
    effects.noise_sd = 0.2;
    double bias = 0.0;
    double se = 0.0;
    constexpr int kReps = 500;
    for (int rep = 0; rep < kReps; ++rep) {
        const auto panel = fixtures::random_panel({}, effects, 1000 + rep);
        const auto fit = estimate_did(panel, ModelSpec::main_effects());
        bias += fit.coefficient("full_x_year") - effects.full_x_year;
        se += fit.std_error("full_x_year");
    }
    CHECK(std::abs(bias / kReps) < 0.1 * (se / kReps));
}

TEST_CASE("95% confidence intervals cover at the nominal rate") {
    fixtures::PanelShape shape;
    // Reference timeline: 27 weeks per year, 54 week clusters, 12 of them treated.
    shape.sites = 10;
    shape.weeks = 27;
    shape.partial_start = 12;
    shape.full_start = 16;
    fixtures::TrueEffects effects;
    effects.noise_sd = 0.3;
    int covered = 0;
    constexpr int kPanels = 1000;
    for (int rep = 0; rep < kPanels; ++rep) {
        auto panel = fixtures::random_panel(shape, effects, 50000 + rep);
        const auto fit = estimate_did(panel, ModelSpec::main_effects());
        const double critical =
            boost::math::quantile(boost::math::complement(boost::math::students_t(double(fit.n_clusters - 1)), 0.025));
        const double b = fit.coefficient("full_x_year");
        const double s = fit.std_error("full_x_year");
        if (std::abs(b - effects.full_x_year) <= critical * s) ++covered;
    }
    const double coverage = static_cast<double>(covered) / kPanels;
    MESSAGE("coverage = " << coverage);
    CHECK(coverage >= 0.92);
    CHECK(coverage <= 0.98);
}

TEST_CASE("marginal effects add coefficients") {
    RegressionFit fit;
    fit.terms = {"full_x_year", "full_x_year_x_thin", "full_x_year_x_premium_small"};
    fit.coefficients = Eigen::Vector3d(0.154, -0.150, 0.316);
    CHECK(marginal_effect(fit, "full_x_year", {"full_x_year_x_thin"}) == doctest::Approx(0.004).epsilon(1e-12));
    fit.coefficients(0) = 0.153;
    CHECK(marginal_effect(fit, "full_x_year", {"full_x_year_x_premium_small"}) ==
          doctest::Approx(0.469).epsilon(1e-12));
    CHECK(marginal_effect(fit, "full_x_year") == 0.153);
    CHECK_THROWS_AS(marginal_effect(fit, "full_x_year", {"missing"}), adx::LookupError);
}

TEST_CASE("three-way interactions recover heterogeneous effects") {
    auto panel = fixtures::random_panel({}, {}, 9);
    for (auto& r : panel) {
        if (r.tags.contains("thin") && r.full_flag == 1 && r.year == 1) r.outcome -= 0.150;
    }
    ModelSpec spec = ModelSpec::main_effects();
    spec.tags = {"thin"};
    spec.terms.insert(spec.terms.begin() + 2, Term::parse("full*year*thin"));
    spec.terms.push_back(Term::parse("full*thin"));
    spec.terms.push_back(Term::parse("year*thin"));
    const auto fit = estimate_did(panel, spec);
    CHECK(std::abs(fit.coefficient("full_x_year_x_thin") + 0.150) < 1e-10);
    CHECK(std::abs(marginal_effect(fit, "full_x_year", {"full_x_year_x_thin"}) - 0.004) < 1e-10);
}

TEST_CASE("coefficient table layout") {
    const auto panel = fixtures::random_panel({}, {0.108, 0.154, 0, 0, 0, 0, 0, 0.0}, 10);
    const auto fit = estimate_did(panel, ModelSpec::without_controls());
    std::ostringstream out;
    write_coefficient_table(out, fit);
    const auto table = out.str();
    CHECK(table.rfind("term,estimate,clustered_se,stars\npartial_x_year,", 0) == 0);
    CHECK(table.find("\nfull_x_year,0.154") != std::string::npos);
    std::ostringstream summary;
    write_fit_summary(summary, fit);
    CHECK(summary.str().find("clusters=12\n") != std::string::npos);
}
