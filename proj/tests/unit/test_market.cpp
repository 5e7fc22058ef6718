#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "adx/errors.hpp"
#include "adx/market/scenario.hpp"

using namespace adx::market;

namespace {

MarketConfig base_config(std::uint64_t seed = 7) {
    MarketConfig config;
    config.n_bidders = 25;
    config.n_sites = 2;
    config.site_shares = {0.5, 0.5};
    config.mu = 1.0;
    config.delta = 0.0;
    config.sigma = 1.0;
    config.omega = 1.0;
    config.n_impressions = 1000;
    config.seed = seed;
    return config;
}

// Hand-built draw: bidders x sites values, one residual row per bidder.
ValuationDraw manual_draw(Eigen::MatrixXd sites, Eigen::MatrixXd residuals, std::vector<SiteIndex> impression_sites) {
    ValuationDraw draw;
    draw.site_values = std::move(sites);
    draw.residuals = std::move(residuals);
    draw.site_of_impression = std::move(impression_sites);
    return draw;
}

// Second-price oracle: sort participant bids descending.
double sorted_second_price(const std::vector<double>& bids) {
    std::vector<double> participants;
    std::copy_if(bids.begin(), bids.end(), std::back_inserter(participants), [](double b) { return b > 0.0; });
    std::sort(participants.begin(), participants.end(), std::greater<>());
    return participants.size() >= 2 ? participants[1] : 0.0;
}

} // namespace

TEST_CASE("config validation names the bad field") {
    auto config = base_config();
    config.site_shares = {0.6, 0.6};
    CHECK_THROWS_AS(config.validate(), adx::ConfigError);
    config = base_config();
    config.sigma = -1.0;
    CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("sigma"), adx::ConfigError);
    config = base_config();
    config.n_bidders = 0;
    CHECK_THROWS_AS(config.validate(), adx::ConfigError);
    config = base_config();
    config.site_shares = {1.0};
    CHECK_THROWS_AS(config.validate(), adx::ConfigError);

    CHECK_THROWS_AS(DisclosureRegime::partial({}).validate(base_config()), adx::ConfigError);
    CHECK_THROWS_AS(DisclosureRegime::partial({25}).validate(base_config()), adx::ConfigError);
    CHECK_NOTHROW(DisclosureRegime::partial({24}).validate(base_config()));
}

TEST_CASE("site means spread delta linearly") {
    auto config = base_config();
    config.mu = 1.0;
    config.delta = 2.0;
    CHECK(config.site_mean(0) == doctest::Approx(0.0));
    CHECK(config.site_mean(1) == doctest::Approx(2.0));
    config.n_sites = 3;
    config.site_shares = MarketConfig::equal_shares(3);
    CHECK(config.site_mean(1) == doctest::Approx(1.0));
    CHECK(config.site_mean(2) - config.site_mean(0) == doctest::Approx(2.0));
}

TEST_CASE("degenerate distributions give constant values") {
    auto config = base_config();
    config.sigma = 0.0;
    config.omega = 0.0;
    config.delta = 0.0;
    config.mu = 1.0;
    auto rng = make_rng(3);
    const auto draw = draw_valuations(config, rng);
    CHECK((draw.site_values.array() == 1.0).all());
    CHECK((draw.residuals.array() == 0.0).all());
}

TEST_CASE("site value sample mean obeys the law of large numbers") {
    auto config = base_config();
    config.mu = 0.0;
    config.sigma = 1.0;
    config.delta = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto rng = make_rng(seed);
        const auto draw = draw_valuations(config, rng);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < draw.site_values.rows(); ++i)
            for (Eigen::Index k = 0; k < draw.site_values.cols(); ++k) sum += draw.site_values(i, k);
        const double mean = sum / 50.0;
        CHECK(std::abs(mean) < 4.0 / std::sqrt(50.0));
    }
}

TEST_CASE("draws are deterministic per seed and differ across seeds") {
    const auto config = base_config();
    auto a = make_rng(11);
    auto b = make_rng(11);
    auto c = make_rng(12);
    const auto first = draw_valuations(config, a);
    CHECK(first == draw_valuations(config, b));
    CHECK_FALSE(first == draw_valuations(config, c));
    for (auto site : first.site_of_impression) CHECK(site < 2);
}

TEST_CASE("effective valuation follows the disclosure branch") {
    auto config = base_config();
    config.n_bidders = 2;
    Eigen::MatrixXd sites(2, 2);
    sites << 0.0, 2.0, 0.0, 1.0;
    Eigen::MatrixXd residuals(2, 1);
    residuals << 0.5, 1.0;

    // Full: r + s_site.
    Eigen::MatrixXd full_sites(2, 2);
    full_sites << 0.0, 1.0, 0.0, 1.0;
    const auto full_draw = manual_draw(full_sites, residuals, {1});
    CHECK(effective_valuation(full_draw, config, DisclosureRegime::full(), 0, 0) == 1.5);

    // None, equal shares: r + (s1 + s2) / 2.
    Eigen::MatrixXd zero_residuals = Eigen::MatrixXd::Zero(2, 1);
    const auto none_draw = manual_draw(sites, zero_residuals, {1});
    CHECK(effective_valuation(none_draw, config, DisclosureRegime::none(), 0, 0) == 1.0);

    // Partial, untreated bidder falls to the pooled branch.
    Eigen::MatrixXd partial_residuals(2, 1);
    partial_residuals << 1.0, 1.0;
    const auto partial_draw = manual_draw(sites, partial_residuals, {1});
    CHECK(effective_valuation(partial_draw, config, DisclosureRegime::partial({1}), 0, 0) == 2.0);
    CHECK(effective_valuation(partial_draw, config, DisclosureRegime::partial({0}), 0, 0) == 3.0);

    CHECK_THROWS_AS(effective_valuation(partial_draw, config, DisclosureRegime::none(), 2, 0), adx::InputError);
    CHECK_THROWS_AS(effective_valuation(partial_draw, config, DisclosureRegime::none(), 0, 1), adx::InputError);
}

TEST_CASE("second-price auction examples") {
    auto rng = make_rng(1);
    const std::vector<double> textbook{3, 1, 2};
    auto r = run_auction(textbook, rng);
    CHECK(r.winner == 0u);
    CHECK(r.price == 2.0);
    CHECK(r.n_participants == 3);

    const std::vector<double> lone{1.4, -0.2};
    r = run_auction(lone, rng);
    CHECK(r.winner == 0u);
    CHECK(r.price == 0.0);
    CHECK(r.n_participants == 1);

    const std::vector<double> nobody{-1, -2};
    r = run_auction(nobody, rng);
    CHECK_FALSE(r.winner.has_value());
    CHECK(r.price == 0.0);
    CHECK(r.n_participants == 0);

    const std::vector<double> zero_bid{0.0, 0.5};
    r = run_auction(zero_bid, rng);
    CHECK(r.winner == 1u);
    CHECK(r.n_participants == 1);

    CHECK_THROWS_AS(run_auction(std::vector<double>{}, rng), adx::InputError);
}

TEST_CASE("ties at the top split uniformly") {
    auto rng = make_rng(2024);
    const std::vector<double> bids{2, 2, 1};
    int first = 0;
    constexpr int kReplays = 10000;
    for (int rep = 0; rep < kReplays; ++rep) {
        const auto r = run_auction(bids, rng);
        REQUIRE(r.winner.has_value());
        CHECK(*r.winner < 2);
        CHECK(r.price == 2.0);
        if (*r.winner == 0) ++first;
    }
    const double frequency = static_cast<double>(first) / kReplays;
    CHECK(std::abs(frequency - 0.5) <= 0.05);
}

TEST_CASE("every auction matches the sort oracle and price never exceeds the winning bid") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto config = base_config(seed);
        config.n_bidders = 4;
        config.n_impressions = 500;
        auto rng = make_rng(seed);
        const auto draw = draw_valuations(config, rng);
        for (const auto& regime : {DisclosureRegime::none(), DisclosureRegime::full(), DisclosureRegime::partial({1})}) {
            auto auction_rng = rng;
            const auto outcomes = run_market(draw, config, regime, auction_rng);
            REQUIRE(outcomes.size() == config.n_impressions);
            for (const auto& o : outcomes) {
                std::vector<double> bids(config.n_bidders);
                for (std::size_t i = 0; i < config.n_bidders; ++i)
                    bids[i] = effective_valuation(draw, config, regime, i, o.impression_id);
                CHECK(o.price == sorted_second_price(bids));
                CHECK(o.price >= 0.0);
                CHECK(o.winner.has_value() == (o.n_participants > 0));
                if (o.winner) {
                    CHECK(o.price <= bids[*o.winner]);
                    CHECK(bids[*o.winner] == *std::max_element(bids.begin(), bids.end()));
                }
            }
        }
    }
}

TEST_CASE("summary aggregates exactly over outcomes") {
    const std::vector<AuctionOutcome> outcomes{
        {0, 0, 1, 2.0, 3}, {1, 0, 0, 0.0, 1}, {2, 1, std::nullopt, 0.0, 0}, {3, 1, 1, 4.0, 2},
    };
    const auto s = summarize(outcomes, 2, 3);
    CHECK(s.site_mean_price[0] == 1.0);
    CHECK(s.site_mean_price[1] == 4.0);
    CHECK(s.overall_mean_price == 2.0);
    CHECK(s.zero_price_share == doctest::Approx(1.0 / 3.0));
    CHECK(s.unsold_share == 0.25);
    CHECK(s.bidder_win_share[1] == 0.5);
    CHECK(s.bidder_win_share[2] == 0.0);
    CHECK(s.site_p50[0] == 1.0);
    CHECK(s.site_p90[0] == doctest::Approx(1.8));
}

TEST_CASE("scenario summaries keep shares in range") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto config = base_config(seed);
        config.n_bidders = 2;
        const auto scenario = simulate_scenario(config, DisclosureRegime::full());
        double total = 0.0;
        for (double share : scenario.summary.bidder_win_share) {
            CHECK(share >= 0.0);
            CHECK(share <= 1.0);
            total += share;
        }
        CHECK(total + scenario.summary.unsold_share == doctest::Approx(1.0));
        CHECK(scenario.summary.zero_price_share >= 0.0);
        CHECK(scenario.summary.zero_price_share <= 1.0);
    }
}

TEST_CASE("same seed reproduces byte-identical outcome files") {
    const auto config = base_config(42);
    const auto render = [&](const DisclosureRegime& regime) {
        std::ostringstream out;
        write_outcomes_csv(out, simulate_scenario(config, regime).outcomes);
        return out.str();
    };
    CHECK(render(DisclosureRegime::full()) == render(DisclosureRegime::full()));
    CHECK(render(DisclosureRegime::none()) == render(DisclosureRegime::none()));
    CHECK(render(DisclosureRegime::none()) != render(DisclosureRegime::full()));
}

TEST_CASE("paired scenarios match separate runs") {
    const auto config = base_config(5);
    const DisclosureRegime regimes[] = {DisclosureRegime::none(), DisclosureRegime::full()};
    const auto paired = simulate_paired(config, regimes);
    CHECK(paired[0].outcomes == simulate_scenario(config, DisclosureRegime::none()).outcomes);
    CHECK(paired[1].outcomes == simulate_scenario(config, DisclosureRegime::full()).outcomes);
}

TEST_CASE("with no site heterogeneity both valuation branches coincide") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto config = base_config(seed);
        config.sigma = 0.0;
        config.delta = 0.0;
        const DisclosureRegime regimes[] = {DisclosureRegime::none(), DisclosureRegime::full()};
        const auto paired = simulate_paired(config, regimes);
        CHECK(paired[0].outcomes == paired[1].outcomes);

        const auto report = simulate_partial(config, 0);
        CHECK(report.win_share_treated_partial == report.win_share_treated_none);
        CHECK(report.mean_price_treated_partial == report.mean_price_treated_none);
    }
}

TEST_CASE("partial disclosure only changes impressions where the treated bid changes") {
    auto config = base_config(17);
    // An indifferent treated bidder bids the same under both regimes.
    Rng rng = make_rng(config.seed);
    auto draw = draw_valuations(config, rng);
    draw.site_values(3, 0) = 1.25;
    draw.site_values(3, 1) = 1.25;
    auto rng_none = rng;
    auto rng_partial = rng;
    const auto none = run_market(draw, config, DisclosureRegime::none(), rng_none);
    const auto partial = run_market(draw, config, DisclosureRegime::partial({3}), rng_partial);
    CHECK(none == partial);

    // General case: every differing impression has a differing treated valuation.
    auto paired_rng = make_rng(config.seed);
    const auto draw2 = draw_valuations(config, paired_rng);
    auto r1 = paired_rng;
    auto r2 = paired_rng;
    const auto a = run_market(draw2, config, DisclosureRegime::none(), r1);
    const auto b = run_market(draw2, config, DisclosureRegime::partial({3}), r2);
    std::size_t differing = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const bool valuation_changed =
            effective_valuation(draw2, config, DisclosureRegime::none(), 3, j) !=
            effective_valuation(draw2, config, DisclosureRegime::partial({3}), 3, j);
        if (!(a[j] == b[j])) {
            ++differing;
            CHECK(valuation_changed);
        }
    }
    CHECK(differing > 0);
}

TEST_CASE("raising mu never lowers participation") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto low = base_config(seed);
        low.n_bidders = 5;
        low.mu = -0.5;
        auto high = low;
        high.mu = 0.25;
        for (const auto& regime : {DisclosureRegime::none(), DisclosureRegime::full()}) {
            const auto a = simulate_scenario(low, regime).outcomes;
            const auto b = simulate_scenario(high, regime).outcomes;
            for (std::size_t j = 0; j < a.size(); ++j) CHECK(b[j].n_participants >= a[j].n_participants);
        }
    }
}

TEST_CASE("full-disclosure revenue is non-decreasing in the number of bidders") {
    double previous = -1.0;
    for (std::size_t n : {2u, 4u, 8u, 25u}) {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            auto config = base_config(seed);
            config.n_bidders = n;
            total += simulate_scenario(config, DisclosureRegime::full()).summary.overall_mean_price;
        }
        const double mean = total / 100.0;
        CHECK(mean >= previous);
        previous = mean;
    }
}

TEST_CASE("partial simulation rejects an unknown bidder") {
    CHECK_THROWS_AS(simulate_partial(base_config(), 25), adx::InputError);
}

TEST_CASE("outcome file layout") {
    const std::vector<AuctionOutcome> outcomes{{0, 1, 2, 0.5, 3}, {1, 0, std::nullopt, 0.0, 0}};
    std::ostringstream out;
    write_outcomes_csv(out, outcomes);
    CHECK(out.str() == "impression_id,site_id,winner,price,n_participants\n0,1,2,0.5,3\n1,0,,0,0\n");
}
