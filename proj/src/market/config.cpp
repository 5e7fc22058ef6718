#include "adx/market/config.hpp"

#include <cmath>
#include <numeric>

#include "adx/errors.hpp"

namespace adx::market {

Rng make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

void MarketConfig::validate() const {
    if (n_bidders < 1) throw ConfigError("n_bidders must be at least 1");
    if (n_sites < 1) throw ConfigError("n_sites must be at least 1");
    if (n_impressions < 1) throw ConfigError("n_impressions must be at least 1");
    if (site_shares.size() != n_sites) {
        throw ConfigError("site_shares has " + std::to_string(site_shares.size()) +
                          " entries, expected n_sites = " + std::to_string(n_sites));
    }
    for (double share : site_shares) {
        if (!(share >= 0.0) || !std::isfinite(share)) {
            throw ConfigError("site_shares entries must be finite and non-negative");
        }
    }
    const double total = std::accumulate(site_shares.begin(), site_shares.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("site_shares must sum to 1");
    if (!std::isfinite(mu)) throw ConfigError("mu must be finite");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be >= 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be >= 0");
    if (!(omega >= 0.0) || !std::isfinite(omega)) throw ConfigError("omega must be >= 0");
}

double MarketConfig::site_mean(SiteIndex k) const {
    if (n_sites == 1) return mu;
    const double position = static_cast<double>(k) / static_cast<double>(n_sites - 1);
    return mu + delta * (position - 0.5);
}

std::vector<double> MarketConfig::equal_shares(std::size_t n_sites) {
    return std::vector<double>(n_sites, 1.0 / static_cast<double>(n_sites));
}

bool DisclosureRegime::discloses_to(BidderIndex bidder) const {
    switch (kind_) {
    case Kind::Full:
        return true;
    case Kind::Partial:
        return treated_.contains(bidder);
    case Kind::None:
        break;
    }
    return false;
}

void DisclosureRegime::validate(const MarketConfig& config) const {
    if (kind_ != Kind::Partial) return;
    if (treated_.empty()) throw ConfigError("treated: partial disclosure needs at least one treated bidder");
    for (BidderIndex id : treated_) {
        if (id >= config.n_bidders) {
            throw ConfigError("treated: bidder " + std::to_string(id) + " is out of range (n_bidders = " +
                              std::to_string(config.n_bidders) + ")");
        }
    }
}

std::string DisclosureRegime::name() const {
    switch (kind_) {
    case Kind::None:
        return "none";
    case Kind::Partial:
        return "partial";
    case Kind::Full:
        return "full";
    }
    return "none";
}

DisclosureRegime::Kind DisclosureRegime::parse_kind(const std::string& text) {
    if (text == "none") return Kind::None;
    if (text == "partial") return Kind::Partial;
    if (text == "full") return Kind::Full;
    throw ConfigError("regime: expected one of none|partial|full, got '" + text + "'");
}

} // namespace adx::market
