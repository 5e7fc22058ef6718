#include "adx/market/auction.hpp"

#include <limits>
#include <vector>

#include "adx/errors.hpp"

namespace adx::market {

AuctionResult run_auction(std::span<const double> bids, Rng& rng) {
    if (bids.empty()) throw InputError("run_auction: empty bid vector");

    constexpr double kNoBid = -std::numeric_limits<double>::infinity();
    double best = kNoBid;
    double second = kNoBid;
    std::size_t n_best = 0;
    std::size_t participants = 0;
    for (double bid : bids) {
        if (!(bid > 0.0)) continue;
        ++participants;
        if (bid > best) {
            second = best;
            best = bid;
            n_best = 1;
        } else if (bid == best) {
            second = best;
            ++n_best;
        } else if (bid > second) {
            second = bid;
        }
    }

    AuctionResult result;
    result.n_participants = participants;
    if (participants == 0) return result;

    std::size_t pick = 0;
    if (n_best > 1) {
        std::uniform_int_distribution<std::size_t> tie(0, n_best - 1);
        pick = tie(rng);
    }
    for (std::size_t i = 0, seen = 0; i < bids.size(); ++i) {
        if (bids[i] > 0.0 && bids[i] == best) {
            if (seen == pick) {
                result.winner = i;
                break;
            }
            ++seen;
        }
    }
    result.price = participants > 1 ? second : 0.0;
    return result;
}

} // namespace adx::market
