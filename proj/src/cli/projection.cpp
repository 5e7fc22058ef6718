#include "adx/cli/projection.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "adx/errors.hpp"
#include "adx/text.hpp"

namespace adx::cli {

namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) throw InputError(std::string(name) + " must be positive");
}

} // namespace

RevenueProjection project_revenue(const ProjectionInputs& in) {
    require_positive(in.weekly_supply, "weekly_supply");
    require_positive(in.weeks, "weeks");
    require_positive(in.n_sites, "n_sites");
    require_positive(in.commission, "commission");
    if (!(in.cpm_uplift >= 0.0) || !std::isfinite(in.cpm_uplift)) throw InputError("cpm_uplift must be >= 0");
    RevenueProjection p;
    p.per_site = in.weekly_supply / 1000.0 * in.cpm_uplift * in.weeks;
    p.total = p.per_site * in.n_sites;
    p.exchange = p.total * in.commission;
    return p;
}

void write_projection_report(std::ostream& out, const ProjectionInputs& in, const RevenueProjection& p) {
    out << fmt::format("weekly supply {} impressions, uplift {} per thousand, {} weeks, {} sites, commission {}\n",
                       text::real(in.weekly_supply), text::real(in.cpm_uplift), text::real(in.weeks),
                       text::real(in.n_sites), text::real(in.commission));
    out << fmt::format("per_site {:.0f}\ntotal {:.0f}\nexchange {:.0f}\n", std::round(p.per_site), std::round(p.total),
                       std::round(p.exchange));
}

void write_projection_kv(std::ostream& out, const ProjectionInputs& in, const RevenueProjection& p) {
    out << "weekly_supply=" << text::real(in.weekly_supply) << '\n'
        << "cpm_uplift=" << text::real(in.cpm_uplift) << '\n'
        << "weeks=" << text::real(in.weeks) << '\n'
        << "n_sites=" << text::real(in.n_sites) << '\n'
        << "commission=" << text::real(in.commission) << '\n'
        << "per_site=" << text::real(p.per_site) << '\n'
        << "total=" << text::real(p.total) << '\n'
        << "exchange=" << text::real(p.exchange) << '\n';
}

} // namespace adx::cli
