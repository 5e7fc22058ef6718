#include "adx/econ/regression.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <boost/math/distributions/students_t.hpp>

#include "adx/errors.hpp"
#include "adx/text.hpp"

namespace adx::econ {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

} // namespace

std::size_t RegressionFit::index_of(const std::string& term) const {
    for (std::size_t i = 0; i < terms.size(); ++i)
        if (terms[i] == term) return i;
    throw LookupError("term '" + term + "' is not in the fit");
}

double RegressionFit::coefficient(const std::string& term) const {
    return coefficients(static_cast<Eigen::Index>(index_of(term)));
}

double RegressionFit::std_error(const std::string& term) const {
    return std_errors(static_cast<Eigen::Index>(index_of(term)));
}

double RegressionFit::t_stat(const std::string& term) const {
    const double se = std_error(term);
    const double b = coefficient(term);
    if (se == 0.0) return b == 0.0 ? kNaN : std::copysign(std::numeric_limits<double>::infinity(), b);
    return b / se;
}

double RegressionFit::p_value(const std::string& term) const {
    const double t = t_stat(term);
    if (std::isnan(t) || n_clusters < 2) return kNaN;
    if (std::isinf(t)) return 0.0;
    const boost::math::students_t dist(static_cast<double>(n_clusters - 1));
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

std::string RegressionFit::stars(const std::string& term) const {
    const double p = p_value(term);
    if (std::isnan(p)) return "";
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.10) return "*";
    return "";
}

RegressionFit fit_wls(const DesignMatrix& design) {
    if (!design.flagged.empty()) {
        std::string names;
        for (const auto& name : design.flagged) names += (names.empty() ? "" : ", ") + name;
        throw DegenerateColumnError("columns have no variation after demeaning: " + names);
    }
    const auto n = design.X.rows();
    const auto p = design.X.cols();
    if (p == 0) throw SingularDesignError("design has no columns");
    if (design.y.size() != n || design.w.size() != n) throw InputError("design dimensions disagree");

    const Eigen::VectorXd root_w = design.w.cwiseSqrt();
    const Eigen::MatrixXd A = root_w.asDiagonal() * design.X;
    const Eigen::VectorXd b = root_w.cwiseProduct(design.y);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    const auto rank = qr.rank();
    if (rank < p) {
        std::string names;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index c = rank; c < p; ++c) {
            names += (names.empty() ? "" : ", ") + design.columns[static_cast<std::size_t>(perm(c))];
        }
        throw SingularDesignError("rank-deficient design (rank " + std::to_string(rank) + " of " +
                                  std::to_string(p) + "); linearly dependent columns: " + names);
    }

    RegressionFit fit;
    fit.terms = design.columns;
    fit.coefficients = qr.solve(b);
    fit.residuals = design.y - design.X * fit.coefficients;

    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd R_inv =
        R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd permuted_bread = R_inv * R_inv.transpose();
    const auto& P = qr.colsPermutation();
    fit.bread = P * permuted_bread * P.transpose();

    const double weight_total = design.w.sum();
    Eigen::VectorXd centered = design.y;
    if (!design.demeaned) centered.array() -= design.w.dot(design.y) / weight_total;
    const double sst = design.w.dot(centered.cwiseAbs2());
    const double ssr = design.w.dot(fit.residuals.cwiseAbs2());

    fit.n = static_cast<std::size_t>(n);
    fit.k = static_cast<std::size_t>(p);
    if (design.site_fixed_effects && design.count_absorbed_in_dof) fit.k += design.n_sites;
    fit.n_clusters = design.n_clusters;
    fit.r_squared = sst > 0.0 ? 1.0 - ssr / sst : (ssr == 0.0 ? 1.0 : 0.0);
    fit.adj_r_squared = fit.n > fit.k ? 1.0 - (1.0 - fit.r_squared) * static_cast<double>(fit.n - 1) /
                                                  static_cast<double>(fit.n - fit.k)
                                      : kNaN;
    fit.std_errors = Eigen::VectorXd::Constant(p, kNaN);
    fit.absorbed = design.absorbed;
    return fit;
}

Eigen::VectorXd cluster_robust_se(RegressionFit& fit, const DesignMatrix& design) {
    const auto n = design.X.rows();
    const auto p = design.X.cols();
    if (fit.residuals.size() != n || fit.coefficients.size() != p)
        throw InputError("cluster_robust_se: fit does not belong to this design");
    const auto G = design.n_clusters;
    if (G < 2) throw InferenceError("clustered standard errors need at least 2 clusters, got " + std::to_string(G));
    if (fit.n <= fit.k)
        throw InferenceError("no residual degrees of freedom (n = " + std::to_string(fit.n) +
                             ", k = " + std::to_string(fit.k) + ")");

    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(G), p);
    for (Eigen::Index i = 0; i < n; ++i) {
        scores.row(design.cluster[static_cast<std::size_t>(i)]) +=
            (design.w(i) * fit.residuals(i)) * design.X.row(i);
    }
    const Eigen::MatrixXd meat = scores.transpose() * scores;
    const double g = static_cast<double>(G);
    const double correction = g / (g - 1.0) * static_cast<double>(fit.n - 1) / static_cast<double>(fit.n - fit.k);
    fit.vcov = correction * fit.bread * meat * fit.bread;
    fit.std_errors = fit.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.n_clusters = G;
    return fit.std_errors;
}

RegressionFit estimate_did(std::span<const PanelObservation> panel, const ModelSpec& spec) {
    auto design = build_design(panel, spec);
    if (spec.site_fixed_effects) design = within_transform(std::move(design));
    auto fit = fit_wls(design);
    cluster_robust_se(fit, design);
    return fit;
}

double marginal_effect(const RegressionFit& fit, std::span<const std::string> terms) {
    if (terms.empty()) throw LookupError("marginal_effect: no terms given");
    double total = 0.0;
    for (const auto& term : terms) total += fit.coefficient(term);
    return total;
}

double marginal_effect(const RegressionFit& fit, const std::string& base_term,
                       std::initializer_list<std::string> interaction_terms) {
    std::vector<std::string> terms{base_term};
    terms.insert(terms.end(), interaction_terms.begin(), interaction_terms.end());
    return marginal_effect(fit, terms);
}

void write_coefficient_table(std::ostream& out, const RegressionFit& fit) {
    out << "term,estimate,clustered_se,stars\n";
    for (const auto& term : fit.terms) {
        out << term << ',' << text::real(fit.coefficient(term)) << ',' << text::real(fit.std_error(term)) << ','
            << fit.stars(term) << '\n';
    }
}

void write_fit_summary(std::ostream& out, const RegressionFit& fit) {
    out << "n=" << fit.n << '\n';
    out << "clusters=" << fit.n_clusters << '\n';
    out << "k=" << fit.k << '\n';
    out << "r_squared=" << text::real(fit.r_squared) << '\n';
    out << "adj_r_squared=" << text::real(fit.adj_r_squared) << '\n';
    out << "absorbed=";
    for (std::size_t i = 0; i < fit.absorbed.size(); ++i) out << (i ? ";" : "") << fit.absorbed[i];
    out << '\n';
    for (const auto& term : fit.terms) {
        out << "estimate." << term << '=' << text::real(fit.coefficient(term)) << '\n';
        out << "clustered_se." << term << '=' << text::real(fit.std_error(term)) << '\n';
        out << "t." << term << '=' << text::real(fit.t_stat(term)) << '\n';
        out << "p." << term << '=' << text::real(fit.p_value(term)) << '\n';
    }
}

} // namespace adx::econ
