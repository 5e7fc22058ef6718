#pragma once

#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adx/econ/design.hpp"

namespace adx::econ {

struct RegressionFit {
    std::vector<std::string> terms;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors; // clustered; NaN until cluster_robust_se runs
    Eigen::MatrixXd vcov;
    Eigen::MatrixXd bread; // (X'WX)^-1
    Eigen::VectorXd residuals;
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    std::size_t n = 0;
    std::size_t n_clusters = 0;
    // Parameters counted for degrees of freedom (regressors plus absorbed
    // site effects when the design counts them).
    std::size_t k = 0;
    std::vector<std::string> absorbed;

    double coefficient(const std::string& term) const;
    double std_error(const std::string& term) const;
    std::size_t index_of(const std::string& term) const;

    // t statistic, two-sided p-value from Student t with G-1 degrees of
    // freedom, and conventional stars (*** 1%, ** 5%, * 10%).
    double t_stat(const std::string& term) const;
    double p_value(const std::string& term) const;
    std::string stars(const std::string& term) const;
};

// Weighted least squares through a column-pivoted Householder QR of
// sqrt(W) X. Throws SingularDesignError naming dependent columns and
// DegenerateColumnError when the design carries flagged columns.
RegressionFit fit_wls(const DesignMatrix& design);

// Cluster-robust sandwich, c (X'WX)^-1 (sum_g u_g u_g') (X'WX)^-1 with
// u_g = sum_{i in g} w_i x_i e_i and c = G/(G-1) * (n-1)/(n-k). Fills
// std_errors and vcov in place and returns the standard errors.
Eigen::VectorXd cluster_robust_se(RegressionFit& fit, const DesignMatrix& design);

// build_design -> within_transform (under site FE) -> fit_wls -> cluster_robust_se.
RegressionFit estimate_did(std::span<const PanelObservation> panel, const ModelSpec& spec);

// Sum of the named coefficients, e.g. a base effect plus its interactions.
double marginal_effect(const RegressionFit& fit, const std::string& base_term,
                       std::initializer_list<std::string> interaction_terms = {});
double marginal_effect(const RegressionFit& fit, std::span<const std::string> terms);

// term,estimate,clustered_se,stars in term order.
void write_coefficient_table(std::ostream& out, const RegressionFit& fit);

// key=value summary including per-term t statistics and p-values.
void write_fit_summary(std::ostream& out, const RegressionFit& fit);

} // namespace adx::econ
