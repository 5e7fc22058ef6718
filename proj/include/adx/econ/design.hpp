#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adx/econ/model.hpp"
#include "adx/econ/panel.hpp"

namespace adx::econ {

struct DesignMatrix {
    std::vector<std::string> columns;
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd w;
    std::vector<int> cluster; // dense ids, 0..n_clusters-1 in sorted label order
    std::vector<int> site;    // dense ids, 0..n_sites-1 in sorted label order
    std::size_t n_clusters = 0;
    std::size_t n_sites = 0;
    bool site_fixed_effects = true;
    bool demeaned = false;
    bool count_absorbed_in_dof = true;
    // Regressors excluded because site fixed effects absorb them.
    std::vector<std::string> absorbed;
    // Columns found numerically zero after the within transform.
    std::vector<std::string> flagged;
    // Sites with a single observation (their rows demean to zero).
    std::size_t singleton_sites = 0;
    // Placebo split actually used, or -1.
    int placebo_split_week = -1;

    std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }
};

// Builds y, X, weights, site and cluster ids from the panel. Columns follow
// the declared term order; without site FE a trailing "const" column is added.
DesignMatrix build_design(std::span<const PanelObservation> panel, const ModelSpec& spec);

// Midpoint of the week range, used as the default placebo split.
int midpoint_week(std::span<const PanelObservation> panel);

// Replaces every column and y by its deviation from the weighted site mean.
// Columns that become numerically zero are recorded in `flagged`.
DesignMatrix within_transform(DesignMatrix design);

} // namespace adx::econ
