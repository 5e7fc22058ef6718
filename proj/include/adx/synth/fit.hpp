#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adx/synth/predictors.hpp"

namespace adx::synth {

struct SolverOptions {
    double tolerance = 1e-10; // stop once one step improves the objective by less
    int max_iterations = 10000;
    bool polish = true;       // finish with an active-set pass on the final support
};

struct SynthFit {
    std::string treated_id;
    std::vector<std::string> donor_ids;
    Eigen::VectorXd weights;
    double objective = 0.0;
    std::vector<double> objective_history; // one entry per accepted iterate
    int iterations = 0;
    bool converged = false;
    std::string stop_reason; // tolerance, stalled, max_iterations, kkt or single_donor
    // Worst simplex violation seen over every iterate.
    double min_weight_seen = 0.0;
    double max_sum_error_seen = 0.0;

    // Filled by gaps_and_mspe.
    std::vector<int> weeks;
    std::vector<double> treated_outcome;
    std::vector<double> synthetic_outcome;
    std::vector<double> gaps;
    int intervention_week = 0;
    double mspe_pre = 0.0;
    double mspe_post = 0.0;

    // post/pre MSPE; +inf for a perfect pre-fit with a nonzero post gap and
    // 0 when both vanish.
    double mspe_ratio() const;
};

// Euclidean projection onto {w >= 0, sum w = 1}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

// min ||b - A w||^2 over the simplex by projected gradient with step 1/L,
// started from uniform weights.
SynthFit solve_simplex_ls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const SolverOptions& options = {});

// Weights on the (optionally standardized) predictors, identity predictor
// weighting.
SynthFit fit_weights(const PredictorMatrix& pm, const SolverOptions& options = {});

enum class OutcomeKind { Impressions, Price };

std::string to_string(OutcomeKind kind);
OutcomeKind parse_outcome(const std::string& text);

struct OutcomeSeries {
    std::vector<int> weeks;
    std::vector<double> values;
};

// Weekly outcome series for `buyers`, aligned on a common week grid: every
// week with a record for any of them. Impressions default to 0; for prices a
// week is dropped when any of the buyers won nothing in it.
std::vector<OutcomeSeries> outcome_series(std::span<const BuyerWeekRecord> kept, std::span<const std::string> buyers,
                                          OutcomeKind kind);

// Synthetic outcome = donors weighted by fit.weights; gap = treated minus
// synthetic. Weeks before `intervention_week` are pre-period.
SynthFit gaps_and_mspe(SynthFit fit, const OutcomeSeries& treated, std::span<const OutcomeSeries> donors,
                       int intervention_week);

struct SynthConfig {
    std::vector<int> pre_weeks; // predictor weeks; empty means every week before the intervention
    int intervention_week = 0;
    OutcomeKind outcome = OutcomeKind::Impressions;
    PredictorOptions predictors;
    SolverOptions solver;
};

std::vector<int> resolve_pre_weeks(std::span<const BuyerWeekRecord> records, const SynthConfig& config);

// build_predictors, fit_weights and gaps_and_mspe for one treated buyer.
SynthFit synth_control(std::span<const BuyerWeekRecord> records, const std::string& treated_id,
                       const SynthConfig& config);

// donor_id,weight
void write_weights(std::ostream& out, const SynthFit& fit);
// week,treated,synthetic,gap
void write_gaps(std::ostream& out, const SynthFit& fit);
// key=value fit summary
void write_fit_summary(std::ostream& out, const SynthFit& fit);

} // namespace adx::synth
