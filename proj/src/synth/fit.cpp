#include "adx/synth/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "adx/errors.hpp"
#include "adx/text.hpp"

namespace adx::synth {

double SynthFit::mspe_ratio() const {
    if (mspe_pre > 0.0) return mspe_post / mspe_pre;
    return mspe_post > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
    const auto n = v.size();
    if (n == 0) throw InputError("project_simplex: empty vector");
    std::vector<double> sorted(v.data(), v.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        cumulative += sorted[static_cast<std::size_t>(i)];
        const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (sorted[static_cast<std::size_t>(i)] - candidate > 0.0) theta = candidate;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

namespace {

// Minimizer of ||b - A v||^2 over the affine set {sum v = 1, v_i = 0 off
// `support`}: the bordered system [G_SS 1; 1' 0][v; nu] = [(A'b)_S; 1] on the
// Gram matrix G = A'A, solved in the least-squares sense when singular.
Eigen::VectorXd solve_face(const Eigen::MatrixXd& gram, const Eigen::VectorXd& Atb,
                           const std::vector<Eigen::Index>& support) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(gram.cols());
    const auto m = static_cast<Eigen::Index>(support.size());
    if (m == 1) {
        v(support.front()) = 1.0;
        return v;
    }
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto si = support[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m; ++j) K(i, j) = gram(si, support[static_cast<std::size_t>(j)]);
        K(i, m) = 1.0;
        K(m, i) = 1.0;
        rhs(i) = Atb(si);
    }
    rhs(m) = 1.0;
    const Eigen::VectorXd solution = K.completeOrthogonalDecomposition().solve(rhs);
    for (Eigen::Index i = 0; i < m; ++i) v(support[static_cast<std::size_t>(i)]) = solution(i);
    return v;
}

class SimplexSolver {
public:
    SimplexSolver(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, SynthFit& fit)
        : A_(A), b_(b), fit_(fit), AtA_(A.transpose() * A), Atb_(A.transpose() * b) {
        fit_.min_weight_seen = std::numeric_limits<double>::infinity();
        const auto J = A.cols();
        const Eigen::VectorXd start = Eigen::VectorXd::Constant(J, 1.0 / static_cast<double>(J));
        accept(start, objective(start));
    }

    const Eigen::VectorXd& weights() const { return w_; }
    double value() const { return obj_; }
    double objective(const Eigen::VectorXd& w) const { return (b_ - A_ * w).squaredNorm(); }
    Eigen::VectorXd gradient(const Eigen::VectorXd& w) const { return 2.0 * (AtA_ * w - Atb_); }
    const Eigen::MatrixXd& gram() const { return AtA_; }

    // Accepts only non-increasing objective values.
    bool try_accept(const Eigen::VectorXd& next, double value) {
        if (!(value <= obj_)) return false;
        accept(next, value);
        return true;
    }

    // Active-set pass: minimize over the face spanned by the current support,
    // stepping back to the boundary when the face minimizer leaves the
    // simplex, and grow the support while some excluded donor has a smaller
    // gradient than the support. Returns true once the KKT conditions hold.
    bool polish() {
        const auto J = A_.cols();
        std::vector<Eigen::Index> support;
        for (Eigen::Index j = 0; j < J; ++j)
            if (w_(j) > 0.0) support.push_back(j);
        for (Eigen::Index round = 0; round < 2 * J + 10 && !support.empty(); ++round) {
            for (Eigen::Index inner = 0; inner <= J; ++inner) {
                const Eigen::VectorXd v = solve_face(AtA_, Atb_, support);
                bool interior = true;
                double alpha = 1.0;
                for (auto j : support) {
                    if (v(j) <= 0.0) {
                        interior = false;
                        alpha = std::min(alpha, w_(j) / (w_(j) - v(j)));
                    }
                }
                Eigen::VectorXd next = interior ? v : Eigen::VectorXd(w_ + alpha * (v - w_));
                std::vector<Eigen::Index> kept;
                for (auto j : support) {
                    const bool blocking = !interior && v(j) <= 0.0 && w_(j) / (w_(j) - v(j)) <= alpha;
                    if (blocking || next(j) <= 0.0) {
                        next(j) = 0.0;
                    } else {
                        kept.push_back(j);
                    }
                }
                if (kept.empty()) return false;
                next /= next.sum();
                if (!try_accept(next, objective(next))) return false;
                support = kept;
                if (interior) break;
            }

            const Eigen::VectorXd grad = gradient(w_);
            double nu = 0.0;
            for (auto j : support) nu += grad(j);
            nu /= static_cast<double>(support.size());
            const double slack = 1e-12 * (1.0 + grad.cwiseAbs().maxCoeff());
            Eigen::Index entering = -1;
            double most_negative = -slack;
            for (Eigen::Index j = 0; j < J; ++j) {
                if (std::find(support.begin(), support.end(), j) != support.end()) continue;
                if (grad(j) - nu < most_negative) {
                    most_negative = grad(j) - nu;
                    entering = j;
                }
            }
            if (entering < 0) return true;
            support.push_back(entering);
            std::sort(support.begin(), support.end());
        }
        return false;
    }

private:
    void accept(const Eigen::VectorXd& next, double value) {
        w_ = next;
        obj_ = value;
        fit_.objective_history.push_back(obj_);
        fit_.min_weight_seen = std::min(fit_.min_weight_seen, w_.minCoeff());
        fit_.max_sum_error_seen = std::max(fit_.max_sum_error_seen, std::abs(w_.sum() - 1.0));
    }

    const Eigen::MatrixXd& A_;
    const Eigen::VectorXd& b_;
    SynthFit& fit_;
    Eigen::MatrixXd AtA_;
    Eigen::VectorXd Atb_;
    Eigen::VectorXd w_;
    double obj_ = 0.0;
};

constexpr int kPolishEvery = 25;

} // namespace

SynthFit solve_simplex_ls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const SolverOptions& options) {
    const auto J = A.cols();
    if (J == 0) throw InputError("synthetic control needs at least one donor");
    if (A.rows() == 0 || A.rows() != b.size()) throw InputError("predictor dimensions disagree");
    if (!A.allFinite() || !b.allFinite()) throw InputError("predictors contain non-finite values");

    SynthFit fit;
    SimplexSolver solver(A, b, fit);
    const auto finish = [&](const std::string& reason, bool converged) {
        fit.weights = solver.weights();
        fit.objective = solver.value();
        fit.stop_reason = reason;
        fit.converged = converged;
        return fit;
    };
    if (J == 1) return finish("single_donor", true);

    const double L = 2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(solver.gram(), Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .maxCoeff();
    if (!(L > 0.0)) return finish("tolerance", true); // A == 0: every weight vector is optimal

    // Accelerated projected gradient, restarted whenever the momentum step
    // fails to descend. A plain 1/L step from an accepted iterate never
    // increases the objective, so accepted values are non-increasing.
    Eigen::VectorXd y = solver.weights();
    Eigen::VectorXd previous = y;
    double momentum = 1.0;
    bool accelerated = false;
    const auto restart = [&] {
        y = solver.weights();
        previous = y;
        momentum = 1.0;
        accelerated = false;
    };
    for (int it = 1; it <= options.max_iterations; ++it) {
        fit.iterations = it;
        const Eigen::VectorXd candidate = project_simplex(y - solver.gradient(y) / L);
        const double before = solver.value();
        if (!solver.try_accept(candidate, solver.objective(candidate))) {
            if (accelerated) {
                restart();
                continue;
            }
            if (options.polish && solver.polish()) return finish("kkt", true);
            return finish("stalled", true);
        }
        const double improvement = before - solver.value();
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        y = solver.weights() + ((momentum - 1.0) / next_momentum) * (solver.weights() - previous);
        accelerated = momentum > 1.0;
        previous = solver.weights();
        momentum = next_momentum;
        if (improvement < options.tolerance) {
            if (options.polish && solver.polish()) return finish("kkt", true);
            return finish("tolerance", true);
        }
        if (options.polish && it % kPolishEvery == 0) {
            if (solver.polish()) return finish("kkt", true);
            restart();
        }
    }
    if (options.polish && solver.polish()) return finish("kkt", true);
    return finish("max_iterations", false);
}

SynthFit fit_weights(const PredictorMatrix& pm, const SolverOptions& options) {
    if (pm.X0.cols() != static_cast<Eigen::Index>(pm.donor_ids.size()))
        throw InputError("predictor matrix has " + std::to_string(pm.X0.cols()) + " donor columns but " +
                         std::to_string(pm.donor_ids.size()) + " donor ids");
    auto fit = solve_simplex_ls(pm.scaled_X0(), pm.scaled_X1(), options);
    fit.treated_id = pm.treated_id;
    fit.donor_ids = pm.donor_ids;
    return fit;
}

std::string to_string(OutcomeKind kind) {
    return kind == OutcomeKind::Impressions ? "impressions" : "price";
}

OutcomeKind parse_outcome(const std::string& text) {
    if (text == "impressions") return OutcomeKind::Impressions;
    if (text == "price") return OutcomeKind::Price;
    throw ConfigError("outcome: expected impressions|price, got '" + text + "'");
}

std::vector<OutcomeSeries> outcome_series(std::span<const BuyerWeekRecord> kept, std::span<const std::string> buyers,
                                          OutcomeKind kind) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < buyers.size(); ++i) index.emplace(buyers[i], i);
    std::set<int> weeks;
    std::vector<std::map<int, std::pair<double, double>>> cells(buyers.size()); // week -> (imps, revenue)
    for (const auto& r : kept) {
        const auto it = index.find(r.buyer_id);
        if (it == index.end()) continue;
        weeks.insert(r.week);
        auto& cell = cells[it->second][r.week];
        cell.first += r.impressions_won;
        cell.second += r.impressions_won * r.avg_price;
    }
    std::vector<OutcomeSeries> series(buyers.size());
    for (int week : weeks) {
        if (kind == OutcomeKind::Price) {
            const bool complete = std::all_of(cells.begin(), cells.end(), [&](const auto& by_week) {
                const auto it = by_week.find(week);
                return it != by_week.end() && it->second.first > 0.0;
            });
            if (!complete) continue;
        }
        for (std::size_t b = 0; b < buyers.size(); ++b) {
            const auto it = cells[b].find(week);
            double value = 0.0;
            if (it != cells[b].end()) {
                value = kind == OutcomeKind::Impressions ? it->second.first : it->second.second / it->second.first;
            }
            series[b].weeks.push_back(week);
            series[b].values.push_back(value);
        }
    }
    return series;
}

SynthFit gaps_and_mspe(SynthFit fit, const OutcomeSeries& treated, std::span<const OutcomeSeries> donors,
                       int intervention_week) {
    if (donors.size() != static_cast<std::size_t>(fit.weights.size()))
        throw AlignmentError("got " + std::to_string(donors.size()) + " donor series for " +
                             std::to_string(fit.weights.size()) + " weights");
    if (treated.values.size() != treated.weeks.size())
        throw AlignmentError("treated series has " + std::to_string(treated.values.size()) + " values for " +
                             std::to_string(treated.weeks.size()) + " weeks");
    for (std::size_t j = 0; j < donors.size(); ++j) {
        if (donors[j].weeks != treated.weeks || donors[j].values.size() != treated.weeks.size()) {
            const auto name = j < fit.donor_ids.size() ? fit.donor_ids[j] : std::to_string(j);
            throw AlignmentError("donor " + name + " is not aligned with the treated series weeks");
        }
    }
    if (!std::is_sorted(treated.weeks.begin(), treated.weeks.end()) ||
        std::adjacent_find(treated.weeks.begin(), treated.weeks.end()) != treated.weeks.end())
        throw AlignmentError("outcome weeks must be strictly increasing");

    fit.weeks = treated.weeks;
    fit.treated_outcome = treated.values;
    fit.synthetic_outcome.assign(treated.weeks.size(), 0.0);
    fit.gaps.assign(treated.weeks.size(), 0.0);
    fit.intervention_week = intervention_week;
    double pre_sum = 0.0;
    double post_sum = 0.0;
    std::size_t n_pre = 0;
    std::size_t n_post = 0;
    for (std::size_t t = 0; t < treated.weeks.size(); ++t) {
        double synthetic = 0.0;
        for (std::size_t j = 0; j < donors.size(); ++j)
            synthetic += fit.weights(static_cast<Eigen::Index>(j)) * donors[j].values[t];
        fit.synthetic_outcome[t] = synthetic;
        const double gap = treated.values[t] - synthetic;
        fit.gaps[t] = gap;
        if (treated.weeks[t] < intervention_week) {
            pre_sum += gap * gap;
            ++n_pre;
        } else {
            post_sum += gap * gap;
            ++n_post;
        }
    }
    if (n_pre == 0 || n_post == 0)
        throw AlignmentError("intervention week " + std::to_string(intervention_week) +
                             " leaves no pre-period or no post-period weeks");
    fit.mspe_pre = pre_sum / static_cast<double>(n_pre);
    fit.mspe_post = post_sum / static_cast<double>(n_post);
    return fit;
}

std::vector<int> resolve_pre_weeks(std::span<const BuyerWeekRecord> records, const SynthConfig& config) {
    std::vector<int> weeks;
    if (!config.pre_weeks.empty()) {
        weeks = config.pre_weeks;
    } else {
        for (int week : weeks_of(records))
            if (week < config.intervention_week) weeks.push_back(week);
    }
    for (int week : weeks)
        if (week >= config.intervention_week)
            throw ConfigError("pre-week " + std::to_string(week) + " is not before the intervention week");
    if (weeks.empty()) throw InputError("no weeks before intervention week " + std::to_string(config.intervention_week));
    return weeks;
}

SynthFit synth_control(std::span<const BuyerWeekRecord> records, const std::string& treated_id,
                       const SynthConfig& config) {
    validate_records(records);
    const auto kept = apply_filter(records, config.predictors.filter);
    const auto pre_weeks = resolve_pre_weeks(kept, config);
    const auto pm = build_predictors_filtered(kept, treated_id, pre_weeks, config.predictors);
    auto fit = fit_weights(pm, config.solver);
    std::vector<std::string> units{treated_id};
    units.insert(units.end(), pm.donor_ids.begin(), pm.donor_ids.end());
    const auto series = outcome_series(kept, units, config.outcome);
    return gaps_and_mspe(std::move(fit), series.front(), std::span(series).subspan(1), config.intervention_week);
}

void write_weights(std::ostream& out, const SynthFit& fit) {
    out << "donor_id,weight\n";
    for (std::size_t j = 0; j < fit.donor_ids.size(); ++j)
        out << fit.donor_ids[j] << ',' << text::real(fit.weights(static_cast<Eigen::Index>(j))) << '\n';
}

void write_gaps(std::ostream& out, const SynthFit& fit) {
    out << "week,treated,synthetic,gap\n";
    for (std::size_t t = 0; t < fit.weeks.size(); ++t)
        out << fit.weeks[t] << ',' << text::real(fit.treated_outcome[t]) << ',' << text::real(fit.synthetic_outcome[t])
            << ',' << text::real(fit.gaps[t]) << '\n';
}

void write_fit_summary(std::ostream& out, const SynthFit& fit) {
    out << "treated=" << fit.treated_id << '\n';
    out << "donors=" << fit.donor_ids.size() << '\n';
    out << "objective=" << text::real(fit.objective) << '\n';
    out << "iterations=" << fit.iterations << '\n';
    out << "converged=" << (fit.converged ? "true" : "false") << '\n';
    out << "stop_reason=" << fit.stop_reason << '\n';
    out << "intervention_week=" << fit.intervention_week << '\n';
    out << "mspe_pre=" << text::real(fit.mspe_pre) << '\n';
    out << "mspe_post=" << text::real(fit.mspe_post) << '\n';
    out << "mspe_ratio=" << text::real(fit.mspe_ratio()) << '\n';
}

} // namespace adx::synth
