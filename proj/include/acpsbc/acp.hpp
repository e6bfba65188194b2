#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "acpsbc/cbf.hpp"

namespace acpsbc {

struct AcpConfig {
    double alpha = 0.05;      // target failure level
    double delta = 0.05;      // learning rate
    double e_init = 1.0;      // conservative quantile during warm-up
    double alpha_min = 0.001; // clamp bounds keep the quantile rank well-defined
    double alpha_max = 0.999;
    bool shared_set = false;  // one score set across lags (per group) instead of per-lag sets
    bool per_pair = false;    // one ledger group per pair instead of per pair kind

    void validate(const std::string& field_prefix = "acp") const;
};

/// Online ledger of nonconformity scores: per (group, lag) sorted multisets
/// plus per (group, lag) adaptive failure levels. Groups are pair kinds by
/// default (robot-robot vs robot-obstacle) or individual pairs when
/// per_pair is set. With shared_set, all lags of a group share one multiset
/// while keeping per-lag levels.
class AcpLedger {
public:
    AcpLedger(const AcpConfig& config, int horizon, int n_groups);

    /// Sorted multiset insert. score must be >= 0, 1 <= tau <= horizon.
    void record_score(int group, int tau, double score);

    /// Rank-ceil((n+1)(1-alpha_tau)) order statistic of the lag's score set,
    /// clamped to the maximum when the rank exceeds n; e_init when empty.
    double quantile(int group, int tau) const;

    /// Quantile used for constraint tightening: e_init until the lag's set
    /// holds ceil(1/alpha) scores (conservative warm-up), then quantile().
    double tightening_quantile(int group, int tau) const;

    /// Rank-based sample quantile of a sorted score set at failure level
    /// `level`; the formula behind quantile().
    static double rank_quantile(const std::vector<double>& sorted_scores, double level,
                                double empty_value);

    /// alpha_tau <- clamp(alpha_tau + delta*(alpha - e)) with e = breached.
    /// Returns the new level.
    double update_alpha(int group, int tau, bool breached);

    double alpha_level(int group, int tau) const;
    std::size_t score_count(int group, int tau) const;
    const std::vector<double>& scores(int group, int tau) const;
    const AcpConfig& config() const { return config_; }
    int horizon() const { return horizon_; }
    int groups() const { return n_groups_; }

private:
    std::size_t set_index(int group, int tau) const;
    std::size_t level_index(int group, int tau) const;
    void check(int group, int tau) const;

    AcpConfig config_;
    int horizon_;
    int n_groups_;
    std::size_t warmup_count_;
    std::vector<std::vector<double>> sets_;  // sorted non-decreasing
    std::vector<double> alphas_;
};

/// One breach check: was the lag-tau score covered by the quantile in force?
struct CoverageEvent {
    int k = 0;
    int group = 0;
    int tau = 0;
    double score = 0.0;
    double quantile = 0.0;
    double alpha = 0.0;  // level used for the quantile
    bool breached = false;
};

/// Ring buffer of the last H solved horizons. The entry stored at time k
/// holds, per pair and lag tau, the solver's prediction of the barrier value
/// that will be observed at time k+tau (barrier at the nominal state of
/// horizon step tau, with the control planned for step tau-1 -- the control
/// "in flight" when that state is reached).
class PredictionBuffer {
public:
    PredictionBuffer(int horizon, int n_pairs);

    /// predicted(pair, tau-1) for tau = 1..H.
    void store(int k, const Eigen::MatrixXd& predicted);

    /// Prediction made at time made_at for lag tau; empty before warm-up.
    std::optional<double> lookup(int made_at, int tau, int pair) const;

    int horizon() const { return horizon_; }
    int pairs() const { return n_pairs_; }

private:
    int horizon_;
    int n_pairs_;
    std::vector<int> stamps_;                 // time index of each slot, -1 when empty
    std::vector<Eigen::MatrixXd> entries_;
};

struct LaggedScore {
    int pair = 0;
    int tau = 0;
    double score = 0.0;
};

/// Time-lagged nonconformity scores at time k: |observed_b(pair) - B_tau|
/// for every lag with a buffered prediction from time k-tau. Missing entries
/// (warm-up) are skipped.
std::vector<LaggedScore> lagged_scores(const PredictionBuffer& buffer,
                                       const std::vector<double>& observed_b, int k);

/// Barrier certificate evaluated at the observed (post-noise) state with the
/// control(s) actually applied. Same formula path as barrier_terms.
double observed_barrier(const std::vector<RobotState>& observed_states, const ControlInput& applied_u_i,
                        const ControlInput& applied_u_j, const BarrierPair& pair,
                        const std::vector<ObstacleSpec>& obstacles, const DynamicsModel& model,
                        double gamma, double unicycle_offset = 0.05);

}  // namespace acpsbc
