#include "acpsbc/acp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace acpsbc {

void AcpConfig::validate(const std::string& field_prefix) const {
    if (alpha <= 0.0 || alpha >= 1.0) throw ConfigError(field_prefix + ".alpha: must be in (0, 1)");
    if (delta <= 0.0) throw ConfigError(field_prefix + ".delta: must be > 0");
    if (e_init < 0.0) throw ConfigError(field_prefix + ".e_init: must be >= 0");
    if (alpha_min <= 0.0 || alpha_max >= 1.0 || alpha_min > alpha_max)
        throw ConfigError(field_prefix + ".alpha_min/alpha_max: need 0 < alpha_min <= alpha_max < 1");
}

AcpLedger::AcpLedger(const AcpConfig& config, int horizon, int n_groups)
    : config_(config), horizon_(horizon), n_groups_(n_groups) {
    config_.validate();
    if (horizon < 1) throw ConfigError("ledger horizon must be >= 1");
    if (n_groups < 0) throw ConfigError("ledger group count must be >= 0");
    warmup_count_ = static_cast<std::size_t>(std::ceil(1.0 / config_.alpha));
    const std::size_t n_sets = static_cast<std::size_t>(n_groups) *
                               (config_.shared_set ? 1u : static_cast<std::size_t>(horizon));
    sets_.resize(n_sets);
    alphas_.assign(static_cast<std::size_t>(n_groups) * static_cast<std::size_t>(horizon), config_.alpha);
}

void AcpLedger::check(int group, int tau) const {
    if (group < 0 || group >= n_groups_)
        throw ConfigError("ledger group out of range: " + std::to_string(group));
    if (tau < 1 || tau > horizon_) throw ConfigError("ledger lag out of range: " + std::to_string(tau));
}

std::size_t AcpLedger::set_index(int group, int tau) const {
    return config_.shared_set ? static_cast<std::size_t>(group)
                              : static_cast<std::size_t>(group) * static_cast<std::size_t>(horizon_) +
                                    static_cast<std::size_t>(tau - 1);
}

std::size_t AcpLedger::level_index(int group, int tau) const {
    return static_cast<std::size_t>(group) * static_cast<std::size_t>(horizon_) +
           static_cast<std::size_t>(tau - 1);
}

void AcpLedger::record_score(int group, int tau, double score) {
    check(group, tau);
    if (!(score >= 0.0)) throw ConfigError("nonconformity score must be >= 0");
    auto& set = sets_[set_index(group, tau)];
    set.insert(std::upper_bound(set.begin(), set.end(), score), score);
}

double AcpLedger::rank_quantile(const std::vector<double>& sorted_scores, double level,
                                double empty_value) {
    const std::size_t n = sorted_scores.size();
    if (n == 0) return empty_value;
    const auto rank = static_cast<std::size_t>(std::ceil(static_cast<double>(n + 1) * (1.0 - level)));
    if (rank > n) return sorted_scores.back();  // clamped conservative
    if (rank < 1) return sorted_scores.front();
    return sorted_scores[rank - 1];
}

double AcpLedger::quantile(int group, int tau) const {
    check(group, tau);
    return rank_quantile(sets_[set_index(group, tau)], alphas_[level_index(group, tau)], config_.e_init);
}

double AcpLedger::tightening_quantile(int group, int tau) const {
    check(group, tau);
    if (sets_[set_index(group, tau)].size() < warmup_count_) return config_.e_init;
    return quantile(group, tau);
}

double AcpLedger::update_alpha(int group, int tau, bool breached) {
    check(group, tau);
    double& level = alphas_[level_index(group, tau)];
    const double e = breached ? 1.0 : 0.0;
    level = std::clamp(level + config_.delta * (config_.alpha - e), config_.alpha_min, config_.alpha_max);
    return level;
}

double AcpLedger::alpha_level(int group, int tau) const {
    check(group, tau);
    return alphas_[level_index(group, tau)];
}

std::size_t AcpLedger::score_count(int group, int tau) const {
    check(group, tau);
    return sets_[set_index(group, tau)].size();
}

const std::vector<double>& AcpLedger::scores(int group, int tau) const {
    check(group, tau);
    return sets_[set_index(group, tau)];
}

PredictionBuffer::PredictionBuffer(int horizon, int n_pairs) : horizon_(horizon), n_pairs_(n_pairs) {
    if (horizon < 1) throw ConfigError("prediction buffer horizon must be >= 1");
    stamps_.assign(static_cast<std::size_t>(horizon), -1);
    entries_.assign(static_cast<std::size_t>(horizon),
                    Eigen::MatrixXd::Zero(std::max(n_pairs, 0), horizon));
}

void PredictionBuffer::store(int k, const Eigen::MatrixXd& predicted) {
    if (predicted.rows() != n_pairs_ || predicted.cols() != horizon_)
        throw ConfigError("prediction buffer entry has wrong shape");
    const std::size_t slot = static_cast<std::size_t>(k % horizon_);
    stamps_[slot] = k;
    entries_[slot] = predicted;
}

std::optional<double> PredictionBuffer::lookup(int made_at, int tau, int pair) const {
    if (made_at < 0 || tau < 1 || tau > horizon_ || pair < 0 || pair >= n_pairs_) return std::nullopt;
    const std::size_t slot = static_cast<std::size_t>(made_at % horizon_);
    if (stamps_[slot] != made_at) return std::nullopt;
    return entries_[slot](pair, tau - 1);
}

std::vector<LaggedScore> lagged_scores(const PredictionBuffer& buffer,
                                       const std::vector<double>& observed_b, int k) {
    std::vector<LaggedScore> out;
    for (int tau = 1; tau <= buffer.horizon(); ++tau) {
        if (k - tau < 0) continue;
        for (int pair = 0; pair < buffer.pairs(); ++pair) {
            const auto predicted = buffer.lookup(k - tau, tau, pair);
            if (!predicted) continue;
            out.push_back({pair, tau, std::abs(observed_b[static_cast<std::size_t>(pair)] - *predicted)});
        }
    }
    return out;
}

double observed_barrier(const std::vector<RobotState>& observed_states, const ControlInput& applied_u_i,
                        const ControlInput& applied_u_j, const BarrierPair& pair,
                        const std::vector<ObstacleSpec>& obstacles, const DynamicsModel& model,
                        double gamma, double unicycle_offset) {
    const BarrierTerms terms =
        barrier_terms(pair, observed_states, obstacles, model, gamma, unicycle_offset);
    return terms.value(applied_u_i, applied_u_j);
}

}  // namespace acpsbc
