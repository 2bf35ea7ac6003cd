#pragma once

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace midnet::channel {

using Position = Eigen::VectorXd;

/// Parameters of the stochastic link-rate model.
///
/// The mean normalized rate between two antennas a distance d apart is
/// erf(sqrt(K * d^-n)) with K the linear transmit-to-noise power ratio, and
/// its variance is a * d / (b + d).
struct ChannelParams {
    double tx_power_dbm = -53.0;
    double noise_floor_dbm = -70.0;
    double path_loss_exp = 2.52;
    double var_scale = 0.2;
    double var_saturation = 0.6;
    double min_distance = 1e-3;

    /// Linear power ratio 10^((tx - noise) / 10).
    double power_ratio() const;

    /// Throws InvalidArgument naming the offending field.
    void validate() const;
};

struct RateEstimate {
    double mean = 0.0;
    double variance = 0.0;
};

/// First-order expansion of the mean rate around the current positions.
struct LinearizedRate {
    double value = 0.0;
    Eigen::VectorXd grad_i;
    Eigen::VectorXd grad_j;
};

/// Mean and variance for every ordered pair of agents. Diagonal entries are zero.
struct RateTable {
    Eigen::MatrixXd mean;
    Eigen::MatrixXd variance;

    int size() const { return static_cast<int>(mean.rows()); }
    RateEstimate operator()(int i, int j) const { return {mean(i, j), variance(i, j)}; }
};

/// Row-major L x L grid of linearized rates.
class LinearizedRates {
public:
    LinearizedRates(int agents, int dim);

    int size() const { return agents_; }
    int dim() const { return dim_; }
    LinearizedRate& operator()(int i, int j) { return entries_[static_cast<std::size_t>(i * agents_ + j)]; }
    const LinearizedRate& operator()(int i, int j) const {
        return entries_[static_cast<std::size_t>(i * agents_ + j)];
    }

private:
    int agents_;
    int dim_;
    std::vector<LinearizedRate> entries_;
};

double erf(double x);

double mean_rate(const ChannelParams& p, const Position& xi, const Position& xj);
double rate_variance(const ChannelParams& p, const Position& xi, const Position& xj);

/// Analytic gradient of mean_rate with respect to xi and xj. The two are
/// negatives of each other; identical positions give zero vectors.
std::pair<Eigen::VectorXd, Eigen::VectorXd> mean_rate_gradient(const ChannelParams& p, const Position& xi,
                                                               const Position& xj);

RateTable estimate_rates(const ChannelParams& p, std::span<const Position> positions);

LinearizedRates linearize(const ChannelParams& p, std::span<const Position> positions);

/// Throws InvalidArgument unless all positions share one dimension and are finite.
int common_dimension(std::span<const Position> positions);

} // namespace midnet::channel
