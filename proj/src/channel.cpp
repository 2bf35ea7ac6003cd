#include "midnet/channel.hpp"

#include "midnet/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace midnet::channel {

double ChannelParams::power_ratio() const { return std::pow(10.0, (tx_power_dbm - noise_floor_dbm) / 10.0); }

void ChannelParams::validate() const {
    auto fail = [](const char* key, const char* rule) {
        throw InvalidArgument(std::string("channel.") + key + " must be " + rule);
    };
    if (!std::isfinite(tx_power_dbm)) fail("tx_power_dbm", "finite");
    if (!std::isfinite(noise_floor_dbm)) fail("noise_floor_dbm", "finite");
    if (!(path_loss_exp > 0.0) || !std::isfinite(path_loss_exp)) fail("path_loss_exp", "> 0");
    if (!(var_scale >= 0.0) || !std::isfinite(var_scale)) fail("var_scale", ">= 0");
    if (!(var_saturation > 0.0) || !std::isfinite(var_saturation)) fail("var_saturation", "> 0");
    if (!(min_distance > 0.0) || !std::isfinite(min_distance)) fail("min_distance", "> 0");
}

LinearizedRates::LinearizedRates(int agents, int dim)
    : agents_(agents), dim_(dim), entries_(static_cast<std::size_t>(agents * agents)) {
    for (auto& e : entries_) {
        e.grad_i = Eigen::VectorXd::Zero(dim);
        e.grad_j = Eigen::VectorXd::Zero(dim);
    }
}

// std::erf is accurate to a few ulp, well inside the 1.5e-7 contract.
double erf(double x) { return std::erf(x); }

namespace {

void check_same_dim(const Position& xi, const Position& xj) {
    if (xi.size() != xj.size()) throw InvalidArgument("positions have different dimensions");
}

} // namespace

double mean_rate(const ChannelParams& p, const Position& xi, const Position& xj) {
    check_same_dim(xi, xj);
    const double d = std::max((xi - xj).norm(), p.min_distance);
    return channel::erf(std::sqrt(p.power_ratio() * std::pow(d, -p.path_loss_exp)));
}

double rate_variance(const ChannelParams& p, const Position& xi, const Position& xj) {
    check_same_dim(xi, xj);
    const double d = (xi - xj).norm();
    return p.var_scale * d / (p.var_saturation + d);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> mean_rate_gradient(const ChannelParams& p, const Position& xi,
                                                               const Position& xj) {
    check_same_dim(xi, xj);
    const Eigen::VectorXd diff = xi - xj;
    const double dist = diff.norm();
    if (dist == 0.0) return {Eigen::VectorXd::Zero(xi.size()), Eigen::VectorXd::Zero(xi.size())};

    const double d = std::max(dist, p.min_distance);
    const double n = p.path_loss_exp;
    const double root_k = std::sqrt(p.power_ratio());
    const double s = root_k * std::pow(d, -n / 2.0);
    // d/dd erf(s(d)) with s = sqrt(K) d^(-n/2)
    const double dr_dd =
        2.0 / std::sqrt(std::numbers::pi) * std::exp(-s * s) * (-n / 2.0) * root_k * std::pow(d, -n / 2.0 - 1.0);
    Eigen::VectorXd grad_i = dr_dd * diff / dist;
    Eigen::VectorXd grad_j = -grad_i;
    return {std::move(grad_i), std::move(grad_j)};
}

int common_dimension(std::span<const Position> positions) {
    if (positions.empty()) throw InvalidArgument("no positions given");
    const auto dim = positions.front().size();
    for (const auto& x : positions) {
        if (x.size() != dim) throw InvalidArgument("positions have different dimensions");
        if (!x.allFinite()) throw InvalidArgument("position has non-finite coordinates");
    }
    return static_cast<int>(dim);
}

RateTable estimate_rates(const ChannelParams& p, std::span<const Position> positions) {
    common_dimension(positions);
    const auto n = static_cast<Eigen::Index>(positions.size());
    RateTable table{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const auto& xi = positions[static_cast<std::size_t>(i)];
            const auto& xj = positions[static_cast<std::size_t>(j)];
            table.mean(i, j) = table.mean(j, i) = mean_rate(p, xi, xj);
            table.variance(i, j) = table.variance(j, i) = rate_variance(p, xi, xj);
        }
    }
    return table;
}

LinearizedRates linearize(const ChannelParams& p, std::span<const Position> positions) {
    if (positions.size() < 2) throw InvalidArgument("linearize needs at least two positions");
    const int dim = common_dimension(positions);
    const int n = static_cast<int>(positions.size());
    LinearizedRates out(n, dim);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto& xi = positions[static_cast<std::size_t>(i)];
            const auto& xj = positions[static_cast<std::size_t>(j)];
            auto& e = out(i, j);
            e.value = mean_rate(p, xi, xj);
            auto [gi, gj] = mean_rate_gradient(p, xi, xj);
            e.grad_i = std::move(gi);
            e.grad_j = std::move(gj);
        }
    }
    return out;
}

} // namespace midnet::channel
