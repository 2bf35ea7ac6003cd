#include "oracles.hpp"

#include "midnet/channel.hpp"
#include "midnet/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace midnet;
using channel::ChannelParams;
using channel::Position;

namespace {

Position p2(double x, double y) {
    Position p(2);
    p << x, y;
    return p;
}

} // namespace

TEST_CASE("reference erf oracle agrees with known values") {
    // Frozen from the oracle; the first value is also the textbook erf(0.5).
    CHECK(static_cast<double>(oracles::erf_reference(0.5L)) == doctest::Approx(0.5204998778130465).epsilon(1e-15));
    CHECK(static_cast<double>(oracles::erf_reference(4.0L)) == doctest::Approx(0.9999999845827421).epsilon(1e-15));
}

TEST_CASE("erf accuracy, symmetry and saturation") {
    CHECK(channel::erf(0.0) == 0.0);
    CHECK(std::abs(channel::erf(6.0) - 1.0) <= 1e-7);
    CHECK(std::abs(channel::erf(0.5) - 0.5204999) <= 1.5e-7);
    for (int i = -600; i <= 600; ++i) {
        const double x = i / 100.0;
        const double v = channel::erf(x);
        CHECK(std::abs(v - static_cast<double>(oracles::erf_reference(x))) <= 1.5e-7);
        CHECK(channel::erf(-x) == -v);
        CHECK(std::abs(v) <= 1.0);
    }
}

TEST_CASE("mean rate at the clamp, at 30 m and with identical positions") {
    const ChannelParams p;
    const Position a = p2(0, 0);
    CHECK(channel::mean_rate(p, a, p2(p.min_distance, 0)) >= 1.0 - 1e-9);
    CHECK(channel::mean_rate(p, a, a) == channel::mean_rate(p, a, p2(p.min_distance, 0)));
    CHECK(channel::mean_rate(p, a, p2(1e-6, 0)) == channel::mean_rate(p, a, p2(p.min_distance, 0)));
    // Frozen from mean_rate_reference(-53, -70, 2.52, 30).
    const double expected_30 = 0.10962483985068894;
    CHECK(oracles::mean_rate_reference(-53, -70, 2.52, 30) == doctest::Approx(expected_30).epsilon(1e-14));
    CHECK(channel::mean_rate(p, a, p2(30, 0)) == doctest::Approx(expected_30).epsilon(1e-9));
    CHECK(channel::mean_rate(p, a, p2(0, 10)) == doctest::Approx(0.41781294115208106).epsilon(1e-9));
}

TEST_CASE("mean rate is bounded and decreasing on [min_distance, 500]") {
    const ChannelParams p;
    double prev = 2.0;
    for (int i = 0; i < 1000; ++i) {
        const double d = p.min_distance + (500.0 - p.min_distance) * i / 999.0;
        const double r = channel::mean_rate(p, p2(0, 0), p2(d, 0));
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
        if (i > 0 && prev < 1.0) CHECK(r < prev);
        CHECK(r <= prev);
        prev = r;
    }
}

TEST_CASE("rate variance") {
    const ChannelParams p;
    const Position a = p2(0, 0);
    CHECK(channel::rate_variance(p, a, a) == 0.0);
    CHECK(std::abs(channel::rate_variance(p, a, p2(0.6, 0)) - 0.1) <= 1e-12);
    CHECK(std::abs(channel::rate_variance(p, a, p2(11.4, 0)) - 0.19) <= 1e-12);
    double prev = -1.0;
    for (int i = 0; i < 1000; ++i) {
        const double v = channel::rate_variance(p, a, p2(i * 0.7, 0));
        CHECK(v >= 0.0);
        CHECK(v < p.var_scale);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("gradient matches finite differences on random pairs") {
    const ChannelParams p;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-60.0, 60.0);
    for (int trial = 0; trial < 10000; ++trial) {
        const Position xi = p2(coord(rng), coord(rng));
        const Position xj = p2(coord(rng), coord(rng));
        if ((xi - xj).norm() < 0.05) continue;
        const auto [gi, gj] = channel::mean_rate_gradient(p, xi, xj);
        const auto fd = oracles::central_difference([&](const Eigen::VectorXd& x) { return channel::mean_rate(p, x, xj); }, xi, 1e-4);
        CHECK((gi + gj).norm() == 0.0);
        const double err = (gi - fd).norm();
        CHECK(err <= std::max(1e-5 * fd.norm(), 1e-9));
    }
}

TEST_CASE("gradient at 30 m and degenerate pairs") {
    const ChannelParams p;
    const auto [gi, gj] = channel::mean_rate_gradient(p, p2(0, 0), p2(30, 0));
    // The rate falls as x_i moves away from x_j, i.e. toward -x.
    CHECK(gi(0) == doctest::Approx(0.004575161492219694).epsilon(1e-9));
    CHECK(gi(1) == 0.0);
    CHECK(gj(0) == -gi(0));
    const auto fd = oracles::central_difference([&](const Eigen::VectorXd& x) { return channel::mean_rate(p, x, p2(30, 0)); }, p2(0, 0), 1e-4);
    CHECK(std::abs(gi(0) - fd(0)) <= 1e-5 * std::abs(fd(0)));
    const auto [zi, zj] = channel::mean_rate_gradient(p, p2(3, 4), p2(3, 4));
    CHECK(zi.norm() == 0.0);
    CHECK(zj.norm() == 0.0);
}

TEST_CASE("linearize") {
    const ChannelParams p;
    const std::vector<Position> pos = {p2(0, 0), p2(10, 0), p2(3, 7), p2(-4, 2)};
    const auto lin = channel::linearize(p, pos);
    REQUIRE(lin.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(lin(i, i).value == 0.0);
        for (int j = 0; j < 4; ++j) {
            if (i == j) continue;
            CHECK(lin(i, j).value == channel::mean_rate(p, pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]));
            CHECK(lin(i, j).value == lin(j, i).value);
            CHECK((lin(i, j).grad_i + lin(i, j).grad_j).norm() == 0.0);
        }
    }
    const auto rates = channel::estimate_rates(p, pos);
    CHECK(rates.mean.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK((rates.mean - rates.mean.transpose()).cwiseAbs().maxCoeff() == 0.0);

    std::vector<Position> bad = {p2(0, 0), Position::Zero(3)};
    CHECK_THROWS_AS(channel::linearize(p, bad), InvalidArgument);
    CHECK_THROWS_AS(channel::linearize(p, std::vector<Position>{p2(0, 0)}), InvalidArgument);
}

TEST_CASE("parameter validation") {
    ChannelParams p;
    CHECK_NOTHROW(p.validate());
    p.path_loss_exp = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = {};
    p.var_saturation = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = {};
    p.min_distance = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    CHECK(ChannelParams{}.power_ratio() == doctest::Approx(50.118723362727228).epsilon(1e-14));
}
