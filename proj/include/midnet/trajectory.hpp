#pragma once

#include "midnet/channel.hpp"

#include <variant>
#include <vector>

namespace midnet::sim {

using channel::Position;

struct Hover {};

/// Piecewise-linear path from the start position through `points`.
struct WaypointPath {
    std::vector<Position> points;
    double speed = 1.0;
    bool loop = false;  ///< return to the start and repeat
};

/// Boustrophedon sweep: legs of length `width` along +x/-x, shifted by
/// `pitch` along +y between legs, until `extent` of y travel is covered;
/// then the sweep runs back the way it came.
struct SquareWave {
    double width = 50.0;
    double pitch = 10.0;
    double extent = 50.0;
    double speed = 1.0;
};

/// Four-leafed clover r = amplitude * cos(2 theta), theta = rate * t + phase,
/// around `center`.
struct Rose {
    Position center;
    double amplitude = 20.0;
    double angular_rate = 0.05;  ///< rad/s
    double phase = 0.0;          ///< rad
};

/// Positions at given times, linearly interpolated and held after the end.
struct Scripted {
    std::vector<double> times;
    std::vector<Position> points;
};

using TrajectorySpec = std::variant<Hover, WaypointPath, SquareWave, Rose, Scripted>;

class Trajectory {
public:
    Trajectory(TrajectorySpec spec, Position start);

    Position at(double t) const;
    /// Upper bound on the speed along the trajectory.
    double max_speed() const;
    const TrajectorySpec& spec() const { return spec_; }
    const Position& start() const { return start_; }

private:
    TrajectorySpec spec_;
    Position start_;
    std::vector<Position> path_;      ///< polyline vertices for path-like specs
    std::vector<double> arclength_;   ///< cumulative length at each vertex
    double speed_ = 0.0;
    bool loop_ = false;
    bool bounce_ = false;

    Position along(double s) const;
};

} // namespace midnet::sim
