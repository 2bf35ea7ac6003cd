#include "midnet/trajectory.hpp"

#include "midnet/error.hpp"

#include <algorithm>
#include <cmath>

namespace midnet::sim {

namespace {

template <class... Ts> struct Overloaded : Ts... { using Ts::operator()...; };

void require_dim(const Position& p, const Position& start, const char* what) {
    if (p.size() != start.size()) throw InvalidArgument(std::string(what) + " has the wrong dimension");
    if (!p.allFinite()) throw InvalidArgument(std::string(what) + " is not finite");
}

} // namespace

Trajectory::Trajectory(TrajectorySpec spec, Position start) : spec_(std::move(spec)), start_(std::move(start)) {
    if (start_.size() < 2 || !start_.allFinite()) throw InvalidArgument("trajectory start must be a finite 2-D or 3-D point");
    std::visit(Overloaded{
                   [](const Hover&) {},
                   [this](const WaypointPath& w) {
                       if (w.points.empty()) throw InvalidArgument("waypoint trajectory needs at least one point");
                       if (!(w.speed > 0.0)) throw InvalidArgument("waypoint speed must be > 0");
                       path_.push_back(start_);
                       for (const auto& p : w.points) {
                           require_dim(p, start_, "waypoint");
                           path_.push_back(p);
                       }
                       if (w.loop) path_.push_back(start_);
                       speed_ = w.speed;
                       loop_ = w.loop;
                   },
                   [this](const SquareWave& q) {
                       if (!(q.width > 0.0) || !(q.pitch > 0.0) || !(q.extent >= 0.0)) {
                           throw InvalidArgument("square_wave needs width > 0, pitch > 0, extent >= 0");
                       }
                       if (!(q.speed > 0.0)) throw InvalidArgument("square_wave speed must be > 0");
                       Position p = start_;
                       path_.push_back(p);
                       double dir = 1.0, climbed = 0.0;
                       while (true) {
                           p(0) += dir * q.width;
                           path_.push_back(p);
                           if (climbed + q.pitch > q.extent + 1e-12) break;
                           p(1) += q.pitch;
                           climbed += q.pitch;
                           path_.push_back(p);
                           dir = -dir;
                       }
                       speed_ = q.speed;
                       bounce_ = true;
                   },
                   [this](const Rose& r) {
                       require_dim(r.center, start_, "rose center");
                       if (!(r.amplitude >= 0.0) || !std::isfinite(r.angular_rate) || !std::isfinite(r.phase)) {
                           throw InvalidArgument("rose needs amplitude >= 0 and finite rate/phase");
                       }
                   },
                   [this](const Scripted& s) {
                       if (s.times.empty() || s.times.size() != s.points.size()) {
                           throw InvalidArgument("scripted trajectory needs matching, nonempty times and points");
                       }
                       for (std::size_t i = 0; i < s.times.size(); ++i) {
                           require_dim(s.points[i], start_, "scripted point");
                           if (!std::isfinite(s.times[i]) || (i > 0 && !(s.times[i] > s.times[i - 1]))) {
                               throw InvalidArgument("scripted times must be finite and strictly increasing");
                           }
                       }
                   },
               },
               spec_);
    arclength_.assign(path_.size(), 0.0);
    for (std::size_t i = 1; i < path_.size(); ++i) arclength_[i] = arclength_[i - 1] + (path_[i] - path_[i - 1]).norm();
}

Position Trajectory::along(double s) const {
    const double total = arclength_.back();
    if (total <= 0.0) return path_.front();
    if (loop_) {
        s = std::fmod(s, total);
    } else if (bounce_) {
        s = std::fmod(s, 2.0 * total);
        if (s > total) s = 2.0 * total - s;
    } else {
        s = std::min(s, total);
    }
    const auto it = std::upper_bound(arclength_.begin(), arclength_.end(), s);
    const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - arclength_.begin()), path_.size() - 1);
    const std::size_t lo = hi - 1;
    const double seg = arclength_[hi] - arclength_[lo];
    const double w = seg > 0.0 ? (s - arclength_[lo]) / seg : 0.0;
    return path_[lo] + w * (path_[hi] - path_[lo]);
}

Position Trajectory::at(double t) const {
    return std::visit(Overloaded{
                          [this](const Hover&) { return start_; },
                          [this, t](const WaypointPath&) { return along(speed_ * std::max(t, 0.0)); },
                          [this, t](const SquareWave&) { return along(speed_ * std::max(t, 0.0)); },
                          [t](const Rose& r) {
                              const double theta = r.angular_rate * t + r.phase;
                              const double rad = r.amplitude * std::cos(2.0 * theta);
                              Position p = r.center;
                              p(0) += rad * std::cos(theta);
                              p(1) += rad * std::sin(theta);
                              return p;
                          },
                          [t](const Scripted& s) {
                              if (t <= s.times.front()) return s.points.front();
                              if (t >= s.times.back()) return s.points.back();
                              const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
                              const std::size_t hi = static_cast<std::size_t>(it - s.times.begin());
                              const double w = (t - s.times[hi - 1]) / (s.times[hi] - s.times[hi - 1]);
                              return Position(s.points[hi - 1] + w * (s.points[hi] - s.points[hi - 1]));
                          },
                      },
                      spec_);
}

double Trajectory::max_speed() const {
    return std::visit(Overloaded{
                          [](const Hover&) { return 0.0; },
                          [this](const WaypointPath&) { return speed_; },
                          [this](const SquareWave&) { return speed_; },
                          // |d/dt (r cos, r sin)| = |w| A sqrt(4 sin^2 2th + cos^2 2th) <= 2 |w| A
                          [](const Rose& r) { return 2.0 * std::abs(r.angular_rate) * r.amplitude; },
                          [](const Scripted& s) {
                              double v = 0.0;
                              for (std::size_t i = 1; i < s.times.size(); ++i) {
                                  v = std::max(v, (s.points[i] - s.points[i - 1]).norm() / (s.times[i] - s.times[i - 1]));
                              }
                              return v;
                          },
                      },
                      spec_);
}

} // namespace midnet::sim
