#include "midnet/frames.hpp"

#include "midnet/error.hpp"

#include <cmath>
#include <numbers>

namespace midnet::frames {

namespace {

constexpr double kE2 = kFlattening * (2.0 - kFlattening);

double radians(double deg) { return deg * std::numbers::pi / 180.0; }
double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }

// Rows are the east, north and up axes expressed in ECEF.
Eigen::Matrix3d ecef_to_enu_rotation(const Geodetic& ref) {
    const double sl = std::sin(radians(ref.lat)), cl = std::cos(radians(ref.lat));
    const double so = std::sin(radians(ref.lon)), co = std::cos(radians(ref.lon));
    Eigen::Matrix3d r;
    r << -so, co, 0.0,
         -sl * co, -sl * so, cl,
         cl * co, cl * so, sl;
    return r;
}

} // namespace

void Geodetic::validate() const {
    if (!std::isfinite(lat) || std::abs(lat) > 90.0) throw InvalidArgument("latitude must be within [-90, 90] degrees");
    if (!std::isfinite(lon) || std::abs(lon) > 180.0) throw InvalidArgument("longitude must be within [-180, 180] degrees");
    if (!std::isfinite(alt)) throw InvalidArgument("altitude must be finite");
}

Eigen::Vector3d geodetic_to_ecef(const Geodetic& g) {
    g.validate();
    const double lat = radians(g.lat), lon = radians(g.lon);
    const double n = kSemiMajor / std::sqrt(1.0 - kE2 * std::sin(lat) * std::sin(lat));
    return {(n + g.alt) * std::cos(lat) * std::cos(lon), (n + g.alt) * std::cos(lat) * std::sin(lon),
            (n * (1.0 - kE2) + g.alt) * std::sin(lat)};
}

Geodetic ecef_to_geodetic(const Eigen::Vector3d& ecef) {
    const double p = std::hypot(ecef.x(), ecef.y());
    const double lon = std::atan2(ecef.y(), ecef.x());
    double lat = std::atan2(ecef.z(), p * (1.0 - kE2));
    double alt = 0.0;
    for (int it = 0; it < 50; ++it) {
        const double s = std::sin(lat);
        const double n = kSemiMajor / std::sqrt(1.0 - kE2 * s * s);
        // Near the poles p / cos(lat) loses precision; use the z form there.
        alt = std::abs(std::cos(lat)) > 1e-3 ? p / std::cos(lat) - n : ecef.z() / s - n * (1.0 - kE2);
        const double next = std::atan2(ecef.z(), p * (1.0 - kE2 * n / (n + alt)));
        const bool done = std::abs(next - lat) < 1e-15;
        lat = next;
        if (done) break;
    }
    return {degrees(lat), degrees(lon), alt};
}

Eigen::Vector3d geodetic_to_enu(const Geodetic& point, const Geodetic& ref) {
    return ecef_to_enu_rotation(ref) * (geodetic_to_ecef(point) - geodetic_to_ecef(ref));
}

Geodetic enu_to_geodetic(const Eigen::Vector3d& enu, const Geodetic& ref) {
    return ecef_to_geodetic(geodetic_to_ecef(ref) + ecef_to_enu_rotation(ref).transpose() * enu);
}

void RigidTransform::validate() const {
    if (!rotation.allFinite() || !translation.allFinite()) throw InvalidArgument("rigid transform has non-finite entries");
    if ((rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-10) {
        throw InvalidArgument("rotation is not orthonormal");
    }
    if (std::abs(rotation.determinant() - 1.0) > 1e-10) throw InvalidArgument("rotation determinant is not +1");
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    RigidTransform out;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.rotation * b.translation + a.translation;
    return out;
}

RigidTransform compose_common_frame(const RigidTransform& h_g_r, const RigidTransform& h_g_p,
                                    const RigidTransform& h_i_p) {
    h_g_r.validate();
    h_g_p.validate();
    h_i_p.validate();
    return h_g_r.inverse() * h_g_p * h_i_p.inverse();
}

RigidTransform enu_pose(const Geodetic& g) {
    RigidTransform h;
    h.rotation = ecef_to_enu_rotation(g).transpose();
    h.translation = geodetic_to_ecef(g);
    return h;
}

RigidTransform enu_change(const Geodetic& from, const Geodetic& to) {
    return compose_common_frame(enu_pose(to), enu_pose(from), RigidTransform::identity());
}

} // namespace midnet::frames
