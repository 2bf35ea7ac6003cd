#pragma once

#include <Eigen/Dense>

namespace midnet::frames {

struct Geodetic {
    double lat = 0.0;  ///< degrees
    double lon = 0.0;  ///< degrees
    double alt = 0.0;  ///< meters above the ellipsoid

    void validate() const;
};

/// WGS84 ellipsoid.
inline constexpr double kSemiMajor = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;

Eigen::Vector3d geodetic_to_ecef(const Geodetic& g);
Geodetic ecef_to_geodetic(const Eigen::Vector3d& ecef);

/// East-north-up coordinates of `point` in the tangent frame at `ref`.
Eigen::Vector3d geodetic_to_enu(const Geodetic& point, const Geodetic& ref);
Geodetic enu_to_geodetic(const Eigen::Vector3d& enu, const Geodetic& ref);

/// x' = R x + t
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static RigidTransform identity() { return {}; }
    /// Throws InvalidArgument unless R is orthonormal with det +1 (1e-10).
    void validate() const;
    RigidTransform inverse() const;
    Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return rotation * x + translation; }
};

/// a * b applies b first.
RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

/// H_a^b is the pose of frame b expressed in frame a (maps b coordinates to
/// a coordinates). With g the global ECEF frame, r the common reference, p
/// the current GPS fix and i the UAV's initialization frame, the result
/// (H_g^r)^-1 H_g^p (H_i^p)^-1 maps local coordinates into the common frame.
RigidTransform compose_common_frame(const RigidTransform& h_g_r, const RigidTransform& h_g_p,
                                    const RigidTransform& h_i_p);

/// Pose of the ENU tangent frame at `g` in ECEF.
RigidTransform enu_pose(const Geodetic& g);

/// Maps ENU coordinates at `from` into ENU coordinates at `to`.
RigidTransform enu_change(const Geodetic& from, const Geodetic& to);

} // namespace midnet::frames
