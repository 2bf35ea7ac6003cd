#pragma once

#include "midnet/channel.hpp"
#include "midnet/routing.hpp"

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace midnet::connectivity {

using channel::Position;

/// Weighted adjacency A_ij = mean rate R_ij. Throws on non-square input.
Eigen::MatrixXd adjacency(const Eigen::MatrixXd& mean_rates);
inline Eigen::MatrixXd adjacency(const channel::RateTable& rates) { return adjacency(rates.mean); }

/// L = diag(A 1) - A. Throws when A is asymmetric beyond 1e-9.
Eigen::MatrixXd laplacian(const Eigen::MatrixXd& adjacency);

struct SymmetricEigen {
    Eigen::VectorXd values;   ///< ascending
    Eigen::MatrixXd vectors;  ///< unit columns, matching values
};

/// Cyclic Jacobi rotations; intended for small dense matrices (n <= 32).
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& symmetric, double tol = 1e-15, int max_sweeps = 100);

double min_eigenvalue(const Eigen::MatrixXd& symmetric);

struct Fiedler {
    double lambda2 = 0.0;
    Eigen::VectorXd eigvec;
};

/// Second-smallest Laplacian eigenvalue and a unit eigenvector orthogonal to 1.
Fiedler fiedler_value(const Eigen::MatrixXd& laplacian);

/// L x (L-1) orthonormal basis of the complement of the all-ones vector
/// (normalized Helmert contrasts).
Eigen::MatrixXd complement_basis(int dim);

/// Trust-region Fiedler maximization over network-agent coordinates.
///
/// The linearized adjacency is affine in the stacked mobile coordinates x:
/// vec(A_hat) = B x + d, with task-agent coordinates folded into d. Only
/// active agents take part; `agents` lists them in program order.
struct ConnectivityProgram {
    int dim = 2;
    std::vector<int> agents;     ///< original agent index of each program row
    std::vector<bool> fixed;     ///< per program row
    std::vector<int> mobile;     ///< program rows whose coordinates are variables
    std::vector<Position> anchor;  ///< per program row, the linearization point
    double trust_region = 2.0;
    Eigen::MatrixXd B;  ///< (n*n) x (dim * mobile.size()), row n = i*L + j
    Eigen::VectorXd d;
    Eigen::MatrixXd P;

    int size() const { return static_cast<int>(agents.size()); }
    int num_vars() const { return dim * static_cast<int>(mobile.size()); }
    Eigen::VectorXd anchor_vector() const;
    Eigen::MatrixXd adjacency_at(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd laplacian_at(const Eigen::VectorXd& x) const;
    /// lambda_min(P^T L_hat(x) P)
    double gamma_at(const Eigen::VectorXd& x) const;
    /// P^T dL_hat/dx_v P for each variable v.
    std::vector<Eigen::MatrixXd> projected_coefficients() const;
};

/// `linearized` and `anchors` are indexed like team; inactive agents are
/// dropped and task agents are held fixed. Throws if no mobile agent remains.
ConnectivityProgram build_connectivity_program(const routing::TeamConfig& team,
                                               const channel::LinearizedRates& linearized,
                                               std::span<const Position> anchors, double trust_region);

struct Waypoint {
    int agent = 0;
    Position pos;
};

struct ConnectivityResult {
    std::vector<Waypoint> waypoints;  ///< one per mobile agent
    double gamma = 0.0;
    bool exact = true;  ///< false when the solver ran out of budget
};

enum class Method { Barrier, Supergradient };

struct ConnectivityOptions {
    double tol = 1e-8;
    Method method = Method::Barrier;
    int budget = 20000;  ///< supergradient iterations
    int max_newton = 800;
};

ConnectivityResult solve_positions(const ConnectivityProgram& program, const ConnectivityOptions& options = {});

struct RepositionOptions {
    double trust_region = 2.0;
    /// Minimum ratio of exact to predicted Fiedler gain for accepting a step.
    double accept_ratio = 0.1;
    int max_shrinks = 6;
    ConnectivityOptions solver;
};

struct RepositionResult {
    ConnectivityResult result;
    double lambda2_before = 0.0;  ///< exact Fiedler value at the current positions
    double lambda2_after = 0.0;   ///< exact Fiedler value at the waypoints
    double radius = 0.0;          ///< trust region of the accepted step, 0 if none
    bool moved = false;
};

/// One connectivity planning step: linearize at the current positions, solve,
/// and check the step against the exact channel model. Rejected steps are
/// retried with half the trust region; if every retry fails the waypoints
/// equal the current positions.
RepositionResult reposition(const channel::ChannelParams& channel, const routing::TeamConfig& team,
                            std::span<const Position> positions, const RepositionOptions& options = {});

/// Exact Fiedler value of the active agents' mean-rate graph.
double exact_fiedler(const channel::ChannelParams& channel, const routing::TeamConfig& team,
                     std::span<const Position> positions);

} // namespace midnet::connectivity
