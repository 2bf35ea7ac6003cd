#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <utility>
#include <vector>

namespace midnet::solver {

/// { x : normal . x <= offset }
struct Halfspace {
    Eigen::VectorXd normal;
    double offset = 0.0;
};

/// Intersection of a box and finitely many halfspaces.
struct FeasibleSet {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<Halfspace> halfspaces;

    static FeasibleSet box(Eigen::VectorXd lower, Eigen::VectorXd upper);

    int dim() const { return static_cast<int>(lower.size()); }
    /// Largest violation over all box bounds and halfspaces (0 when inside).
    double violation(const Eigen::VectorXd& x) const;
    Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
    void validate() const;
};

/// Euclidean projection onto the set. Box-only sets are clamped directly; a
/// single halfspace over an unbounded box uses the closed form; everything
/// else runs Dykstra's alternating projection until successive sweeps move
/// less than tol and the point is feasible within tol.
Eigen::VectorXd project(const FeasibleSet& set, const Eigen::VectorXd& point, double tol = 1e-10,
                        int max_sweeps = 100000);

struct SolveReport {
    int iterations = 0;
    double best_objective = 0.0;
    double final_step = 0.0;
    double feasibility_residual = 0.0;
    bool converged = false;
    /// Best objective after each iteration, filled when requested.
    std::vector<double> best_history;
};

/// Returns f(x) and writes a supergradient of f at x into the second argument.
using ConcaveOracle = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct SupergradientOptions {
    int budget = 20000;
    double tol = 1e-7;
    /// Initial step length; <= 0 picks a fraction of the box diameter.
    double initial_step = 0.0;
    bool record_history = false;
};

/// Projected supergradient ascent with diminishing normalized steps
/// eta_t = eta_0 / sqrt(t). Tracks the best iterate and compares it against
/// the running average at the end; the better of the two is returned.
std::pair<Eigen::VectorXd, SolveReport> maximize_concave(const ConcaveOracle& objective, const FeasibleSet& set,
                                                         const Eigen::VectorXd& x0,
                                                         const SupergradientOptions& options = {});

/// ||G z + h|| <= a . z + b
struct SocConstraint {
    Eigen::SparseMatrix<double, Eigen::RowMajor> G;
    Eigen::VectorXd h;
    Eigen::VectorXd a;
    double b = 0.0;
};

/// base + sum_i z_i * coeffs[i] is positive semidefinite. Empty coefficient
/// matrices (size 0) mark variables absent from the constraint.
struct LmiConstraint {
    Eigen::MatrixXd base;
    std::vector<Eigen::MatrixXd> coeffs;
};

/// minimize cost . z subject to lower <= z <= upper, A z <= b, second-order
/// cones and linear matrix inequalities. Infinite bounds are ignored.
struct ConicProgram {
    Eigen::VectorXd cost;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    std::vector<SocConstraint> cones;
    std::vector<LmiConstraint> lmis;

    int num_vars() const { return static_cast<int>(cost.size()); }
    /// True when z lies in the interior of every constraint.
    bool strictly_feasible(const Eigen::VectorXd& z) const;
};

struct BarrierOptions {
    /// Stop once the barrier duality-gap bound (barrier degree / t) is below tol.
    double tol = 1e-8;
    double t0 = 1.0;
    double mu = 10.0;
    int max_newton = 1500;
};

struct BarrierResult {
    Eigen::VectorXd z;
    double objective = 0.0;
    double gap_bound = 0.0;
    int newton_iterations = 0;
    int outer_iterations = 0;
    bool converged = false;
};

/// Primal log-barrier method with damped Newton centering. z0 must be
/// strictly feasible. The returned point is always strictly feasible; when the
/// Newton budget runs out, converged is false and z is the last centered point.
BarrierResult minimize_barrier(const ConicProgram& program, const Eigen::VectorXd& z0,
                               const BarrierOptions& options = {});

} // namespace midnet::solver
