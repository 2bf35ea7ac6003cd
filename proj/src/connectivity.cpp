#include "midnet/connectivity.hpp"

#include "midnet/error.hpp"
#include "midnet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace midnet::connectivity {

Eigen::MatrixXd adjacency(const Eigen::MatrixXd& mean_rates) {
    if (mean_rates.rows() != mean_rates.cols()) throw InvalidArgument("rate matrix is not square");
    Eigen::MatrixXd a = mean_rates;
    a.diagonal().setZero();
    return a;
}

Eigen::MatrixXd laplacian(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw InvalidArgument("adjacency is not square");
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9) throw InvalidArgument("adjacency is not symmetric");
    Eigen::MatrixXd lap = -a;
    lap.diagonal() = a.rowwise().sum() - a.diagonal();
    return lap;
}

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& symmetric, double tol, int max_sweeps) {
    const Eigen::Index n = symmetric.rows();
    if (symmetric.cols() != n) throw InvalidArgument("eigen solve needs a square matrix");
    const double scale = std::max(symmetric.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, scale)) {
        throw InvalidArgument("eigen solve needs a symmetric matrix");
    }
    Eigen::MatrixXd a = 0.5 * (symmetric + symmetric.transpose());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= tol * scale) break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) < a(y, y); });
    SymmetricEigen out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto src = order[static_cast<std::size_t>(k)];
        out.values[k] = a(src, src);
        out.vectors.col(k) = v.col(src).normalized();
    }
    return out;
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) { return jacobi_eigen(symmetric).values[0]; }

Fiedler fiedler_value(const Eigen::MatrixXd& lap) {
    if (lap.rows() < 2) throw InvalidArgument("Fiedler value needs at least two nodes");
    if (lap.rows() != lap.cols() || !lap.allFinite() || (lap - lap.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + lap.cwiseAbs().maxCoeff())) {
        throw InvalidArgument("Laplacian must be square, finite and symmetric");
    }
    const Eigen::MatrixXd p = complement_basis(static_cast<int>(lap.rows()));
    // Restricting to the complement of 1 keeps the eigenvector orthogonal to 1
    // even when the null eigenvalue is repeated.
    const SymmetricEigen e = jacobi_eigen(p.transpose() * lap * p);
    return {e.values[0], (p * e.vectors.col(0)).normalized()};
}

Eigen::MatrixXd complement_basis(int dim) {
    if (dim < 2) throw InvalidArgument("complement basis needs dimension >= 2");
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(dim, dim - 1);
    for (int k = 1; k < dim; ++k) {
        const double norm = std::sqrt(static_cast<double>(k) * (k + 1));
        for (int i = 0; i < k; ++i) p(i, k - 1) = 1.0 / norm;
        p(k, k - 1) = -static_cast<double>(k) / norm;
    }
    return p;
}

Eigen::VectorXd ConnectivityProgram::anchor_vector() const {
    Eigen::VectorXd x(num_vars());
    for (std::size_t m = 0; m < mobile.size(); ++m) {
        x.segment(static_cast<Eigen::Index>(m) * dim, dim) = anchor[static_cast<std::size_t>(mobile[m])];
    }
    return x;
}

Eigen::MatrixXd ConnectivityProgram::adjacency_at(const Eigen::VectorXd& x) const {
    if (x.size() != num_vars()) throw InvalidArgument("connectivity variable has wrong length");
    const Eigen::VectorXd a = B * x + d;
    const int n = size();
    Eigen::MatrixXd adj(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) adj(i, j) = a[i * n + j];
    return adj;
}

Eigen::MatrixXd ConnectivityProgram::laplacian_at(const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd adj = adjacency_at(x);
    Eigen::MatrixXd lap = -adj;
    lap.diagonal() = adj.rowwise().sum() - adj.diagonal();
    return lap;
}

double ConnectivityProgram::gamma_at(const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd lap = laplacian_at(x);
    const Eigen::MatrixXd m = P.transpose() * (0.5 * (lap + lap.transpose())) * P;
    return min_eigenvalue(m);
}

std::vector<Eigen::MatrixXd> ConnectivityProgram::projected_coefficients() const {
    const int n = size();
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(num_vars()));
    for (int v = 0; v < num_vars(); ++v) {
        Eigen::MatrixXd adj(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) adj(i, j) = B(i * n + j, v);
        Eigen::MatrixXd lap = -adj;
        lap.diagonal() = adj.rowwise().sum() - adj.diagonal();
        lap = 0.5 * (lap + lap.transpose());
        out.push_back(P.transpose() * lap * P);
    }
    return out;
}

ConnectivityProgram build_connectivity_program(const routing::TeamConfig& team,
                                               const channel::LinearizedRates& linearized,
                                               std::span<const Position> anchors, double trust_region) {
    team.validate();
    if (!(trust_region > 0.0)) throw InvalidArgument("trust region must be positive");
    if (linearized.size() != team.size() || static_cast<int>(anchors.size()) != team.size()) {
        throw InvalidArgument("linearized rates and anchors must match the team size");
    }
    ConnectivityProgram prog;
    prog.dim = linearized.dim();
    prog.trust_region = trust_region;
    for (int i = 0; i < team.size(); ++i) {
        if (!team.is_active(i)) continue;
        const bool fixed = team.kinds[static_cast<std::size_t>(i)] == routing::AgentKind::Task;
        if (!fixed) prog.mobile.push_back(prog.size());
        prog.agents.push_back(i);
        prog.fixed.push_back(fixed);
        prog.anchor.push_back(anchors[static_cast<std::size_t>(i)]);
    }
    if (prog.mobile.empty()) throw InvalidArgument("connectivity program has no mobile agents");
    if (prog.size() < 2) throw InvalidArgument("connectivity program needs at least two active agents");

    const int n = prog.size();
    const int dim = prog.dim;
    std::vector<int> column(static_cast<std::size_t>(n), -1);
    for (std::size_t m = 0; m < prog.mobile.size(); ++m) column[static_cast<std::size_t>(prog.mobile[m])] = static_cast<int>(m) * dim;

    prog.B = Eigen::MatrixXd::Zero(n * n, prog.num_vars());
    prog.d = Eigen::VectorXd::Zero(n * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto& lin = linearized(prog.agents[static_cast<std::size_t>(i)], prog.agents[static_cast<std::size_t>(j)]);
            const int row = i * n + j;
            double offset = lin.value;
            if (const int ci = column[static_cast<std::size_t>(i)]; ci >= 0) {
                prog.B.block(row, ci, 1, dim) += lin.grad_i.transpose();
                offset -= lin.grad_i.dot(prog.anchor[static_cast<std::size_t>(i)]);
            }
            if (const int cj = column[static_cast<std::size_t>(j)]; cj >= 0) {
                prog.B.block(row, cj, 1, dim) += lin.grad_j.transpose();
                offset -= lin.grad_j.dot(prog.anchor[static_cast<std::size_t>(j)]);
            }
            prog.d[row] = offset;
        }
    }
    prog.P = complement_basis(n);
    return prog;
}

namespace {

ConnectivityResult make_result(const ConnectivityProgram& prog, Eigen::VectorXd x, bool exact) {
    const Eigen::VectorXd anchor = prog.anchor_vector();
    const double r = prog.trust_region;
    x = (x.array().max(anchor.array() - r).min(anchor.array() + r)).matrix();
    ConnectivityResult result;
    result.exact = exact;
    result.gamma = prog.gamma_at(x);
    for (std::size_t m = 0; m < prog.mobile.size(); ++m) {
        const int row = prog.mobile[m];
        result.waypoints.push_back(
            {prog.agents[static_cast<std::size_t>(row)], x.segment(static_cast<Eigen::Index>(m) * prog.dim, prog.dim)});
    }
    return result;
}

ConnectivityResult solve_barrier(const ConnectivityProgram& prog, const ConnectivityOptions& options) {
    const int nx = prog.num_vars();
    const Eigen::VectorXd anchor = prog.anchor_vector();
    const Eigen::MatrixXd lap0 = prog.laplacian_at(anchor);
    const Eigen::MatrixXd base = prog.P.transpose() * (0.5 * (lap0 + lap0.transpose())) * prog.P;
    const double gamma0 = min_eigenvalue(base);

    // Variables: displacement from the anchor (nx entries) and gamma.
    solver::ConicProgram conic;
    conic.cost = Eigen::VectorXd::Zero(nx + 1);
    conic.cost[nx] = -1.0;
    conic.lower = Eigen::VectorXd::Constant(nx + 1, -prog.trust_region);
    conic.upper = Eigen::VectorXd::Constant(nx + 1, prog.trust_region);
    conic.lower[nx] = -std::numeric_limits<double>::infinity();
    conic.upper[nx] = std::numeric_limits<double>::infinity();
    conic.A.resize(0, nx + 1);
    conic.b.resize(0);
    solver::LmiConstraint lmi;
    lmi.base = base;
    lmi.coeffs = prog.projected_coefficients();
    lmi.coeffs.push_back(-Eigen::MatrixXd::Identity(base.rows(), base.cols()));
    conic.lmis.push_back(std::move(lmi));

    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(nx + 1);
    z0[nx] = gamma0 - 1.0;
    solver::BarrierOptions bopts;
    bopts.tol = options.tol;
    bopts.max_newton = options.max_newton;
    const auto res = solver::minimize_barrier(conic, z0, bopts);
    return make_result(prog, anchor + res.z.head(nx), res.converged);
}

ConnectivityResult solve_supergradient(const ConnectivityProgram& prog, const ConnectivityOptions& options) {
    const Eigen::VectorXd anchor = prog.anchor_vector();
    const auto coeffs = prog.projected_coefficients();
    const Eigen::MatrixXd lap0 = prog.laplacian_at(anchor);
    const Eigen::MatrixXd base = prog.P.transpose() * (0.5 * (lap0 + lap0.transpose())) * prog.P;

    auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        Eigen::MatrixXd m = base;
        const Eigen::VectorXd delta = x - anchor;
        for (std::size_t v = 0; v < coeffs.size(); ++v) m += delta[static_cast<Eigen::Index>(v)] * coeffs[v];
        const SymmetricEigen e = jacobi_eigen(m);
        const Eigen::VectorXd u = e.vectors.col(0);
        grad.resize(x.size());
        for (std::size_t v = 0; v < coeffs.size(); ++v) grad[static_cast<Eigen::Index>(v)] = u.dot(coeffs[v] * u);
        return e.values[0];
    };
    const auto set = solver::FeasibleSet::box((anchor.array() - prog.trust_region).matrix(),
                                              (anchor.array() + prog.trust_region).matrix());
    solver::SupergradientOptions sopts;
    sopts.budget = options.budget;
    sopts.tol = options.tol;
    auto [x, report] = solver::maximize_concave(objective, set, anchor, sopts);
    // Hitting the budget is the normal exit for nonsmooth objectives; the best
    // iterate is still reported but marked inexact.
    return make_result(prog, x, report.converged);
}

} // namespace

ConnectivityResult solve_positions(const ConnectivityProgram& program, const ConnectivityOptions& options) {
    if (program.mobile.empty()) throw InvalidArgument("connectivity program has no mobile agents");
    return options.method == Method::Barrier ? solve_barrier(program, options) : solve_supergradient(program, options);
}

double exact_fiedler(const channel::ChannelParams& channel, const routing::TeamConfig& team,
                     std::span<const Position> positions) {
    std::vector<Position> active;
    for (int i = 0; i < team.size(); ++i) {
        if (team.is_active(i)) active.push_back(positions[static_cast<std::size_t>(i)]);
    }
    if (active.size() < 2) return 0.0;
    return fiedler_value(laplacian(adjacency(channel::estimate_rates(channel, active)))).lambda2;
}

RepositionResult reposition(const channel::ChannelParams& channel, const routing::TeamConfig& team,
                            std::span<const Position> positions, const RepositionOptions& options) {
    if (static_cast<int>(positions.size()) != team.size()) throw InvalidArgument("positions must match the team size");
    RepositionResult out;
    out.lambda2_before = exact_fiedler(channel, team, positions);
    out.lambda2_after = out.lambda2_before;

    bool any_mobile = false;
    for (int i = 0; i < team.size(); ++i) {
        any_mobile |= team.is_active(i) && team.kinds[static_cast<std::size_t>(i)] == routing::AgentKind::Network;
    }
    if (!any_mobile) return out;

    const auto linearized = channel::linearize(channel, positions);
    double radius = options.trust_region;
    for (int attempt = 0; attempt <= options.max_shrinks; ++attempt, radius *= 0.5) {
        const auto program = build_connectivity_program(team, linearized, positions, radius);
        ConnectivityResult candidate = solve_positions(program, options.solver);
        if (attempt == 0) {
            // Default answer: stay in place.
            out.result = candidate;
            for (auto& w : out.result.waypoints) w.pos = positions[static_cast<std::size_t>(w.agent)];
            out.result.gamma = out.lambda2_before;
        }
        const double predicted = candidate.gamma - out.lambda2_before;
        if (!(predicted > 1e-12 * std::max(1.0, std::abs(out.lambda2_before)))) break;

        std::vector<Position> moved(positions.begin(), positions.end());
        for (const auto& w : candidate.waypoints) moved[static_cast<std::size_t>(w.agent)] = w.pos;
        const double actual = exact_fiedler(channel, team, moved) - out.lambda2_before;
        if (actual >= options.accept_ratio * predicted) {
            out.result = std::move(candidate);
            out.lambda2_after = out.lambda2_before + actual;
            out.radius = radius;
            out.moved = true;
            break;
        }
    }
    return out;
}

} // namespace midnet::connectivity
