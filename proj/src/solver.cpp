#include "midnet/solver.hpp"

#include "midnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace midnet::solver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd project_halfspace(const Halfspace& h, const Eigen::VectorXd& y) {
    const double excess = h.normal.dot(y) - h.offset;
    if (excess <= 0.0) return y;
    return y - (excess / h.normal.squaredNorm()) * h.normal;
}

} // namespace

FeasibleSet FeasibleSet::box(Eigen::VectorXd lower, Eigen::VectorXd upper) {
    FeasibleSet set;
    set.lower = std::move(lower);
    set.upper = std::move(upper);
    return set;
}

double FeasibleSet::violation(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        worst = std::max({worst, lower[i] - x[i], x[i] - upper[i]});
    }
    for (const auto& h : halfspaces) worst = std::max(worst, h.normal.dot(x) - h.offset);
    return worst;
}

Eigen::VectorXd FeasibleSet::clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

void FeasibleSet::validate() const {
    if (lower.size() != upper.size()) throw InvalidArgument("box bounds have different lengths");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(lower[i] <= upper[i])) throw InvalidArgument("empty box: lower bound exceeds upper bound");
    }
    for (const auto& h : halfspaces) {
        if (h.normal.size() != lower.size()) throw InvalidArgument("halfspace normal has wrong dimension");
        if (h.normal.squaredNorm() == 0.0) throw InvalidArgument("halfspace normal is zero");
    }
}

Eigen::VectorXd project(const FeasibleSet& set, const Eigen::VectorXd& point, double tol, int max_sweeps) {
    set.validate();
    if (point.size() != set.dim()) throw InvalidArgument("point dimension does not match feasible set");
    if (set.violation(point) <= 0.0) return point;
    if (set.halfspaces.empty()) return set.clamp(point);

    const bool unbounded_box = (set.lower.array() == -kInf).all() && (set.upper.array() == kInf).all();
    if (unbounded_box && set.halfspaces.size() == 1) return project_halfspace(set.halfspaces.front(), point);

    // Dykstra: one correction vector per set, box first.
    const std::size_t sets = set.halfspaces.size() + 1;
    std::vector<Eigen::VectorXd> corrections(sets, Eigen::VectorXd::Zero(point.size()));
    Eigen::VectorXd x = point;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const Eigen::VectorXd start = x;
        for (std::size_t s = 0; s < sets; ++s) {
            const Eigen::VectorXd y = x + corrections[s];
            x = (s == 0) ? set.clamp(y) : project_halfspace(set.halfspaces[s - 1], y);
            corrections[s] = y - x;
        }
        if ((x - start).norm() <= tol && set.violation(x) <= tol) return x;
    }
    if (set.violation(x) > tol) throw Error("projection did not reach a feasible point; the set may be empty");
    return x;
}

std::pair<Eigen::VectorXd, SolveReport> maximize_concave(const ConcaveOracle& objective, const FeasibleSet& set,
                                                         const Eigen::VectorXd& x0,
                                                         const SupergradientOptions& options) {
    set.validate();
    if (x0.size() != set.dim()) throw InvalidArgument("starting point dimension does not match feasible set");

    double eta0 = options.initial_step;
    if (eta0 <= 0.0) {
        const Eigen::VectorXd span = set.upper - set.lower;
        const double diameter = span.allFinite() ? span.norm() : 1.0;
        eta0 = 0.25 * (diameter > 0.0 ? diameter : 1.0);
    }

    SolveReport report;
    Eigen::VectorXd x = project(set, x0);
    Eigen::VectorXd grad(x.size());
    double value = objective(x, grad);
    Eigen::VectorXd best = x;
    report.best_objective = value;
    double grad_scale = grad.norm();

    Eigen::VectorXd tail_sum = Eigen::VectorXd::Zero(x.size());
    int tail_count = 0;
    const int tail_start = options.budget / 2;

    int t = 0;
    for (t = 1; t <= options.budget; ++t) {
        const double gnorm = grad.norm();
        if (gnorm == 0.0) {
            report.converged = true;
            break;
        }
        grad_scale = std::max(grad_scale, gnorm);
        const double step = eta0 / std::sqrt(static_cast<double>(t));
        report.final_step = step;
        const Eigen::VectorXd next = project(set, x + (step / grad_scale) * grad);
        const double moved = (next - x).norm();
        x = next;
        value = objective(x, grad);
        if (value > report.best_objective) {
            report.best_objective = value;
            best = x;
        }
        if (options.record_history) report.best_history.push_back(report.best_objective);
        if (t > tail_start) {
            tail_sum += x;
            ++tail_count;
        }
        if (moved <= options.tol) {
            report.converged = true;
            break;
        }
    }
    report.iterations = std::min(t, options.budget);

    if (tail_count > 0) {
        const Eigen::VectorXd average = project(set, tail_sum / tail_count);
        Eigen::VectorXd scratch(x.size());
        const double avg_value = objective(average, scratch);
        if (avg_value > report.best_objective) {
            report.best_objective = avg_value;
            best = average;
            if (options.record_history && !report.best_history.empty()) report.best_history.back() = avg_value;
        }
    }
    report.feasibility_residual = set.violation(best);
    return {best, report};
}

namespace {

struct BarrierEval {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

double barrier_degree(const ConicProgram& p) {
    double degree = static_cast<double>(p.b.size()) + 2.0 * static_cast<double>(p.cones.size());
    for (Eigen::Index i = 0; i < p.lower.size(); ++i) {
        if (std::isfinite(p.lower[i])) degree += 1.0;
        if (std::isfinite(p.upper[i])) degree += 1.0;
    }
    for (const auto& lmi : p.lmis) degree += static_cast<double>(lmi.base.rows());
    return degree;
}

Eigen::MatrixXd lmi_matrix(const LmiConstraint& lmi, const Eigen::VectorXd& z) {
    Eigen::MatrixXd s = lmi.base;
    for (std::size_t i = 0; i < lmi.coeffs.size(); ++i) {
        if (lmi.coeffs[i].size() != 0) s += z[static_cast<Eigen::Index>(i)] * lmi.coeffs[i];
    }
    return s;
}

// Barrier value only; +inf outside the interior.
double barrier_value(const ConicProgram& p, const Eigen::VectorXd& z) {
    double value = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (std::isfinite(p.lower[i])) {
            const double r = z[i] - p.lower[i];
            if (!(r > 0.0)) return kInf;
            value -= std::log(r);
        }
        if (std::isfinite(p.upper[i])) {
            const double r = p.upper[i] - z[i];
            if (!(r > 0.0)) return kInf;
            value -= std::log(r);
        }
    }
    if (p.b.size() > 0) {
        const Eigen::VectorXd r = p.b - p.A * z;
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            if (!(r[i] > 0.0)) return kInf;
            value -= std::log(r[i]);
        }
    }
    for (const auto& c : p.cones) {
        const double u = c.a.dot(z) + c.b;
        const Eigen::VectorXd w = c.G * z + c.h;
        const double gap = u * u - w.squaredNorm();
        if (!(u > 0.0) || !(gap > 0.0)) return kInf;
        value -= std::log(gap);
    }
    for (const auto& lmi : p.lmis) {
        Eigen::LLT<Eigen::MatrixXd> llt(lmi_matrix(lmi, z));
        if (llt.info() != Eigen::Success) return kInf;
        const Eigen::MatrixXd l = llt.matrixL();
        for (Eigen::Index i = 0; i < l.rows(); ++i) {
            if (!(l(i, i) > 0.0)) return kInf;
            value -= 2.0 * std::log(l(i, i));
        }
    }
    return value;
}

BarrierEval barrier_derivatives(const ConicProgram& p, const Eigen::VectorXd& z) {
    const Eigen::Index n = z.size();
    BarrierEval e;
    e.value = barrier_value(p, z);
    e.grad = Eigen::VectorXd::Zero(n);
    e.hess = Eigen::MatrixXd::Zero(n, n);

    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::isfinite(p.lower[i])) {
            const double r = z[i] - p.lower[i];
            e.grad[i] -= 1.0 / r;
            e.hess(i, i) += 1.0 / (r * r);
        }
        if (std::isfinite(p.upper[i])) {
            const double r = p.upper[i] - z[i];
            e.grad[i] += 1.0 / r;
            e.hess(i, i) += 1.0 / (r * r);
        }
    }
    if (p.b.size() > 0) {
        const Eigen::VectorXd inv = (p.b - p.A * z).cwiseInverse();
        e.grad += p.A.transpose() * inv;
        e.hess += p.A.transpose() * inv.cwiseAbs2().asDiagonal() * p.A;
    }
    for (const auto& c : p.cones) {
        const double u = c.a.dot(z) + c.b;
        const Eigen::VectorXd w = c.G * z + c.h;
        const double gap = u * u - w.squaredNorm();
        // phi = -log(u^2 - |w|^2)
        const Eigen::VectorXd dgap = 2.0 * u * c.a - 2.0 * (c.G.transpose() * w);
        e.grad -= dgap / gap;
        const Eigen::SparseMatrix<double> gtg = Eigen::SparseMatrix<double>(c.G.transpose()) * c.G;
        e.hess += (-2.0 / gap) * c.a * c.a.transpose();
        e.hess += (2.0 / gap) * Eigen::MatrixXd(gtg);
        e.hess += (dgap * dgap.transpose()) / (gap * gap);
    }
    for (const auto& lmi : p.lmis) {
        const Eigen::MatrixXd s = lmi_matrix(lmi, z);
        Eigen::LLT<Eigen::MatrixXd> llt(s);
        std::vector<Eigen::Index> used;
        std::vector<Eigen::MatrixXd> w;
        for (std::size_t i = 0; i < lmi.coeffs.size(); ++i) {
            if (lmi.coeffs[i].size() == 0) continue;
            used.push_back(static_cast<Eigen::Index>(i));
            w.push_back(llt.solve(lmi.coeffs[i]));
        }
        for (std::size_t a = 0; a < used.size(); ++a) {
            e.grad[used[a]] -= w[a].trace();
            for (std::size_t b = a; b < used.size(); ++b) {
                const double h = (w[a].array() * w[b].transpose().array()).sum();
                e.hess(used[a], used[b]) += h;
                if (a != b) e.hess(used[b], used[a]) += h;
            }
        }
    }
    return e;
}

} // namespace

bool ConicProgram::strictly_feasible(const Eigen::VectorXd& z) const {
    return z.size() == num_vars() && std::isfinite(barrier_value(*this, z));
}

BarrierResult minimize_barrier(const ConicProgram& program, const Eigen::VectorXd& z0, const BarrierOptions& options) {
    const auto n = program.num_vars();
    if (z0.size() != n || program.lower.size() != n || program.upper.size() != n) {
        throw InvalidArgument("conic program dimensions do not match");
    }
    if (program.A.rows() != program.b.size() || (program.b.size() > 0 && program.A.cols() != n)) {
        throw InvalidArgument("linear constraint dimensions do not match");
    }
    if (!program.strictly_feasible(z0)) throw InvalidArgument("barrier start point is not strictly feasible");

    const double degree = barrier_degree(program);
    BarrierResult result;
    result.z = z0;
    double t = options.t0;

    auto merit = [&](const Eigen::VectorXd& z) {
        const double phi = barrier_value(program, z);
        return std::isfinite(phi) ? t * program.cost.dot(z) + phi : kInf;
    };

    while (true) {
        // Centering.
        bool centered = false;
        while (result.newton_iterations < options.max_newton) {
            const BarrierEval e = barrier_derivatives(program, result.z);
            const Eigen::VectorXd g = t * program.cost + e.grad;
            Eigen::MatrixXd h = e.hess;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
            Eigen::VectorXd dz = ldlt.solve(-g);
            double decrement = -g.dot(dz);
            if (ldlt.info() != Eigen::Success || !dz.allFinite() || !(decrement >= 0.0)) {
                h.diagonal().array() += 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
                dz = h.ldlt().solve(-g);
                decrement = -g.dot(dz);
            }
            ++result.newton_iterations;
            if (!(decrement >= 0.0) || decrement / 2.0 <= 1e-10) {
                centered = true;
                break;
            }
            const double f0 = t * program.cost.dot(result.z) + e.value;
            double step = 1.0;
            double f1 = merit(result.z + step * dz);
            int halvings = 0;
            while ((!std::isfinite(f1) || f1 > f0 - 0.25 * step * decrement) && halvings < 60) {
                step *= 0.5;
                f1 = merit(result.z + step * dz);
                ++halvings;
            }
            if (!std::isfinite(f1) || f1 >= f0) {
                centered = true;  // no further progress possible at this precision
                break;
            }
            result.z += step * dz;
        }
        ++result.outer_iterations;
        result.gap_bound = degree / t;
        if (!centered) break;
        if (result.gap_bound <= options.tol) {
            result.converged = true;
            break;
        }
        t *= options.mu;
    }
    result.objective = program.cost.dot(result.z);
    return result;
}

} // namespace midnet::solver
