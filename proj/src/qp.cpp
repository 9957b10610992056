#include "respec/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "respec/error.hpp"

namespace respec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ActiveSet {
    const Eigen::MatrixXd& Ginv;
    const Eigen::MatrixXd& C;
    std::vector<int> index;
    Eigen::MatrixXd H;      // reduced inverse Hessian
    Eigen::MatrixXd Nstar;  // generalized inverse of the active normals

    void refresh() {
        const auto n = Ginv.rows();
        if (index.empty()) {
            H = Ginv;
            Nstar.resize(0, n);
            return;
        }
        Eigen::MatrixXd N(n, static_cast<Eigen::Index>(index.size()));
        for (std::size_t j = 0; j < index.size(); ++j) N.col(static_cast<Eigen::Index>(j)) = C.col(index[j]);
        Eigen::MatrixXd GN = Ginv * N;
        Eigen::MatrixXd M = N.transpose() * GN;
        Nstar = M.ldlt().solve(GN.transpose());
        H = Ginv - GN * Nstar;
    }
};

} // namespace

double kkt_residual(const QpProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) {
    Eigen::VectorXd grad = p.G * x + p.a - p.C * lambda;
    double r = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index j = 0; j < p.C.cols(); ++j) {
        double s = p.C.col(j).dot(x) - p.b(j);
        r = std::max(r, -s);
        r = std::max(r, -lambda(j));
        r = std::max(r, std::abs(lambda(j) * s));
    }
    return r;
}

QpResult solve_qp(const QpProblem& p, int max_iterations) {
    const auto n = p.G.rows();
    const auto m = p.C.cols();
    Eigen::LLT<Eigen::MatrixXd> llt(p.G);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidConfig, "QP Hessian is not positive definite");
    const Eigen::MatrixXd Ginv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    const double ginv_norm = Ginv.norm();

    QpResult r;
    r.x = -Ginv * p.a;
    ActiveSet act{Ginv, p.C, {}, {}, {}};
    act.refresh();
    Eigen::VectorXd u(0);  // multipliers of the active set, in act.index order

    const double scale = p.b.size() ? 1.0 + p.b.cwiseAbs().maxCoeff() : 1.0;
    const double tol = 1e-11 * scale;

    for (;;) {
        // Step 1: pick the most violated constraint (normalized).
        int best = -1;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (std::find(act.index.begin(), act.index.end(), j) != act.index.end()) continue;
            double norm = p.C.col(j).norm();
            if (norm == 0.0) {
                if (p.b(j) > tol) {
                    r.feasible = false;
                    return r;
                }
                continue;
            }
            double s = (p.C.col(j).dot(r.x) - p.b(j)) / norm;
            if (s < -tol && s < worst) {
                worst = s;
                best = static_cast<int>(j);
            }
        }
        if (best < 0) break;

        const Eigen::VectorXd np = p.C.col(best);
        Eigen::VectorXd uplus(u.size() + 1);
        uplus << u, 0.0;

        for (;;) {
            if (++r.iterations > max_iterations)
                throw Error(ErrorCode::SolverNonconvergence, "QP exceeded " + std::to_string(max_iterations) + " iterations");
            // Step 2(a): primal and dual step directions.
            Eigen::VectorXd z = act.H * np;
            Eigen::VectorXd rr = act.index.empty() ? Eigen::VectorXd(0) : Eigen::VectorXd(act.Nstar * np);

            // Step 2(b): partial (dual) and full (primal) step lengths.
            double t1 = kInf;
            int drop = -1;
            for (Eigen::Index j = 0; j < rr.size(); ++j)
                if (rr(j) > 1e-14 && uplus(j) / rr(j) < t1) {
                    t1 = uplus(j) / rr(j);
                    drop = static_cast<int>(j);
                }
            double zn = z.dot(np);
            double t2 = kInf;
            // z vanishes when n+ is spanned by the active normals (always so with n active).
            bool z_zero = static_cast<Eigen::Index>(act.index.size()) >= n || zn <= 1e-12 * np.squaredNorm() * ginv_norm;
            if (!z_zero) t2 = -(np.dot(r.x) - p.b(best)) / zn;
            double t = std::min(t1, t2);

            // Step 2(c).
            if (t == kInf) {
                r.feasible = false;
                return r;
            }
            Eigen::VectorXd step(uplus.size());
            step << -rr, 1.0;
            if (!z_zero) r.x += t * z;
            uplus += t * step;
            if (t2 <= t1) {
                act.index.push_back(best);
                act.refresh();
                u = uplus;
                break;
            }
            // Drop the blocking constraint and retry the same p.
            act.index.erase(act.index.begin() + drop);
            Eigen::VectorXd reduced(uplus.size() - 1);
            for (Eigen::Index j = 0, k = 0; j < uplus.size(); ++j)
                if (j != drop) reduced(k++) = uplus(j);
            uplus = reduced;
            act.refresh();
        }
    }

    r.lambda = Eigen::VectorXd::Zero(m);
    for (std::size_t j = 0; j < act.index.size(); ++j) r.lambda(act.index[j]) = u(static_cast<Eigen::Index>(j));
    r.active = act.index;
    r.kkt_residual = kkt_residual(p, r.x, r.lambda);
    return r;
}

namespace {

/// Appends the box |x_i| <= cap_i for the first kChannels variables.
void add_box(Eigen::MatrixXd& C, Eigen::VectorXd& b, Eigen::Index col, const ControlBounds& bounds) {
    for (int i = 0; i < kChannels; ++i) {
        C(i, col) = 1.0;
        b(col++) = -bounds.caps[i];
        C(i, col) = -1.0;
        b(col++) = -bounds.caps[i];
    }
}

} // namespace

ControlQpResult solve_control_qp(const std::vector<ControlRow>& rows, const ControlBounds& bounds) {
    bounds.validate();
    const auto m = static_cast<Eigen::Index>(rows.size());
    ControlQpResult out;
    out.slack.assign(rows.size(), 0.0);

    auto build = [&](const std::vector<double>& relax) {
        QpProblem q;
        q.G = 2.0 * Eigen::MatrixXd::Identity(kChannels, kChannels);
        q.a = Eigen::VectorXd::Zero(kChannels);
        q.C = Eigen::MatrixXd::Zero(kChannels, m + 2 * kChannels);
        q.b = Eigen::VectorXd::Zero(m + 2 * kChannels);
        for (Eigen::Index j = 0; j < m; ++j) {
            for (int i = 0; i < kChannels; ++i) q.C(i, j) = rows[j].grad[i];
            q.b(j) = rows[j].rhs - relax[j];
        }
        add_box(q.C, q.b, m, bounds);
        return q;
    };

    QpProblem q = build(out.slack);
    QpResult r = solve_qp(q);
    if (!r.feasible) {
        // Phase 1: minimize squared slacks (with a tiny weight on u to keep the
        // Hessian definite) subject to grad.u + s >= rhs, s >= 0 and the box.
        constexpr double kEta = 1e-6;
        const Eigen::Index n = kChannels + m;
        QpProblem s;
        s.G = Eigen::MatrixXd::Identity(n, n) * 2.0;
        s.G.topLeftCorner(kChannels, kChannels) *= kEta;
        s.a = Eigen::VectorXd::Zero(n);
        s.C = Eigen::MatrixXd::Zero(n, 2 * m + 2 * kChannels);
        s.b = Eigen::VectorXd::Zero(2 * m + 2 * kChannels);
        for (Eigen::Index j = 0; j < m; ++j) {
            for (int i = 0; i < kChannels; ++i) s.C(i, j) = rows[j].grad[i];
            s.C(kChannels + j, j) = 1.0;
            s.b(j) = rows[j].rhs;
            s.C(kChannels + j, m + j) = 1.0;  // s_j >= 0
        }
        add_box(s.C, s.b, 2 * m, bounds);
        QpResult phase1 = solve_qp(s);
        if (!phase1.feasible) throw Error(ErrorCode::SolverNonconvergence, "slack problem reported infeasible");
        out.iterations += phase1.iterations;
        // Slack is measured from the phase-1 control, clamped into the box, so
        // that this control is feasible for the relaxed rows despite round-off.
        ChannelVector u1{};
        for (int i = 0; i < kChannels; ++i) u1[i] = std::clamp(phase1.x(i), -bounds.caps[i], bounds.caps[i]);
        std::vector<double> relax(rows.size());
        for (Eigen::Index j = 0; j < m; ++j) {
            double lhs = 0.0;
            for (int i = 0; i < kChannels; ++i) lhs += rows[j].grad[i] * u1[i];
            double sj = std::max(0.0, rows[j].rhs - lhs);
            relax[j] = sj + kSlackTolerance;
            out.slack[j] = sj > kSlackTolerance ? sj : 0.0;
        }
        out.relaxed = true;
        q = build(relax);
        r = solve_qp(q);
        if (!r.feasible) {
            // Degenerate vertex solutions can defeat the active-set test by
            // round-off; the phase-1 control is feasible by construction.
            r.x = Eigen::Map<const Eigen::VectorXd>(u1.data(), kChannels);
            r.lambda = Eigen::VectorXd::Zero(q.C.cols());
            r.kkt_residual = 0.0;
            r.feasible = true;
        }
    }
    out.iterations += r.iterations;
    for (int i = 0; i < kChannels; ++i) out.u[i] = std::clamp(r.x(i), -bounds.caps[i], bounds.caps[i]);
    out.kkt_residual = r.kkt_residual;
    return out;
}

} // namespace respec
