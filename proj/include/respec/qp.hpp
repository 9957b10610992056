#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "respec/world.hpp"

namespace respec {

/// minimize 1/2 x'Gx + a'x  subject to  C'x >= b  (one constraint per column of C).
/// G must be symmetric positive definite.
struct QpProblem {
    Eigen::MatrixXd G;
    Eigen::VectorXd a;
    Eigen::MatrixXd C;
    Eigen::VectorXd b;
};

struct QpResult {
    Eigen::VectorXd x;
    /// One multiplier per constraint; zero for inactive ones.
    Eigen::VectorXd lambda;
    std::vector<int> active;
    int iterations = 0;
    bool feasible = true;
    /// Max of stationarity, primal/dual infeasibility and complementarity violations.
    double kkt_residual = 0.0;
};

/// Goldfarb-Idnani dual active-set method. Returns feasible = false when the
/// constraints are inconsistent; throws SolverNonconvergence past max_iterations.
QpResult solve_qp(const QpProblem& problem, int max_iterations = 500);

double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda);

/// grad . u >= rhs over the six control channels.
struct ControlRow {
    std::string label;
    ChannelVector grad{};
    double rhs = 0.0;
};

struct ControlQpResult {
    ChannelVector u{};
    /// Per-row slack used to restore feasibility (all zero when the rows were satisfiable).
    std::vector<double> slack;
    bool relaxed = false;
    double kkt_residual = 0.0;
    int iterations = 0;
};

/// Slack rows above this are reported as violated.
inline constexpr double kSlackTolerance = 1e-9;

/// min u'u subject to the rows and |u_i| <= cap_i. When the rows conflict,
/// first minimizes the squared slacks, then re-solves for u with every row
/// relaxed by its slack.
ControlQpResult solve_control_qp(const std::vector<ControlRow>& rows, const ControlBounds& bounds);

} // namespace respec
