#pragma once

// Maximum-entropy dynamic programming over a product MDP.
//
// Tables are dense row-major matrices with one row per product state and one column per
// action, so that the flat index z * num_actions + a matches the row order of the sparse
// transition matrix (one row per (z, a), one column per successor z').

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cmath>
#include <vector>

#include "atig/error.hpp"

namespace atig {

template <typename Scalar>
using QMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using TransitionMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct SolverOptions {
  double gamma = 0.95;
  double tolerance = 1e-8;  ///< sup-norm residual of one sweep
  int max_sweeps = 10000;
};

template <typename Scalar>
struct QTable {
  QMatrix<Scalar> q;
  double residual = 0.0;
  int sweeps = 0;
};

/// d Q / d theta, one row per (z, a).
template <typename Scalar>
struct GradTable {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dq;
  double residual = 0.0;
  int sweeps = 0;
};

/// Row-wise log-sum-exp, shifted by the row maximum.
template <typename Derived>
Vector<typename Derived::Scalar> log_sum_exp_rows(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Vector<Scalar> mx = m.rowwise().maxCoeff();
  return mx + (m.colwise() - mx).array().exp().rowwise().sum().log().matrix();
}

namespace detail {

template <typename Scalar>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> cast_transitions(const TransitionMatrix& p) {
  return p.template cast<Scalar>();
}

inline void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("discount must lie in (0,1)");
}

}  // namespace detail

/// Fixed point of Q = R + gamma * P * logsumexp(Q). Throws ConvergenceError when the sweep
/// cap is reached with the residual above tolerance.
template <typename Scalar>
QTable<Scalar> soft_value_iteration(const TransitionMatrix& transitions,
                                    const QMatrix<Scalar>& reward, const SolverOptions& opts,
                                    const QMatrix<Scalar>* warm_start = nullptr) {
  detail::check_gamma(opts.gamma);
  const Eigen::Index nz = reward.rows(), na = reward.cols();
  if (transitions.rows() != nz * na || transitions.cols() != nz)
    throw InputError("reward table does not match the transition matrix");
  const auto p = detail::cast_transitions<Scalar>(transitions);
  const Scalar gamma = static_cast<Scalar>(opts.gamma);

  QTable<Scalar> out;
  out.q = warm_start && warm_start->rows() == nz && warm_start->cols() == na
              ? *warm_start
              : QMatrix<Scalar>::Zero(nz, na);
  Vector<Scalar> next_flat(nz * na);
  QMatrix<Scalar> next(nz, na);
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    next_flat.noalias() = p * log_sum_exp_rows(out.q);
    next = reward + gamma * Eigen::Map<const QMatrix<Scalar>>(next_flat.data(), nz, na);
    out.residual = static_cast<double>((next - out.q).cwiseAbs().maxCoeff());
    out.q.swap(next);
    out.sweeps = sweep;
    if (out.residual <= opts.tolerance) return out;
  }
  throw ConvergenceError("soft value iteration did not converge", out.residual);
}

/// pi(a|z) = exp Q(z,a) / sum_a' exp Q(z,a'), computed stably.
template <typename Derived>
QMatrix<typename Derived::Scalar> soft_policy(const Eigen::MatrixBase<Derived>& q) {
  using Scalar = typename Derived::Scalar;
  QMatrix<Scalar> pi = (q.colwise() - q.rowwise().maxCoeff()).array().exp().matrix();
  pi.array().colwise() /= pi.rowwise().sum().array();
  return pi;
}

/// log pi(a|z), computed as Q - logsumexp(Q).
template <typename Derived>
QMatrix<typename Derived::Scalar> log_soft_policy(const Eigen::MatrixBase<Derived>& q) {
  return q.colwise() - log_sum_exp_rows(q);
}

/// (Pi G)(z) = sum_a pi(a|z) G(z,a) for a (z,a)-row matrix G.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> policy_average(
    const QMatrix<Scalar>& pi, const Eigen::MatrixBase<Derived>& g) {
  const Eigen::Index nz = pi.rows(), na = pi.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(nz, g.cols());
  for (Eigen::Index z = 0; z < nz; ++z) {
    for (Eigen::Index a = 0; a < na; ++a) out.row(z) += pi(z, a) * g.row(z * na + a);
  }
  return out;
}

/// Fixed point of dQ = dR + gamma * P * (Pi dQ), where `reward_jacobian` holds dR/dtheta
/// with one row per (z, a).
template <typename Scalar>
GradTable<Scalar> grad_value_iteration(
    const TransitionMatrix& transitions, const QMatrix<Scalar>& pi,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& reward_jacobian,
    const SolverOptions& opts) {
  detail::check_gamma(opts.gamma);
  if (reward_jacobian.rows() != pi.rows() * pi.cols())
    throw InputError("reward jacobian does not match the policy table");
  const auto p = detail::cast_transitions<Scalar>(transitions);
  const Scalar gamma = static_cast<Scalar>(opts.gamma);

  GradTable<Scalar> out;
  out.dq = reward_jacobian;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> next;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    next = reward_jacobian + gamma * (p * policy_average(pi, out.dq));
    out.residual = static_cast<double>((next - out.dq).cwiseAbs().maxCoeff());
    out.dq.swap(next);
    out.sweeps = sweep;
    if (out.residual <= opts.tolerance) return out;
  }
  throw ConvergenceError("gradient value iteration did not converge", out.residual);
}

/// d pi(a|z) / d theta = w(z,a) - pi(a|z) sum_a' w(z,a'), with w(z,a) = pi(a|z) dQ(z,a).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> policy_grad(const QMatrix<Scalar>& pi,
                                                                  const GradTable<Scalar>& g) {
  const Eigen::Index nz = pi.rows(), na = pi.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(g.dq.rows(), g.dq.cols());
  const auto w_sum = policy_average(pi, g.dq);
  for (Eigen::Index z = 0; z < nz; ++z) {
    for (Eigen::Index a = 0; a < na; ++a) {
      out.row(z * na + a) = pi(z, a) * (g.dq.row(z * na + a) - w_sum.row(z));
    }
  }
  return out;
}

/// Solves mu = c + gamma * Pi^T P^T mu for the (z, a)-indexed weights mu. For a reward
/// jacobian J, mu^T J equals c^T dQ where dQ is the fixed point of grad_value_iteration, so
/// the log-likelihood gradient never needs the dense |Z||A| x d table.
template <typename Scalar>
QMatrix<Scalar> adjoint_visitation(const TransitionMatrix& transitions, const QMatrix<Scalar>& pi,
                                   const QMatrix<Scalar>& c, const SolverOptions& opts,
                                   const QMatrix<Scalar>* warm_start = nullptr,
                                   double* residual_out = nullptr) {
  detail::check_gamma(opts.gamma);
  const Eigen::Index nz = pi.rows(), na = pi.cols();
  const auto pt = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>(
      detail::cast_transitions<Scalar>(transitions).transpose());
  const Scalar gamma = static_cast<Scalar>(opts.gamma);
  const double scale = 1.0 + static_cast<double>(c.cwiseAbs().maxCoeff());

  QMatrix<Scalar> mu = warm_start && warm_start->rows() == nz ? *warm_start : c;
  Vector<Scalar> inflow(nz);
  QMatrix<Scalar> next(nz, na);
  double residual = 0.0;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    inflow.noalias() = pt * Eigen::Map<const Vector<Scalar>>(mu.data(), nz * na);
    next = c + gamma * (pi.array().colwise() * inflow.array()).matrix();
    residual = static_cast<double>((next - mu).cwiseAbs().maxCoeff());
    mu.swap(next);
    if (residual <= opts.tolerance * scale) {
      if (residual_out) *residual_out = residual;
      return mu;
    }
  }
  throw ConvergenceError("adjoint visitation did not converge", residual);
}

/// Undiscounted soft backup on an acyclic MDP: V = 0 at terminal states, otherwise
/// V(z) = logsumexp_a Q(z,a) with Q(z,a) = R(z,a) + sum_z' P(z'|z,a) V(z'). Throws
/// InputError if a cycle is reachable among non-terminal states.
template <typename Scalar>
QMatrix<Scalar> soft_backup_acyclic(const TransitionMatrix& transitions,
                                    const QMatrix<Scalar>& reward,
                                    const std::vector<bool>& terminal) {
  const Eigen::Index nz = reward.rows(), na = reward.cols();
  QMatrix<Scalar> q = QMatrix<Scalar>::Zero(nz, na);
  Vector<Scalar> v = Vector<Scalar>::Zero(nz);
  std::vector<int> mark(nz, 0);  // 0 unvisited, 1 on stack, 2 done

  // Iterative post-order traversal.
  for (Eigen::Index root = 0; root < nz; ++root) {
    if (mark[root]) continue;
    std::vector<std::pair<Eigen::Index, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [z, expanded] = stack.back();
      stack.pop_back();
      if (expanded) {
        for (Eigen::Index a = 0; a < na; ++a) {
          Scalar acc = reward(z, a);
          for (TransitionMatrix::InnerIterator it(transitions, z * na + a); it; ++it)
            acc += static_cast<Scalar>(it.value()) * v(it.col());
          q(z, a) = acc;
        }
        v(z) = log_sum_exp_rows(q.row(z))(0);
        mark[z] = 2;
        continue;
      }
      if (mark[z] == 2) continue;
      if (terminal[z]) {
        mark[z] = 2;
        continue;
      }
      if (mark[z] == 1) throw InputError("soft backup requires an acyclic MDP");
      mark[z] = 1;
      stack.emplace_back(z, true);
      for (Eigen::Index a = 0; a < na; ++a) {
        for (TransitionMatrix::InnerIterator it(transitions, z * na + a); it; ++it) {
          if (mark[it.col()] == 1 && !terminal[it.col()])
            throw InputError("soft backup requires an acyclic MDP");
          if (mark[it.col()] == 0) stack.emplace_back(it.col(), false);
        }
      }
    }
  }
  return q;
}

}  // namespace atig
