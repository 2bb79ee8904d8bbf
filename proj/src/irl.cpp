#include "atig/irl.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "atig/error.hpp"

namespace atig {

int dfa_slot_count(const FeatureOptions& opts, int num_dfa_states) {
  return std::max(opts.dfa_slots, num_dfa_states);
}

int feature_dim(const FeatureOptions& opts, int num_dfa_states) {
  return opts.neighborhood * opts.neighborhood * kNumObjectKinds +
         dfa_slot_count(opts, num_dfa_states) + kNumActions;
}

Eigen::MatrixXd encode_features(const GridMap& grid, const ProductMdp& product,
                                const FeatureOptions& opts) {
  if (opts.neighborhood < 1 || opts.neighborhood % 2 == 0)
    throw InputError("feature neighborhood must be a positive odd number");
  const int k = opts.neighborhood;
  const int half = k / 2;
  const int dfa_base = k * k * kNumObjectKinds;
  const int action_base = dfa_base + dfa_slot_count(opts, product.dfa.num_states());
  Eigen::MatrixXd f =
      Eigen::MatrixXd::Zero(product.num_pairs(), feature_dim(opts, product.dfa.num_states()));
  for (int z = 0; z < product.num_states(); ++z) {
    const Cell center = grid.cell_at(product.states[z].cell);
    for (int a = 0; a < kNumActions; ++a) {
      auto r = f.row(z * kNumActions + a);
      for (int oy = 0; oy < k; ++oy) {
        for (int ox = 0; ox < k; ++ox) {
          const Cell c{center.x + ox - half, center.y + oy - half};
          if (!grid.in_bounds(c)) continue;
          r((oy * k + ox) * kNumObjectKinds + static_cast<int>(grid.at(c))) = 1.0;
        }
      }
      r(dfa_base + product.states[z].q) = 1.0;
      r(action_base + a) = 1.0;
    }
  }
  return f;
}

ProductTrajectory project_demo(const GridMap& grid, const ProductMdp& product,
                               const Demonstration& demo) {
  if (!replay_matches(grid, demo)) throw InputError("demonstration is not valid for this grid");
  const Dfa& dfa = product.dfa;
  int q = dfa.advance(dfa.initial(), grid.label(demo.cells[0]));
  int z = product.find(grid.index(demo.cells[0]), q);
  if (z < 0) throw StateError("demonstration starts outside the reachable product");
  ProductTrajectory out;
  for (std::size_t t = 0; t < demo.actions.size(); ++t) {
    if (product.is_absorbing(z)) break;
    out.push_back({z, static_cast<int>(demo.actions[t])});
    q = dfa.advance(q, entry_label(grid, demo.cells[t], demo.cells[t + 1]));
    z = product.find(grid.index(demo.cells[t + 1]), q);
    if (z < 0) throw StateError("demonstration leaves the reachable product");
  }
  return out;
}

QMatrix<double> visit_counts(const ProductMdp& product,
                             const std::vector<ProductTrajectory>& trajectories) {
  QMatrix<double> c = QMatrix<double>::Zero(product.num_states(), kNumActions);
  for (const auto& traj : trajectories) {
    for (const auto& [z, a] : traj) c(z, a) += 1.0;
  }
  return c;
}

namespace {

double sum_log_policy(const std::vector<ProductTrajectory>& trajectories,
                      const QMatrix<double>& log_pi, double log_floor, bool& floored) {
  double total = 0.0;
  for (const auto& traj : trajectories) {
    for (const auto& [z, a] : traj) {
      double lp = log_pi(z, a);
      if (!(lp >= log_floor)) {
        floored = true;
        lp = log_floor;
      }
      total += lp;
    }
  }
  return total;
}

}  // namespace

LogLikelihood loglik_and_grad(const std::vector<ProductTrajectory>& trajectories,
                              const QMatrix<double>& q, const GradTable<double>& grad,
                              const QMatrix<double>& pi, double log_floor) {
  LogLikelihood out;
  out.value = sum_log_policy(trajectories, log_soft_policy(q), log_floor, out.floored);
  out.gradient = Eigen::VectorXd::Zero(grad.dq.cols());
  const Eigen::Index na = pi.cols();
  const Eigen::MatrixXd expected = policy_average(pi, grad.dq);
  for (const auto& traj : trajectories) {
    for (const auto& [z, a] : traj) {
      out.gradient += (grad.dq.row(z * na + a) - expected.row(z)).transpose();
    }
  }
  return out;
}

LogLikelihood loglik_and_grad_adjoint(const ProductMdp& product,
                                      const std::vector<ProductTrajectory>& trajectories,
                                      const RewardModel& model, const RewardInputs& inputs,
                                      const QMatrix<double>& q, const QMatrix<double>& pi,
                                      const SolverOptions& opts, double log_floor,
                                      QMatrix<double>* warm_adjoint) {
  LogLikelihood out;
  out.value = sum_log_policy(trajectories, log_soft_policy(q), log_floor, out.floored);
  const QMatrix<double> counts = visit_counts(product, trajectories);
  const Eigen::VectorXd visits = counts.rowwise().sum();
  const QMatrix<double> c = counts - (pi.array().colwise() * visits.array()).matrix();
  QMatrix<double> mu = adjoint_visitation(product.transitions, pi, c, opts, warm_adjoint);
  out.gradient = model.weighted_gradient(inputs, mu);
  if (warm_adjoint) *warm_adjoint = std::move(mu);
  return out;
}

double loglik_at(const ProductMdp& product, const std::vector<ProductTrajectory>& trajectories,
                 const RewardModel& model, const RewardInputs& inputs,
                 const SolverOptions& opts) {
  const auto q = soft_value_iteration(product.transitions, model.rewards(inputs), opts);
  bool floored = false;
  return sum_log_policy(trajectories, log_soft_policy(q.q), -std::numeric_limits<double>::max(),
                        floored);
}

TrainReport train(const ProductMdp& product, const std::vector<ProductTrajectory>& trajectories,
                  RewardModel& model, const RewardInputs& inputs, const TrainConfig& cfg,
                  const PolicyEvaluator& evaluator) {
  if (trajectories.empty()) throw InputError("training needs at least one demonstration");
  if (cfg.eval_period < 1) throw InputError("evaluation period must be at least 1");
  if (cfg.stop_threshold < 0.0) throw InputError("stopping threshold must be non-negative");
  const SolverOptions solver = cfg.solver();

  TrainReport report;
  QMatrix<double> warm_q, warm_mu;
  double beta_prev = -std::numeric_limits<double>::infinity();
  for (int t = 0;; ++t) {
    const QMatrix<double> reward = model.rewards(inputs);
    QTable<double> q;
    try {
      q = soft_value_iteration(product.transitions, reward, solver,
                               warm_q.size() ? &warm_q : nullptr);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("training iteration " + std::to_string(t) + ": " + e.what(),
                             e.residual());
    }
    warm_q = q.q;
    const QMatrix<double> pi = soft_policy(q.q);

    LogLikelihood ll;
    try {
      if (cfg.dense_gradient) {
        const auto g = grad_value_iteration<double>(product.transitions, pi,
                                                    model.jacobian(inputs), solver);
        ll = loglik_and_grad(trajectories, q.q, g, pi, cfg.log_floor);
      } else {
        ll = loglik_and_grad_adjoint(product, trajectories, model, inputs, q.q, pi, solver,
                                     cfg.log_floor, &warm_mu);
      }
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("training iteration " + std::to_string(t) + ": " + e.what(),
                             e.residual());
    }
    report.floored = report.floored || ll.floored;
    IterationMetrics m{t, ll.value, ll.gradient.norm(), std::nullopt};

    bool stop = false;
    if (t % cfg.eval_period == 0 || t >= cfg.max_iterations) {
      const double beta = evaluator(pi, t);
      m.beta = beta;
      report.beta_history.emplace_back(t, beta);
      report.final_beta = beta;
      stop = t >= cfg.max_iterations ||
             (t >= cfg.min_iterations && beta - beta_prev <= cfg.stop_threshold);
      beta_prev = beta;
    }
    report.metrics.push_back(m);
    if (stop) {
      report.iterations = t;
      report.q = std::move(q.q);
      report.policy = pi;
      return report;
    }
    const double alpha = cfg.decay ? cfg.learning_rate / std::sqrt(t + 1.0) : cfg.learning_rate;
    model.params() += alpha * ll.gradient;
  }
}

void write_metrics_csv(const TrainReport& report, std::ostream& out) {
  out << "iteration,loglik,grad_norm,beta\n";
  char buf[128];
  for (const auto& m : report.metrics) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,", m.iteration, m.loglik, m.grad_norm);
    out << buf;
    if (m.beta) {
      std::snprintf(buf, sizeof buf, "%.17g", *m.beta);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace atig
