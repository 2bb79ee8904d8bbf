#include "atig/reward_model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "atig/error.hpp"
#include "atig/rng.hpp"

namespace atig {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Layer {
  Eigen::Map<const RowMatrix> weight;  // out x in
  Eigen::Map<const Eigen::VectorXd> bias;
};

std::vector<Layer> mlp_layers(const std::vector<int>& shape, const Eigen::VectorXd& theta) {
  std::vector<Layer> layers;
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < shape.size(); ++l) {
    const int in = shape[l], out = shape[l + 1];
    layers.push_back({Eigen::Map<const RowMatrix>(theta.data() + offset, out, in),
                      Eigen::Map<const Eigen::VectorXd>(theta.data() + offset + out * in, out)});
    offset += static_cast<Eigen::Index>(out) * in + out;
  }
  return layers;
}

Eigen::Index mlp_param_count(const std::vector<int>& shape) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < shape.size(); ++l)
    n += static_cast<Eigen::Index>(shape[l + 1]) * shape[l] + shape[l + 1];
  return n;
}

/// Forward pass keeping every layer's activations (post-ReLU for hidden layers).
std::vector<Eigen::MatrixXd> mlp_forward(const std::vector<Layer>& layers,
                                         const Eigen::MatrixXd& x) {
  std::vector<Eigen::MatrixXd> acts{x};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd h = acts.back() * layers[l].weight.transpose();
    h.rowwise() += layers[l].bias.transpose();
    if (l + 1 < layers.size()) h = h.cwiseMax(0.0);
    acts.push_back(std::move(h));
  }
  return acts;
}

/// Backpropagates an upstream gradient on the scalar outputs, one entry per input row.
Eigen::VectorXd mlp_backward(const std::vector<int>& shape, const std::vector<Layer>& layers,
                             const std::vector<Eigen::MatrixXd>& acts,
                             const Eigen::VectorXd& upstream) {
  Eigen::VectorXd grad(mlp_param_count(shape));
  Eigen::MatrixXd delta = upstream;  // N x 1
  Eigen::Index end = grad.size();
  for (std::size_t l = layers.size(); l-- > 0;) {
    const int in = shape[l], out = shape[l + 1];
    end -= out;
    grad.segment(end, out) = delta.colwise().sum().transpose();
    end -= static_cast<Eigen::Index>(out) * in;
    Eigen::Map<RowMatrix>(grad.data() + end, out, in) = delta.transpose() * acts[l];
    if (l > 0) {
      Eigen::MatrixXd prev = delta * layers[l].weight;
      delta = (acts[l].array() > 0.0).select(prev, 0.0);
    }
  }
  return grad;
}

}  // namespace

std::string variant_name(RewardVariant v) {
  switch (v) {
    case RewardVariant::Tabular: return "tabular";
    case RewardVariant::Linear: return "linear";
    case RewardVariant::Mlp: return "mlp";
  }
  return "?";
}

RewardVariant parse_variant(std::string_view name) {
  if (name == "tabular") return RewardVariant::Tabular;
  if (name == "linear") return RewardVariant::Linear;
  if (name == "mlp") return RewardVariant::Mlp;
  throw InputError("unknown reward variant '" + std::string(name) + "'");
}

RewardModel::RewardModel(RewardVariant v, std::vector<int> shape, Eigen::VectorXd theta)
    : variant_(v), shape_(std::move(shape)), theta_(std::move(theta)) {
  if (theta_.size() == 0) throw InputError("reward model needs at least one parameter");
}

RewardModel RewardModel::tabular(int num_states, int num_actions) {
  if (num_states < 1 || num_actions < 1) throw InputError("tabular model needs positive sizes");
  return RewardModel(RewardVariant::Tabular, {num_states, num_actions},
                     Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_states) * num_actions));
}

RewardModel RewardModel::linear(int feature_dim) {
  if (feature_dim < 1) throw InputError("linear model needs a positive feature dimension");
  return RewardModel(RewardVariant::Linear, {feature_dim}, Eigen::VectorXd::Zero(feature_dim));
}

RewardModel RewardModel::mlp(int input_dim, const std::vector<int>& hidden, std::uint64_t seed) {
  std::vector<int> shape{input_dim};
  for (int h : hidden) shape.push_back(h);
  shape.push_back(1);
  for (int s : shape) {
    if (s < 1) throw InputError("mlp layer sizes must be positive");
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(mlp_param_count(shape));
  Rng rng = make_rng(seed);
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < shape.size(); ++l) {
    const Eigen::Index n = static_cast<Eigen::Index>(shape[l + 1]) * shape[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(shape[l]));
    for (Eigen::Index i = 0; i < n; ++i) theta(offset + i) = bound * (2.0 * uniform01(rng) - 1.0);
    offset += n + shape[l + 1];
  }
  return RewardModel(RewardVariant::Mlp, std::move(shape), std::move(theta));
}

void RewardModel::check_inputs(const RewardInputs& in) const {
  switch (variant_) {
    case RewardVariant::Tabular:
      if (in.num_states != shape_[0] || in.num_actions != shape_[1])
        throw InputError("tabular model was built for a different product MDP");
      break;
    case RewardVariant::Linear:
    case RewardVariant::Mlp:
      if (!in.features || in.features->rows() != in.num_pairs())
        throw InputError("feature matrix missing or of the wrong height");
      if (in.features->cols() != shape_[0])
        throw InputError("feature dimension " + std::to_string(in.features->cols()) +
                         " does not match model input " + std::to_string(shape_[0]));
      break;
  }
}

QMatrix<double> RewardModel::rewards(const RewardInputs& in) const {
  check_inputs(in);
  QMatrix<double> r(in.num_states, in.num_actions);
  Eigen::Map<Eigen::VectorXd> flat(r.data(), r.size());
  switch (variant_) {
    case RewardVariant::Tabular: flat = theta_; break;
    case RewardVariant::Linear: flat.noalias() = *in.features * theta_; break;
    case RewardVariant::Mlp: {
      const auto layers = mlp_layers(shape_, theta_);
      flat = mlp_forward(layers, *in.features).back().col(0);
      break;
    }
  }
  return r;
}

Eigen::MatrixXd RewardModel::jacobian(const RewardInputs& in) const {
  check_inputs(in);
  switch (variant_) {
    case RewardVariant::Tabular:
      return Eigen::MatrixXd::Identity(in.num_pairs(), theta_.size());
    case RewardVariant::Linear: return *in.features;
    case RewardVariant::Mlp: {
      const auto layers = mlp_layers(shape_, theta_);
      Eigen::MatrixXd jac(in.num_pairs(), theta_.size());
      for (int i = 0; i < in.num_pairs(); ++i) {
        const auto acts = mlp_forward(layers, in.features->row(i));
        jac.row(i) = mlp_backward(shape_, layers, acts, Eigen::VectorXd::Ones(1)).transpose();
      }
      return jac;
    }
  }
  return {};
}

Eigen::VectorXd RewardModel::weighted_gradient(const RewardInputs& in,
                                               const QMatrix<double>& weights) const {
  check_inputs(in);
  if (weights.rows() != in.num_states || weights.cols() != in.num_actions)
    throw InputError("weight table has the wrong shape");
  const Eigen::Map<const Eigen::VectorXd> flat(weights.data(), weights.size());
  switch (variant_) {
    case RewardVariant::Tabular: return flat;
    case RewardVariant::Linear: return in.features->transpose() * flat;
    case RewardVariant::Mlp: {
      const auto layers = mlp_layers(shape_, theta_);
      return mlp_backward(shape_, layers, mlp_forward(layers, *in.features), flat);
    }
  }
  return {};
}

bool RewardModel::operator==(const RewardModel& other) const {
  return variant_ == other.variant_ && shape_ == other.shape_ && theta_ == other.theta_;
}

std::string format_model(const RewardModel& model) {
  std::ostringstream out;
  out << "variant " << variant_name(model.variant()) << '\n';
  out << "shape";
  for (int s : model.shape()) out << ' ' << s;
  out << '\n';
  out << "params " << model.dim() << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < model.dim(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", model.params()(i));
    out << buf;
  }
  return out.str();
}

RewardModel parse_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string key, name, line;
  if (!(in >> key >> name) || key != "variant") throw InputError("model file line 1: expected 'variant NAME'");
  const RewardVariant v = parse_variant(name);
  std::getline(in, line);
  if (!std::getline(in, line)) throw InputError("model file line 2: missing shape");
  std::istringstream ls(line);
  std::vector<int> shape;
  if (!(ls >> key) || key != "shape") throw InputError("model file line 2: expected 'shape ...'");
  for (int s; ls >> s;) shape.push_back(s);
  Eigen::Index d = 0;
  if (!(in >> key >> d) || key != "params" || d < 1)
    throw InputError("model file line 3: expected 'params d'");

  RewardModel model = [&] {
    switch (v) {
      case RewardVariant::Tabular:
        if (shape.size() != 2) throw InputError("model file: tabular shape needs 2 entries");
        return RewardModel::tabular(shape[0], shape[1]);
      case RewardVariant::Linear:
        if (shape.size() != 1) throw InputError("model file: linear shape needs 1 entry");
        return RewardModel::linear(shape[0]);
      case RewardVariant::Mlp:
        if (shape.size() < 2 || shape.back() != 1)
          throw InputError("model file: mlp shape must end in 1");
        return RewardModel::mlp(shape.front(),
                                std::vector<int>(shape.begin() + 1, shape.end() - 1), 0);
    }
    throw InputError("model file: bad variant");
  }();
  if (model.dim() != d) throw InputError("model file: parameter count does not match shape");
  for (Eigen::Index i = 0; i < d; ++i) {
    std::string tok;
    if (!(in >> tok)) throw InputError("model file line " + std::to_string(i + 4) + ": missing value");
    try {
      model.params()(i) = std::stod(tok);
    } catch (const std::exception&) {
      throw InputError("model file line " + std::to_string(i + 4) + ": bad value '" + tok + "'");
    }
  }
  return model;
}

RewardModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

void save_model(const RewardModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write model file " + path.string());
  out << format_model(model);
}

}  // namespace atig
