#include <doctest.h>

#include <cmath>

#include "atig/error.hpp"
#include "atig/reward_model.hpp"
#include "atig/rng.hpp"

using namespace atig;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * uniform01(rng) - 1.0;
  return m;
}

// Reference forward pass, one input row at a time, from the documented parameter layout:
// per layer a row-major (out x in) weight block followed by the bias.
double reference_mlp(const std::vector<int>& shape, const Eigen::VectorXd& theta,
                     const Eigen::VectorXd& x) {
  std::vector<double> act(x.data(), x.data() + x.size());
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < shape.size(); ++l) {
    const int in = shape[l], out = shape[l + 1];
    std::vector<double> next(out);
    for (int o = 0; o < out; ++o) {
      double s = theta(offset + static_cast<std::size_t>(out) * in + o);
      for (int i = 0; i < in; ++i) s += theta(offset + static_cast<std::size_t>(o) * in + i) * act[i];
      next[o] = l + 2 < shape.size() ? std::max(0.0, s) : s;
    }
    offset += static_cast<std::size_t>(out) * in + out;
    act = std::move(next);
  }
  return act[0];
}

void check_jacobian_by_differences(RewardModel model, const RewardInputs& in, double tol) {
  const Eigen::MatrixXd jac = model.jacobian(in);
  REQUIRE(jac.rows() == in.num_pairs());
  REQUIRE(jac.cols() == model.dim());
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < model.dim(); ++k) {
    const double saved = model.params()(k);
    model.params()(k) = saved + h;
    const QMatrix<double> plus = model.rewards(in);
    model.params()(k) = saved - h;
    const QMatrix<double> minus = model.rewards(in);
    model.params()(k) = saved;
    const QMatrix<double> fd = (plus - minus) / (2 * h);
    const Eigen::Map<const Eigen::VectorXd> fd_flat(fd.data(), fd.size());
    REQUIRE((jac.col(k) - fd_flat).cwiseAbs().maxCoeff() < tol);
  }
}

}  // namespace

TEST_CASE("variant names") {
  for (auto v : {RewardVariant::Tabular, RewardVariant::Linear, RewardVariant::Mlp})
    CHECK(parse_variant(variant_name(v)) == v);
  CHECK_THROWS_AS(parse_variant("cnn"), InputError);
}

TEST_CASE("tabular and linear rewards") {
  RewardModel tab = RewardModel::tabular(3, 4);
  CHECK(tab.dim() == 12);
  for (int i = 0; i < 12; ++i) tab.params()(i) = i;
  const RewardInputs tin{3, 4, nullptr};
  const auto r = tab.rewards(tin);
  CHECK(r(2, 1) == 9.0);
  CHECK(tab.jacobian(tin).isIdentity());
  CHECK_THROWS_AS(tab.rewards({2, 4, nullptr}), InputError);

  Rng rng = make_rng(3);
  const Eigen::MatrixXd f = random_matrix(rng, 8, 5);
  RewardModel lin = RewardModel::linear(5);
  lin.params() = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
  const RewardInputs lin_in{2, 4, &f};
  const auto lr = lin.rewards(lin_in);
  for (int z = 0; z < 2; ++z)
    for (int a = 0; a < 4; ++a) CHECK(lr(z, a) == doctest::Approx(f.row(z * 4 + a).dot(lin.params())));
  CHECK_THROWS_AS(lin.rewards({3, 4, &f}), InputError);
  CHECK_THROWS_AS(lin.rewards({2, 4, nullptr}), InputError);
  CHECK_THROWS_AS(RewardModel::linear(0), InputError);
  CHECK_THROWS_AS(RewardModel::mlp(4, {0}, 1), InputError);
}

TEST_CASE("mlp initialization") {
  const RewardModel m = RewardModel::mlp(6, {5, 3}, 11);
  CHECK(m.shape() == std::vector<int>{6, 5, 3, 1});
  CHECK(m.dim() == 6 * 5 + 5 + 5 * 3 + 3 + 3 * 1 + 1);
  // Biases start at zero, weights within +-1/sqrt(fan_in).
  CHECK(m.params().segment(30, 5).isZero());
  CHECK(m.params().segment(0, 30).cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(6.0));
  CHECK(m.params().segment(35, 15).cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(5.0));
  CHECK(m == RewardModel::mlp(6, {5, 3}, 11));
  CHECK_FALSE(m == RewardModel::mlp(6, {5, 3}, 12));
}

TEST_CASE("property: mlp forward pass matches the reference") {
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int in = 1 + static_cast<int>(uniform_index(rng, 6));
    std::vector<int> hidden;
    for (std::size_t l = 0, n = uniform_index(rng, 3); l < n; ++l)
      hidden.push_back(1 + static_cast<int>(uniform_index(rng, 6)));
    RewardModel m = RewardModel::mlp(in, hidden, trial);
    for (Eigen::Index i = 0; i < m.dim(); ++i) m.params()(i) += 0.3 * (2.0 * uniform01(rng) - 1.0);
    const Eigen::MatrixXd f = random_matrix(rng, 12, in);
    const auto r = m.rewards({3, 4, &f});
    for (int row = 0; row < 12; ++row)
      REQUIRE(r(row / 4, row % 4) ==
              doctest::Approx(reference_mlp(m.shape(), m.params(), f.row(row).transpose()))
                  .epsilon(1e-12));
  }
}

TEST_CASE("property: jacobians match finite differences") {
  Rng rng = make_rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const int nz = 1 + static_cast<int>(uniform_index(rng, 4));
    const int d = 1 + static_cast<int>(uniform_index(rng, 6));
    const Eigen::MatrixXd f = random_matrix(rng, nz * 4, d);
    const RewardInputs in{nz, 4, &f};

    RewardModel lin = RewardModel::linear(d);
    lin.params() = random_matrix(rng, d, 1);
    check_jacobian_by_differences(lin, in, 1e-8);

    RewardModel mlp = RewardModel::mlp(d, {4, 3}, 100 + trial);
    for (Eigen::Index i = 0; i < mlp.dim(); ++i) mlp.params()(i) += 0.2 * (2.0 * uniform01(rng) - 1.0);
    check_jacobian_by_differences(mlp, in, 1e-6);

    RewardModel tab = RewardModel::tabular(nz, 4);
    tab.params() = random_matrix(rng, nz * 4, 1);
    check_jacobian_by_differences(tab, {nz, 4, nullptr}, 1e-8);
  }
}

TEST_CASE("property: weighted gradient equals the jacobian transpose product") {
  Rng rng = make_rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const int nz = 1 + static_cast<int>(uniform_index(rng, 5));
    const int d = 1 + static_cast<int>(uniform_index(rng, 5));
    const Eigen::MatrixXd f = random_matrix(rng, nz * 4, d);
    QMatrix<double> w(nz, 4);
    for (int i = 0; i < w.size(); ++i) w.data()[i] = 2.0 * uniform01(rng) - 1.0;
    const Eigen::Map<const Eigen::VectorXd> w_flat(w.data(), w.size());

    const RewardModel mlp = RewardModel::mlp(d, {5}, trial);
    const RewardInputs in{nz, 4, &f};
    CHECK((mlp.weighted_gradient(in, w) - mlp.jacobian(in).transpose() * w_flat)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    RewardModel lin = RewardModel::linear(d);
    CHECK((lin.weighted_gradient(in, w) - f.transpose() * w_flat).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(lin.weighted_gradient(in, QMatrix<double>::Zero(nz + 1, 4)), InputError);
  }
}

TEST_CASE("model files round trip bit-exactly") {
  Rng rng = make_rng(24);
  RewardModel m = RewardModel::mlp(7, {4}, 5);
  m.params()(3) = 1.0 / 3.0;
  m.params()(4) = -1e-300;
  const std::string text = format_model(m);
  CHECK(parse_model(text) == m);
  CHECK(format_model(parse_model(text)) == text);

  RewardModel tab = RewardModel::tabular(2, 4);
  tab.params() = random_matrix(rng, 8, 1);
  const auto path = std::filesystem::temp_directory_path() / "atig_model_roundtrip.txt";
  save_model(tab, path);
  CHECK(load_model(path) == tab);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(parse_model("variant tabular\nshape 1 1\nparams 2\n0\n0\n"), InputError);
  CHECK_THROWS_AS(parse_model("variant linear\nshape 2\nparams 2\n0\nabc\n"), InputError);
  CHECK_THROWS_AS(parse_model("variant mlp\nshape 2 3\nparams 13\n"), InputError);
  CHECK_THROWS_AS(parse_model("kind linear\n"), InputError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.txt"), InputError);
}
