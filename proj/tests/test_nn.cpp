#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ssmprune/engine.hpp"
#include "ssmprune/error.hpp"
#include "ssmprune/nn.hpp"
#include "testing.hpp"

using namespace ssmprune;

namespace {

/// (2,6,6) -> conv(3) -> relu -> conv(4) -> relu -> pool -> flatten -> fc(3) -> loss
ModelGraph toy_net(std::mt19937_64& rng) {
  ModelGraph g;
  g.input = {2, 6, 6};
  Conv<float> c1{Tensor4<float>({3, 2, 3, 3}), testing::random_matrix(rng, 3, 1, -0.1, 0.1).col(0), 1, 1, 3};
  c1.weight.as_matrix() = testing::random_matrix(rng, 3, 18, -0.6, 0.6);
  Conv<float> c2{Tensor4<float>({4, 3, 3, 3}), testing::random_matrix(rng, 4, 1, -0.1, 0.1).col(0), 1, 1, 4};
  c2.weight.as_matrix() = testing::random_matrix(rng, 4, 27, -0.6, 0.6);
  g.layers.push_back({"conv1", c1});
  g.layers.push_back({"relu1", ReLU{}});
  g.layers.push_back({"conv2", c2});
  g.layers.push_back({"relu2", ReLU{}});
  g.layers.push_back({"pool", MaxPool{2, 2}});
  g.layers.push_back({"flatten", Flatten{}});
  g.layers.push_back({"fc", Dense<float>{testing::random_matrix(rng, 3, 36, -0.5, 0.5), testing::random_matrix(rng, 3, 1, -0.1, 0.1).col(0)}});
  g.layers.push_back({"loss", SoftmaxXent{}});
  validate(g);
  return g;
}

}  // namespace

TEST_CASE("1x1 unit conv is the identity") {
  ModelGraph g;
  g.input = {1, 4, 5};
  Conv<float> c{Tensor4<float>({1, 1, 1, 1}), Vector::Zero(1), 1, 0, 1};
  c.weight(0, 0, 0, 0) = 1.0f;
  g.layers.push_back({"conv", c});
  std::mt19937_64 rng(1);
  const Matrix x = testing::random_matrix(rng, 3, 20);
  CHECK(forward<float>(g, x) == x);
}

TEST_CASE("all-zero network gives uniform softmax and loss ln(10)") {
  ModelGraph g = vgg_mini({{3, 8, 8}, {4, 4}, 8, 10}, 0);
  g = zeros_like(g);
  std::mt19937_64 rng(2);
  const Matrix x = testing::random_matrix(rng, 4, 3 * 64, 0, 1);
  const Matrix logits = forward<float>(g, x);
  CHECK(logits.isZero(0.0));
  const std::vector<std::int32_t> labels{0, 3, 9, 5};
  CHECK(std::abs(softmax_cross_entropy<float>(logits, labels) - std::log(10.0)) <= 1e-6);
}

TEST_CASE("forward matches a direct nested-loop evaluation") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const ModelGraph g = testing::random_chain(rng);
    const Matrix x = testing::random_matrix(rng, 4, g.input.size());
    const Matrix y = forward<float>(g, x);
    for (Index b = 0; b < 4; ++b) {
      const auto ref = testing::ref_forward(g, x.row(b).data());
      REQUIRE(static_cast<Index>(ref.size()) == y.cols());
      for (Index k = 0; k < y.cols(); ++k) CHECK(std::abs(y(b, k) - ref[k]) < 1e-5);
    }
  }
  // Strided, unpadded conv too.
  ModelGraph g;
  g.input = {2, 7, 7};
  Conv<float> c{Tensor4<float>({3, 2, 3, 3}), testing::random_matrix(rng, 3, 1).col(0), 2, 0, 3};
  c.weight.as_matrix() = testing::random_matrix(rng, 3, 18);
  g.layers.push_back({"conv", c});
  const Matrix x = testing::random_matrix(rng, 2, 98);
  const Matrix y = forward<float>(g, x);
  CHECK(y.cols() == 27);
  for (Index b = 0; b < 2; ++b) {
    const auto ref = testing::ref_forward(g, x.row(b).data());
    for (Index k = 0; k < 27; ++k) CHECK(std::abs(y(b, k) - ref[k]) < 1e-5);
  }
}

TEST_CASE("im2col and col2im are adjoint") {
  std::mt19937_64 rng(4);
  const Shape3 in{3, 5, 6};
  for (Index stride : {1, 2}) {
    for (Index pad : {0, 1, 2}) {
      const MatrixX<double> x = testing::random_matrix(rng, 1, in.size()).cast<double>();
      MatrixX<double> cols;
      im2col<double>(x.data(), in, 3, 3, stride, pad, cols);
      const MatrixX<double> c = testing::random_matrix(rng, cols.rows(), cols.cols()).cast<double>();
      MatrixX<double> back = MatrixX<double>::Zero(1, in.size());
      col2im<double>(c, in, 3, 3, stride, pad, back.data());
      CHECK(std::abs((cols.array() * c.array()).sum() - (x.array() * back.array()).sum()) < 1e-10);
    }
  }
}

TEST_CASE("backward matches central finite differences in double") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 3; ++t) {
    BasicModelGraph<double> g = cast_graph<double>(toy_net(rng));
    const MatrixX<double> x = testing::random_matrix(rng, 3, g.input.size()).cast<double>();
    const std::vector<std::int32_t> labels{0, 2, 1};
    const auto res = testing::finite_difference_check(g, x, labels);
    CHECK(res.failures == 0);
    CHECK(res.kinks < res.checked / 20);
    MESSAGE(res.checked << " coordinates, " << res.kinks << " near a kink, worst relative error " << res.worst);
  }
}

TEST_CASE("saturated correct logits give a vanishing gradient") {
  std::mt19937_64 rng(6);
  ModelGraph g = toy_net(rng);
  auto& fc = std::get<Dense<float>>(g.layers[*g.find("fc")].op);
  fc.weight.setZero();
  fc.bias << 60.0f, 0.0f, 0.0f;
  const Matrix x = testing::random_matrix(rng, 4, g.input.size());
  const std::vector<std::int32_t> labels{0, 0, 0, 0};
  ForwardCache<float> cache;
  forward<float>(g, x, &cache);
  auto grads = backward<float>(g, cache, labels);
  double norm2 = 0.0;
  for_each_parameter(grads, [&](Eigen::Map<Vector> m, bool) { norm2 += m.cast<double>().squaredNorm(); });
  CHECK(std::sqrt(norm2) < 1e-6);
}

TEST_CASE("duplicating the batch leaves mean-loss gradients unchanged") {
  std::mt19937_64 rng(7);
  const ModelGraph g = toy_net(rng);
  const Matrix x = testing::random_matrix(rng, 3, g.input.size());
  const std::vector<std::int32_t> labels{1, 0, 2};
  Matrix xx(6, x.cols());
  xx << x, x;
  const std::vector<std::int32_t> ll{1, 0, 2, 1, 0, 2};
  ForwardCache<float> c1, c2;
  forward<float>(g, x, &c1);
  forward<float>(g, xx, &c2);
  double l1 = 0, l2 = 0;
  auto g1 = backward<float>(g, c1, labels, &l1);
  auto g2 = backward<float>(g, c2, ll, &l2);
  CHECK(std::abs(l1 - l2) < 1e-6);
  std::vector<Vector> a, b;
  for_each_parameter(g1, [&](Eigen::Map<Vector> m, bool) { a.emplace_back(m); });
  for_each_parameter(g2, [&](Eigen::Map<Vector> m, bool) { b.emplace_back(m); });
  for (std::size_t k = 0; k < a.size(); ++k) CHECK((a[k] - b[k]).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("backward rejects a cache from a different graph") {
  std::mt19937_64 rng(8);
  const ModelGraph g = toy_net(rng);
  const Matrix x = testing::random_matrix(rng, 2, g.input.size());
  ForwardCache<float> cache;
  forward<float>(g, x, &cache);
  const std::vector<Index> idx{0};
  const ModelGraph pruned = prune_conv_layer<float>(g, "conv1", idx);
  const std::vector<std::int32_t> labels{0, 1};
  CHECK_THROWS_AS(backward<float>(pruned, cache, labels), StaleCacheError);
  CHECK_NOTHROW(backward<float>(g, cache, labels));
}

TEST_CASE("forward rejects a wrongly sized input") {
  std::mt19937_64 rng(9);
  const ModelGraph g = toy_net(rng);
  CHECK_THROWS_AS(forward<float>(g, Matrix::Zero(1, 10)), ShapeError);
}

TEST_CASE("finite-difference agreement on random tiny chains") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 8; ++t) {
    const auto g = cast_graph<double>(testing::random_chain(rng, 2, 4));
    const MatrixX<double> x = testing::random_matrix(rng, 2, g.input.size()).cast<double>();
    const auto res = testing::finite_difference_check(g, x, {t % 5, (t + 2) % 5});
    CHECK(res.failures == 0);
  }
}
