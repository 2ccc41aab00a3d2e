#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <random>

#include "ssmprune/error.hpp"
#include "ssmprune/similarity.hpp"
#include "testing.hpp"

using namespace ssmprune;

namespace {
std::vector<float> v(std::initializer_list<float> xs) { return xs; }
}

TEST_CASE("distance examples") {
  CHECK(distance(MetricKind::L2, v({0, 0}), v({3, 4})) == doctest::Approx(5.0));
  CHECK(distance(MetricKind::Cityblock, v({1, 2}), v({4, 6})) == doctest::Approx(7.0));
  CHECK(distance(MetricKind::Cosine, v({1, 0}), v({0, 1})) == doctest::Approx(1.0));
  CHECK(distance(MetricKind::KLDivergence, v({0.25f, 0.75f}), v({0.25f, 0.75f})) == 0.0);
}

TEST_CASE("cosine zero-vector rule") {
  CHECK(distance(MetricKind::Cosine, v({0, 0}), v({1, 2})) == 1.0);
  CHECK(distance(MetricKind::Cosine, v({1, 2}), v({0, 0})) == 1.0);
  CHECK(distance(MetricKind::Cosine, v({0, 0}), v({0, 0})) == 0.0);
  CHECK(distance(MetricKind::Cosine, v({1, 2}), v({-1, -2})) == doctest::Approx(2.0));
}

TEST_CASE("distance errors") {
  CHECK_THROWS_AS(distance(MetricKind::L2, v({1, 2}), v({1})), ShapeError);
  CHECK_THROWS_AS(distance(MetricKind::L2, std::vector<float>{}, std::vector<float>{}), ShapeError);
}

TEST_CASE("parse_metric is case-insensitive") {
  CHECK(parse_metric("L2") == MetricKind::L2);
  CHECK(parse_metric("Cosine") == MetricKind::Cosine);
  CHECK(parse_metric("CITYBLOCK") == MetricKind::Cityblock);
  CHECK(parse_metric("kl") == MetricKind::KLDivergence);
  CHECK_THROWS_AS(parse_metric("euclid"), ConfigError);
}

TEST_CASE("distances match independent formulas on random 27-dim vectors") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const Matrix m = testing::random_matrix(rng, 2, 27, -2, 2);
    const std::span<const float> x(m.row(0).data(), 27), y(m.row(1).data(), 27);
    const auto rel = [](double a, long double b) { return std::abs(a - static_cast<double>(b)) / std::max(1.0, std::abs(static_cast<double>(b))); };
    CHECK(rel(distance(MetricKind::L2, x, y), testing::ref_distance_l2(x.data(), y.data(), 27)) < 1e-6);
    CHECK(rel(distance(MetricKind::Cityblock, x, y), testing::ref_distance_l1(x.data(), y.data(), 27)) < 1e-6);
    CHECK(rel(distance(MetricKind::Cosine, x, y), testing::ref_distance_cos(x.data(), y.data(), 27)) < 1e-6);
    CHECK(rel(distance(MetricKind::KLDivergence, x, y), testing::ref_distance_kl(x.data(), y.data(), 27)) < 1e-6);
  }
}

TEST_CASE("normalize_for_kl") {
  SUBCASE("symmetric input") {
    const auto p = normalize_for_kl(v({0, 0}));
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
  }
  SUBCASE("large logits do not overflow") {
    const auto p = normalize_for_kl(v({1000, 0}));
    CHECK(std::isfinite(p[0]));
    CHECK(std::abs(p[0] - 1.0) <= 1e-6);
    CHECK(std::isfinite(distance(MetricKind::KLDivergence, v({1000, 0}), v({0, 1000}))));
  }
  SUBCASE("sums to one and strictly positive") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
      const Matrix m = testing::random_matrix(rng, 1, 10, -5, 5);
      const auto p = normalize_for_kl({m.data(), 10});
      const double sum = std::accumulate(p.begin(), p.end(), 0.0);
      CHECK(sum >= 1.0 - 1e-6);
      CHECK(sum <= 1.0 + 1e-6);
      for (double pi : p) CHECK(pi > 0.0);
    }
  }
}

TEST_CASE("build_ssm small cases") {
  FilterSet fs{Matrix(2, 2)};
  fs.vectors << 0, 0, 3, 4;
  const auto s = build_ssm(fs, MetricKind::L2);
  CHECK(s(0, 0) == 0.0f);
  CHECK(s(0, 1) == 5.0f);
  CHECK(s(1, 0) == 5.0f);
  CHECK(s(1, 1) == 0.0f);

  FilterSet same{Matrix(2, 3)};
  same.vectors << 0.3f, -1.2f, 2.0f, 0.3f, -1.2f, 2.0f;
  for (auto m : {MetricKind::L2, MetricKind::Cosine, MetricKind::Cityblock}) {
    CHECK(build_ssm(same, m).values.isZero(0.0));
  }

  FilterSet one{Matrix::Ones(1, 4)};
  CHECK_THROWS_AS(build_ssm(one, MetricKind::L2), TooFewFiltersError);
}

TEST_CASE("build_ssm matches a nested-loop reference") {
  std::mt19937_64 rng(9);
  const FilterSet fs{testing::random_matrix(rng, 8, 27)};
  const auto s = build_ssm(fs, MetricKind::Cityblock);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j) {
      const long double ref = testing::ref_distance_l1(fs.vectors.row(i).data(), fs.vectors.row(j).data(), 27);
      CHECK(std::abs(s(i, j) - static_cast<double>(ref)) <= 1e-6 * std::max(1.0L, ref));
    }
}

TEST_CASE("SSM scale properties") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    const FilterSet fs{testing::random_matrix(rng, 6, 12)};
    const float c = 2.5f;
    const FilterSet scaled{fs.vectors * c};
    for (auto m : {MetricKind::L2, MetricKind::Cityblock}) {
      const auto a = build_ssm(fs, m), b = build_ssm(scaled, m);
      for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 6; ++j) {
          if (i == j) continue;
          CHECK(std::abs(b(i, j) - c * a(i, j)) <= 1e-6 * std::abs(c * a(i, j)) + 1e-6);
        }
    }
    // Cosine is invariant under per-filter positive scaling.
    Matrix per = fs.vectors;
    for (Index i = 0; i < 6; ++i) per.row(i) *= static_cast<float>(0.5 + i);
    const auto a = build_ssm(fs, MetricKind::Cosine), b = build_ssm(FilterSet{per}, MetricKind::Cosine);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("KL SSM is not assumed symmetric but has a zero diagonal") {
  std::mt19937_64 rng(17);
  const FilterSet fs{testing::random_matrix(rng, 5, 9, -3, 3)};
  const auto s = build_ssm(fs, MetricKind::KLDivergence);
  for (Index i = 0; i < 5; ++i) CHECK(s(i, i) <= 1e-9);
  bool asymmetric = false;
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j) {
      CHECK(s(i, j) >= -1e-9);
      CHECK(s(i, j) == static_cast<float>(distance(MetricKind::KLDivergence,
                                                   {fs.vectors.row(i).data(), 9}, {fs.vectors.row(j).data(), 9})));
      if (std::abs(s(i, j) - s(j, i)) > 1e-6) asymmetric = true;
    }
  CHECK(asymmetric);
}
