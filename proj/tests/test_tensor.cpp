#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <random>

#include "ssmprune/error.hpp"
#include "ssmprune/tensor.hpp"
#include "testing.hpp"

using namespace ssmprune;

TEST_CASE("flatten_filters on a single-element tensor") {
  const std::vector<float> data{3.5f};
  const FilterSet fs = flatten_filters(Tensor4<float>({1, 1, 1, 1}, data));
  CHECK(fs.n() == 1);
  CHECK(fs.dim() == 1);
  CHECK(fs.vectors(0, 0) == 3.5f);
}

TEST_CASE("flatten_filters keeps (in, kh, kw) row-major order") {
  std::vector<float> data(8);
  std::iota(data.begin(), data.end(), 1.0f);
  const Tensor4<float> w({2, 1, 2, 2}, data);
  const FilterSet fs = flatten_filters(w);
  REQUIRE(fs.n() == 2);
  REQUIRE(fs.dim() == 4);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 4; ++j) CHECK(fs.vectors(i, j) == static_cast<float>(i * 4 + j + 1));
  CHECK(w(1, 0, 1, 0) == 7.0f);

  const Tensor4<float> back = unflatten_filters(fs, {2, 1, 2, 2});
  CHECK(std::equal(back.flat().begin(), back.flat().end(), data.begin()));
}

TEST_CASE("unflatten_filters rejects a dimension mismatch") {
  FilterSet fs{Matrix::Zero(1, 5)};
  CHECK_THROWS_AS(unflatten_filters(fs, {1, 1, 2, 2}), ShapeError);
}

TEST_CASE("Tensor4 rejects zero dims and wrong data length") {
  CHECK_THROWS_AS(Tensor4<float>({0, 1, 1, 1}), ShapeError);
  const std::vector<float> three(3);
  CHECK_THROWS_AS(Tensor4<float>({1, 1, 2, 2}, three), ShapeError);
}

TEST_CASE("flatten/unflatten round-trip is bit-exact over random shapes") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<Index> dim(1, 6);
  std::normal_distribution<float> val(0.0f, 3.0f);
  for (int trial = 0; trial < 100; ++trial) {
    const Dims4 d{dim(rng), dim(rng), dim(rng), dim(rng)};
    std::vector<float> data(static_cast<std::size_t>(d.size()));
    for (float& v : data) v = val(rng);
    const Tensor4<float> w(d, data);
    const Tensor4<float> back = unflatten_filters(flatten_filters(w), d);
    REQUIRE(back == w);
    CHECK(std::memcmp(back.data(), data.data(), data.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("remove_rows") {
  Matrix m(3, 2);
  m << 1, 2, 3, 4, 5, 6;

  SUBCASE("middle row") {
    const std::vector<Index> idx{1};
    Matrix expect(2, 2);
    expect << 1, 2, 5, 6;
    CHECK(remove_rows<float>(m, idx) == expect);
  }
  SUBCASE("empty set is identity") {
    CHECK(remove_rows<float>(m, {}) == m);
  }
  SUBCASE("all rows") {
    const std::vector<Index> idx{0, 1, 2};
    const Matrix r = remove_rows<float>(m, idx);
    CHECK(r.rows() == 0);
    CHECK(r.cols() == 2);
  }
  SUBCASE("out of range and unsorted indices") {
    const std::vector<Index> bad{3};
    CHECK_THROWS_AS(remove_rows<float>(m, bad), RangeError);
    const std::vector<Index> unsorted{2, 0};
    CHECK_THROWS_AS(remove_rows<float>(m, unsorted), RangeError);
  }
}

TEST_CASE("remove_rows keeps surviving rows in order (property)") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Index rows = std::uniform_int_distribution<Index>(1, 20)(rng);
    Matrix m = testing::random_matrix(rng, rows, 3);
    std::vector<Index> drop;
    for (Index i = 0; i < rows; ++i) {
      if (std::bernoulli_distribution(0.3)(rng)) drop.push_back(i);
    }
    const Matrix r = remove_rows<float>(m, drop);
    REQUIRE(r.rows() == rows - static_cast<Index>(drop.size()));
    Index k = 0;
    for (Index i = 0; i < rows; ++i) {
      if (std::find(drop.begin(), drop.end(), i) != drop.end()) continue;
      CHECK(r.row(k++) == m.row(i));
    }
  }
}
