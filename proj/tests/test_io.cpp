#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "ssmprune/engine.hpp"
#include "ssmprune/error.hpp"
#include "ssmprune/io.hpp"
#include "testing.hpp"

using namespace ssmprune;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("ssmprune_test_io_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(p, std::ios::binary);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> cifar_records(const std::vector<std::uint8_t>& labels, std::uint8_t fill) {
  std::vector<std::uint8_t> out;
  for (auto l : labels) {
    out.push_back(l);
    out.insert(out.end(), 3072, fill);
  }
  return out;
}

CheckpointError::Kind decode_error(std::span<const std::uint8_t> bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  FAIL("decode succeeded");
  return CheckpointError::Kind::Malformed;
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) b[at + k] = static_cast<std::uint8_t>(v >> (8 * k));
}

void reseal(std::vector<std::uint8_t>& b) {
  const auto crc = crc32(std::span(b.data(), b.size() - 4));
  put_u32(b, b.size() - 4, crc);
}

}  // namespace

TEST_CASE("crc32 check value") {
  const std::string s = "123456789";
  CHECK(crc32(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())) == 0xCBF43926u);
  CHECK(crc32({}) == 0u);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const ModelGraph g = vgg_mini({}, 3);
  const auto bytes = encode_checkpoint(g);
  CHECK(std::memcmp(bytes.data(), "SSMP", 4) == 0);
  const ModelGraph back = decode_checkpoint(bytes);
  CHECK(back == g);
  CHECK(encode_checkpoint(back) == bytes);

  TempDir dir("roundtrip");
  save_checkpoint(g, dir.path / "m.ssmp");
  CHECK(load_checkpoint(dir.path / "m.ssmp") == g);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "missing.ssmp"), IoError);
}

TEST_CASE("pruned and random graphs round trip") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 40; ++t) {
    ModelGraph g = testing::random_chain(rng);
    if (t % 2) {
      PruneConfig p;
      p.ratio = 0.3;
      p.min_filters = 2;
      g = prune_step(g, p, 1).graph;
    }
    const auto bytes = encode_checkpoint(g);
    const ModelGraph back = decode_checkpoint(bytes);
    CHECK(back == g);
    // initial_out survives so ratio_base=original still works after reload
    const auto names = conv_layer_names(g);
    for (const auto& n : names) {
      CHECK(std::get<Conv<float>>(back.layers[*back.find(n)].op).initial_out ==
            std::get<Conv<float>>(g.layers[*g.find(n)].op).initial_out);
    }
  }
}

TEST_CASE("corruption is detected") {
  const ModelGraph g = vgg_mini({{3, 8, 8}, {4, 4}, 8, 10}, 4);
  const auto good = encode_checkpoint(g);

  SUBCASE("truncation") {
    for (std::size_t cut : {std::size_t{8}, good.size() / 2, good.size() - 1}) {
      const std::span<const std::uint8_t> part(good.data(), cut);
      CHECK(decode_error(part) == CheckpointError::Kind::BadChecksum);
    }
    CHECK(decode_error(std::span(good.data(), 2)) != CheckpointError::Kind::UnsupportedVersion);
  }
  SUBCASE("single byte flips") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> pos(4, good.size() - 1);
    std::uniform_int_distribution<int> bit(0, 7);
    for (int t = 0; t < 100; ++t) {
      auto bad = good;
      bad[pos(rng)] ^= static_cast<std::uint8_t>(1u << bit(rng));
      CHECK(decode_error(bad) == CheckpointError::Kind::BadChecksum);
    }
  }
  SUBCASE("bad magic") {
    auto bad = good;
    bad[0] = 'X';
    CHECK(decode_error(bad) == CheckpointError::Kind::BadMagic);
  }
  SUBCASE("future version with a valid checksum") {
    auto bad = good;
    put_u32(bad, 4, 2);
    reseal(bad);
    CHECK(decode_error(bad) == CheckpointError::Kind::UnsupportedVersion);
  }
  SUBCASE("valid checksum over inconsistent content") {
    auto bad = good;
    put_u32(bad, 16, 0xFFFFu);  // layer count
    reseal(bad);
    CHECK(decode_error(bad) == CheckpointError::Kind::Malformed);
  }
}

TEST_CASE("cifar batch reader") {
  TempDir dir("cifar");
  write_bytes(dir.path / "ok.bin", cifar_records({0, 9, 3}, 255));
  const Dataset d = read_cifar_file(dir.path / "ok.bin");
  CHECK(d.size() == 3);
  CHECK(d.images.cols() == 3072);
  CHECK(d.labels == std::vector<std::int32_t>{0, 9, 3});
  CHECK(d.images.minCoeff() == 1.0f);

  auto ragged = cifar_records({1, 2}, 0);
  ragged.pop_back();
  write_bytes(dir.path / "ragged.bin", ragged);
  CHECK_THROWS_AS(read_cifar_file(dir.path / "ragged.bin"), DataError);

  write_bytes(dir.path / "label.bin", cifar_records({1, 10}, 0));
  CHECK_THROWS_AS(read_cifar_file(dir.path / "label.bin"), DataError);

  CHECK_THROWS_AS(read_cifar_file(dir.path / "absent.bin"), IoError);
}

TEST_CASE("channel layout and normalization") {
  TempDir dir("norm");
  // record 0: R=0, G=0, B=0; record 1: R=255, G=51, B=0
  std::vector<std::uint8_t> bytes;
  bytes.push_back(0);
  bytes.insert(bytes.end(), 3072, 0);
  bytes.push_back(1);
  bytes.insert(bytes.end(), 1024, 255);
  bytes.insert(bytes.end(), 1024, 51);
  bytes.insert(bytes.end(), 1024, 0);
  write_bytes(dir.path / "train.bin", bytes);
  write_bytes(dir.path / "test.bin", cifar_records({4}, 0));

  DatasetSpec spec;
  spec.dir = dir.path;
  spec.train_files = {"train.bin"};
  spec.test_files = {"test.bin"};
  const auto [train, test] = load_cifar10(spec);
  // R: mean .5, std .5; G: mean .1, std .1; B: constant -> std guarded
  CHECK(train.images(0, 0) == doctest::Approx(-1.0));
  CHECK(train.images(1, 0) == doctest::Approx(1.0));
  CHECK(train.images(0, 1024) == doctest::Approx(-1.0));
  CHECK(train.images(1, 1024) == doctest::Approx(1.0));
  CHECK(std::isfinite(train.images(0, 2048)));
  // an all-zero test image maps to -mean/std per channel
  CHECK(test.images(0, 5) == doctest::Approx(-1.0));
  CHECK(test.images(0, 1030) == doctest::Approx(-1.0));
}

TEST_CASE("seeded subsets are stable and ordered") {
  const auto a = subset_indices(10000, 512, 7);
  CHECK(a.size() == 512);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
  CHECK(a == subset_indices(10000, 512, 7));
  CHECK(a != subset_indices(10000, 512, 8));
  CHECK(subset_indices(5, 0, 1).size() == 5);
  CHECK(subset_indices(5, 9, 1).size() == 5);
}

TEST_CASE("synthetic data is readable and deterministic") {
  TempDir dir("synth");
  SyntheticSpec s;
  s.train_records = 200;
  s.test_records = 50;
  write_synthetic_cifar(dir.path / "a", s);
  write_synthetic_cifar(dir.path / "b", s);
  const Dataset tr = read_cifar_file(dir.path / "a" / "data_batch_1.bin");
  const Dataset te = read_cifar_file(dir.path / "a" / "test_batch.bin");
  CHECK(tr.size() == 200);
  CHECK(te.size() == 50);
  std::vector<int> hist(10, 0);
  for (auto l : tr.labels) ++hist[l];
  for (int h : hist) CHECK(h == 20);
  CHECK(tr.images == read_cifar_file(dir.path / "b" / "data_batch_1.bin").images);
}
