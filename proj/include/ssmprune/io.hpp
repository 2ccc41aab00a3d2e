#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssmprune/dataset.hpp"
#include "ssmprune/model.hpp"

namespace ssmprune {

// Checkpoint layout, all integers little-endian:
//
//   "SSMP" | u32 version (=1) | u32 C, H, W | u32 layer_count
//   per layer:  u8 kind | u16 name_len | name bytes | kind parameters (u32 each)
//               conv: out, in, kh, kw, stride, padding, initial_out
//               maxpool: window, stride
//               dense: out, in
//   u32 tensor_count
//   per tensor: u16 name_len | name | u8 rank | u32 dims[rank] | f32 data
//   u32 CRC-32 of every preceding byte
//
// Tensors are "<layer>.weight" and "<layer>.bias" for every conv and dense
// layer, in layer order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// CRC-32 (IEEE 802.3, reflected, init/xorout 0xFFFFFFFF).
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_checkpoint(const ModelGraph& g);
ModelGraph decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const ModelGraph& g, const std::filesystem::path& path);
ModelGraph load_checkpoint(const std::filesystem::path& path);

inline constexpr Index kCifarRecordBytes = 3073;
inline constexpr Index kCifarClasses = 10;

struct DatasetSpec {
  std::filesystem::path dir;
  std::vector<std::string> train_files{"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin",
                                       "data_batch_4.bin", "data_batch_5.bin"};
  std::vector<std::string> test_files{"test_batch.bin"};
  /// 0 = every record.
  Index subset = 0;
  Index test_subset = 0;
  std::uint64_t seed = 0;
};

/// One CIFAR-10 binary batch: label byte then 1024 R, 1024 G, 1024 B bytes
/// per record. Pixels are scaled to [0,1].
Dataset read_cifar_file(const std::filesystem::path& path);

/// Loads train/test, draws the seeded subsets (kept in file order) and
/// normalizes both with per-channel statistics of the loaded training set.
std::pair<Dataset, Dataset> load_cifar10(const DatasetSpec& spec);

/// Seeded choice of `k` of `n` indices, returned ascending. k == 0 or
/// k >= n selects everything.
std::vector<Index> subset_indices(Index n, Index k, std::uint64_t seed);

struct SyntheticSpec {
  Index train_records = 5000;
  Index test_records = 1000;
  /// Per-pixel Gaussian noise, in units of full intensity.
  double noise = 0.3;
  std::uint64_t seed = 1;
};

/// Writes `data_batch_1.bin` and `test_batch.bin` in the CIFAR-10 binary
/// record format. Each of the 10 classes is an oriented grating over one of two
/// tints, with random phase, frequency, contrast and brightness jitter plus
/// pixel noise.
void write_synthetic_cifar(const std::filesystem::path& dir, const SyntheticSpec& spec);

}  // namespace ssmprune
