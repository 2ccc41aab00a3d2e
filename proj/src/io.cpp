#include "ssmprune/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <random>

#include "ssmprune/error.hpp"

namespace ssmprune {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'S', 'S', 'M', 'P'};

constexpr std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int s = 0; s < 16; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void count(Index v) {
    if (v < 0 || v > static_cast<Index>(UINT32_MAX)) throw RangeError("value does not fit u32");
    u32(static_cast<std::uint32_t>(v));
  }
  void str(const std::string& s) {
    if (s.size() > UINT16_MAX) throw RangeError("name too long for checkpoint");
    u16(static_cast<std::uint16_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void floats(const float* p, Index n) {
    for (Index i = 0; i < n; ++i) u32(std::bit_cast<std::uint32_t>(p[i]));
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(in_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }
  Index count() { return static_cast<Index>(u32()); }
  std::string str() {
    const std::uint16_t n = u16();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void floats(float* p, Index n) {
    need(static_cast<std::size_t>(n) * 4);
    for (Index i = 0; i < n; ++i) p[i] = std::bit_cast<float>(u32());
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Kind::Malformed, "checkpoint payload truncated");
    }
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void malformed(const std::string& what) {
  throw CheckpointError(CheckpointError::Kind::Malformed, "malformed checkpoint: " + what);
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::uint8_t b : bytes) c = kCrcTable[(c ^ b) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

std::vector<std::uint8_t> encode_checkpoint(const ModelGraph& g) {
  validate(g);
  Writer w;
  for (auto b : kMagic) w.u8(b);
  w.u32(kCheckpointVersion);
  w.count(g.input.c);
  w.count(g.input.h);
  w.count(g.input.w);
  w.count(static_cast<Index>(g.layers.size()));
  Index tensors = 0;
  for (const auto& l : g.layers) {
    w.u8(static_cast<std::uint8_t>(l.kind()));
    w.str(l.name);
    if (const auto* c = std::get_if<Conv<float>>(&l.op)) {
      const auto& d = c->weight.dims();
      for (Index v : {d.out, d.in, d.kh, d.kw, c->stride, c->padding, c->initial_out}) w.count(v);
      tensors += 2;
    } else if (const auto* p = std::get_if<MaxPool>(&l.op)) {
      w.count(p->window);
      w.count(p->stride);
    } else if (const auto* d = std::get_if<Dense<float>>(&l.op)) {
      w.count(d->weight.rows());
      w.count(d->weight.cols());
      tensors += 2;
    }
  }
  w.count(tensors);
  const auto tensor = [&](const std::string& name, std::initializer_list<Index> dims, const float* data) {
    w.str(name);
    w.u8(static_cast<std::uint8_t>(dims.size()));
    Index n = 1;
    for (Index d : dims) {
      w.count(d);
      n *= d;
    }
    w.floats(data, n);
  };
  for (const auto& l : g.layers) {
    if (const auto* c = std::get_if<Conv<float>>(&l.op)) {
      const auto& d = c->weight.dims();
      tensor(l.name + ".weight", {d.out, d.in, d.kh, d.kw}, c->weight.data());
      tensor(l.name + ".bias", {d.out}, c->bias.data());
    } else if (const auto* d = std::get_if<Dense<float>>(&l.op)) {
      tensor(l.name + ".weight", {d->weight.rows(), d->weight.cols()}, d->weight.data());
      tensor(l.name + ".bias", {d->bias.size()}, d->bias.data());
    }
  }
  auto& bytes = w.bytes();
  const std::uint32_t crc = crc32(bytes);
  w.u32(crc);
  return std::move(bytes);
}

ModelGraph decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw CheckpointError(CheckpointError::Kind::BadMagic, "not a checkpoint (bad magic)");
  }
  if (bytes.size() < kMagic.size() + 8) {
    throw CheckpointError(CheckpointError::Kind::BadChecksum, "checkpoint truncated (checksum mismatch)");
  }
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (crc32(body) != tail.u32()) {
    throw CheckpointError(CheckpointError::Kind::BadChecksum, "checkpoint checksum mismatch");
  }

  Reader r(body.subspan(kMagic.size()));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::UnsupportedVersion,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  ModelGraph g;
  g.input.c = r.count();
  g.input.h = r.count();
  g.input.w = r.count();
  const Index layers = r.count();
  for (Index i = 0; i < layers; ++i) {
    const std::uint8_t kind = r.u8();
    std::string name = r.str();
    switch (static_cast<LayerKind>(kind)) {
      case LayerKind::Conv: {
        Dims4 d;
        d.out = r.count();
        d.in = r.count();
        d.kh = r.count();
        d.kw = r.count();
        Conv<float> c;
        c.stride = r.count();
        c.padding = r.count();
        c.initial_out = r.count();
        if (d.out < 1 || d.in < 1 || d.kh < 1 || d.kw < 1) malformed("zero conv dimension");
        c.weight = Tensor4<float>(d);
        c.bias = Vector::Zero(d.out);
        g.layers.push_back({std::move(name), std::move(c)});
        break;
      }
      case LayerKind::ReLU:
        g.layers.push_back({std::move(name), ReLU{}});
        break;
      case LayerKind::MaxPool: {
        MaxPool p;
        p.window = r.count();
        p.stride = r.count();
        g.layers.push_back({std::move(name), p});
        break;
      }
      case LayerKind::Flatten:
        g.layers.push_back({std::move(name), Flatten{}});
        break;
      case LayerKind::Dense: {
        const Index out = r.count();
        const Index in = r.count();
        g.layers.push_back({std::move(name), Dense<float>{Matrix::Zero(out, in), Vector::Zero(out)}});
        break;
      }
      case LayerKind::SoftmaxXent:
        g.layers.push_back({std::move(name), SoftmaxXent{}});
        break;
      default:
        malformed("unknown layer kind " + std::to_string(kind));
    }
  }

  const Index tensors = r.count();
  Index expected = 0;
  for (const auto& l : g.layers) {
    if (l.kind() == LayerKind::Conv || l.kind() == LayerKind::Dense) expected += 2;
  }
  if (tensors != expected) malformed("tensor count does not match topology");

  const auto read_into = [&](const std::string& want, std::initializer_list<Index> dims, float* dst) {
    const std::string name = r.str();
    if (name != want) malformed("expected tensor '" + want + "', found '" + name + "'");
    const std::uint8_t rank = r.u8();
    if (rank != dims.size()) malformed("rank mismatch for '" + name + "'");
    Index n = 1;
    for (Index d : dims) {
      if (r.count() != d) malformed("shape mismatch for '" + name + "'");
      n *= d;
    }
    r.floats(dst, n);
  };
  for (auto& l : g.layers) {
    if (auto* c = std::get_if<Conv<float>>(&l.op)) {
      const auto d = c->weight.dims();
      read_into(l.name + ".weight", {d.out, d.in, d.kh, d.kw}, c->weight.data());
      read_into(l.name + ".bias", {d.out}, c->bias.data());
    } else if (auto* d = std::get_if<Dense<float>>(&l.op)) {
      read_into(l.name + ".weight", {d->weight.rows(), d->weight.cols()}, d->weight.data());
      read_into(l.name + ".bias", {d->bias.size()}, d->bias.data());
    }
  }
  if (!r.done()) malformed("trailing bytes after tensors");
  try {
    validate(g);
  } catch (const StructuralError& e) {
    malformed(e.what());
  }
  return g;
}

void save_checkpoint(const ModelGraph& g, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(g);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

ModelGraph load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_checkpoint(bytes);
}

Dataset read_cifar_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("missing dataset file '" + path.string() + "'");
  const auto bytes = read_file(path);
  if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
    throw DataError("'" + path.string() + "' is " + std::to_string(bytes.size()) +
                    " bytes, not a whole number of 3073-byte records");
  }
  const Index n = static_cast<Index>(bytes.size()) / kCifarRecordBytes;
  Dataset d;
  d.shape = {3, 32, 32};
  d.images.resize(n, 3072);
  d.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const std::uint8_t* rec = bytes.data() + i * kCifarRecordBytes;
    if (rec[0] >= kCifarClasses) {
      throw DataError("record " + std::to_string(i) + " of '" + path.string() + "' has label " +
                      std::to_string(rec[0]));
    }
    d.labels[static_cast<std::size_t>(i)] = rec[0];
    float* px = d.images.row(i).data();
    for (Index k = 0; k < 3072; ++k) px[k] = static_cast<float>(rec[1 + k]) / 255.0f;
  }
  return d;
}

std::vector<Index> subset_indices(Index n, Index k, std::uint64_t seed) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (k <= 0 || k >= n) return idx;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

Dataset load_files(const std::filesystem::path& dir, const std::vector<std::string>& files) {
  if (files.empty()) throw DataError("no dataset files listed");
  std::vector<Dataset> parts;
  Index total = 0;
  for (const auto& f : files) {
    parts.push_back(read_cifar_file(dir / f));
    total += parts.back().size();
  }
  Dataset all;
  all.images.resize(total, 3072);
  Index at = 0;
  for (auto& p : parts) {
    all.images.middleRows(at, p.size()) = p.images;
    all.labels.insert(all.labels.end(), p.labels.begin(), p.labels.end());
    at += p.size();
  }
  return all;
}

Dataset take(const Dataset& d, const std::vector<Index>& idx) {
  Dataset out;
  out.shape = d.shape;
  out.images = d.images(idx, Eigen::all);
  for (Index i : idx) out.labels.push_back(d.labels[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

std::pair<Dataset, Dataset> load_cifar10(const DatasetSpec& spec) {
  Dataset train = load_files(spec.dir, spec.train_files);
  Dataset test = load_files(spec.dir, spec.test_files);
  if (spec.subset > 0) train = take(train, subset_indices(train.size(), spec.subset, spec.seed));
  if (spec.test_subset > 0) {
    test = take(test, subset_indices(test.size(), spec.test_subset, spec.seed + 1));
  }
  const auto stats = channel_stats(train);
  normalize(train, stats);
  normalize(test, stats);
  return {std::move(train), std::move(test)};
}

namespace {

std::vector<std::uint8_t> synth_records(Index n, double noise, std::mt19937_64& rng) {
  // Five orientations x two tints.
  constexpr std::array<std::array<double, 3>, 2> kTint{{{0.62, 0.48, 0.34}, {0.34, 0.48, 0.62}}};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n * kCifarRecordBytes));
  for (Index i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % kCifarClasses);
    const double theta = std::numbers::pi * (label % 5) / 5.0 + (unit(rng) - 0.5) * 0.35;
    const double freq = 0.08 + 0.07 * unit(rng);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    const double contrast = 0.2 + 0.15 * unit(rng);
    const double brightness = 0.8 + 0.4 * unit(rng);
    const auto& tint = kTint[static_cast<std::size_t>(label / 5)];
    std::uint8_t* rec = out.data() + i * kCifarRecordBytes;
    rec[0] = static_cast<std::uint8_t>(label);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
          const double wave = std::sin(2.0 * std::numbers::pi * freq *
                                           (x * std::cos(theta) + y * std::sin(theta)) + phase);
          double v = brightness * tint[c] + contrast * wave + noise * gauss(rng);
          v = std::clamp(v, 0.0, 1.0);
          rec[1 + c * 1024 + y * 32 + x] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
      }
    }
  }
  return out;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

void write_synthetic_cifar(const std::filesystem::path& dir, const SyntheticSpec& spec) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(spec.seed);
  write_bytes(dir / "data_batch_1.bin", synth_records(spec.train_records, spec.noise, rng));
  write_bytes(dir / "test_batch.bin", synth_records(spec.test_records, spec.noise, rng));
}

}  // namespace ssmprune
