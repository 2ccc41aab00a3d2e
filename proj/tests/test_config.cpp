#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "ssmprune/config.hpp"
#include "ssmprune/error.hpp"

using namespace ssmprune;

namespace {

std::size_t error_line(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  FAIL("parsed without error");
  return 0;
}

}  // namespace

TEST_CASE("defaults") {
  const RunConfig c = parse_run_config("");
  CHECK(c.train.epochs == 30);
  CHECK(c.prune.ratio == doctest::Approx(0.10));
  CHECK(c.prune.method == RankMethod::Area);
  CHECK(c.prune.metric == MetricKind::L2);
  CHECK(c.prune.min_filters == 4);
  CHECK(c.prune.prune_epochs == 5);
  CHECK(c.prune_enabled);
  CHECK(c.model.conv_channels == std::vector<Index>{32, 32, 64, 64});
}

TEST_CASE("parses every section") {
  const RunConfig c = parse_run_config(R"(
# comment
[train]
epochs = 12
batch_size = 64
learning_rate = 0.01
lr_milestones = 4, 8
augment_flip = yes
seed = 99

[prune]
ratio = 0.2   # trailing comment
method = GREEDY
metric = cosine
min_filters = 2
pair_dedup = false
ratio_base = original
prune_epochs = 3

[data]
path = /tmp/cifar
train_files = a.bin, b.bin
subset = 512

[model]
conv_channels = 8, 8, 16
dense_units = 32

[output]
dir = out/run1
)");
  CHECK(c.train.epochs == 12);
  CHECK(c.train.batch_size == 64);
  CHECK(c.train.learning_rate == doctest::Approx(0.01));
  CHECK(c.train.lr_milestones == std::vector<int>{4, 8});
  CHECK(c.train.augment_flip);
  CHECK(c.train.seed == 99);
  CHECK(c.prune.ratio == doctest::Approx(0.2));
  CHECK(c.prune.method == RankMethod::Greedy);
  CHECK(c.prune.metric == MetricKind::Cosine);
  CHECK(c.prune.min_filters == 2);
  CHECK_FALSE(c.prune.pair_dedup);
  CHECK(c.prune.ratio_base == RatioBase::Original);
  CHECK(c.prune.prune_epochs == 3);
  CHECK(c.data.dir == "/tmp/cifar");
  CHECK(c.data.train_files == std::vector<std::string>{"a.bin", "b.bin"});
  CHECK(c.data.subset == 512);
  CHECK(c.model.conv_channels == std::vector<Index>{8, 8, 16});
  CHECK(c.model.dense_units == 32);
  CHECK(c.output_dir == "out/run1");

  const TrainConfig t = c.resolved_train();
  REQUIRE(t.prune.has_value());
  CHECK(t.prune->ratio == doctest::Approx(0.2));
}

TEST_CASE("disabled pruning resolves to a baseline") {
  const RunConfig c = parse_run_config("[prune]\nenabled = false\n");
  CHECK_FALSE(c.resolved_train().prune.has_value());
}

TEST_CASE("errors carry the offending line") {
  CHECK(error_line("[train]\nepochs = 3\nepoch = 4\n") == 3);
  CHECK(error_line("[trian]\n") == 1);
  CHECK(error_line("epochs = 3\n") == 1);
  CHECK(error_line("[prune]\n\nmetric = hamming\n") == 3);
  CHECK(error_line("[prune]\nratio = 0.1x\n") == 2);
  CHECK(error_line("[train]\naugment_flip = maybe\n") == 2);
  CHECK(error_line("[train]\nepochs 3\n") == 2);
  CHECK(error_line("[model\n") == 1);
}

TEST_CASE("cross-field validation") {
  RunConfig c;
  CHECK_NOTHROW(validate(c));
  c.prune.prune_epochs = 40;
  CHECK_THROWS(validate(c));
  c = {};
  c.prune.ratio = 1.5;
  CHECK_THROWS(validate(c));
  c = {};
  c.model.dense_units = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("canonical text round trips") {
  RunConfig c;
  c.train.epochs = 7;
  c.train.learning_rate = 0.123456789;
  c.train.lr_milestones = {2, 5};
  c.prune.ratio = 0.15;
  c.prune.metric = MetricKind::KLDivergence;
  c.prune.method = RankMethod::Greedy;
  c.prune_enabled = false;
  c.data.dir = "some dir";
  c.data.test_files = {"t1.bin", "t2.bin"};
  c.model.conv_channels = {4, 6};
  c.output_dir = "x/y";
  const std::string text = format_run_config(c);
  const RunConfig back = parse_run_config(text);
  CHECK(format_run_config(back) == text);
  CHECK(back.train.learning_rate == c.train.learning_rate);
  CHECK(back.prune.metric == MetricKind::KLDivergence);
  CHECK(back.data.dir == c.data.dir);
  CHECK_FALSE(back.prune_enabled);
  // every known key appears once
  for (const auto& k : config_keys()) CHECK(text.find("\n" + k.key + " = ") != std::string::npos);
}
