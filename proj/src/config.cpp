#include "ssmprune/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "ssmprune/error.hpp"

namespace ssmprune {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

template <typename T>
T parse_number(std::string_view v, std::size_t line) {
  const std::string s = trim(v);
  T out{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError("invalid number '" + s + "'", line);
  return out;
}

double parse_real(std::string_view v, std::size_t line) {
  const std::string s = trim(v);
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("invalid number '" + s + "'", line);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError("invalid number '" + s + "'", line);
  }
}

bool parse_bool(std::string_view v, std::size_t line) {
  const std::string s = lower(trim(v));
  if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "off" || s == "no" || s == "0") return false;
  throw ConfigError("invalid boolean '" + s + "'", line);
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss{std::string(v)};
  while (std::getline(ss, cur, ',')) {
    auto t = trim(cur);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) os << (i ? "," : "") << items[i];
  return os.str();
}

std::string real_str(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct KeyHandler {
  ConfigKey name;
  std::function<void(RunConfig&, std::string_view, std::size_t)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<KeyHandler>& handlers() {
  static const std::vector<KeyHandler> table = [] {
    std::vector<KeyHandler> t;
    const auto add = [&](std::string sec, std::string key, auto set, auto get) {
      t.push_back({{std::move(sec), std::move(key)}, set, get});
    };
    add("train", "epochs", [](RunConfig& c, std::string_view v, std::size_t l) { c.train.epochs = parse_number<int>(v, l); },
        [](const RunConfig& c) { return std::to_string(c.train.epochs); });
    add("train", "batch_size", [](RunConfig& c, std::string_view v, std::size_t l) { c.train.batch_size = parse_number<Index>(v, l); },
        [](const RunConfig& c) { return std::to_string(c.train.batch_size); });
    add("train", "learning_rate", [](RunConfig& c, std::string_view v, std::size_t l) { c.train.learning_rate = parse_real(v, l); },
        [](const RunConfig& c) { return real_str(c.train.learning_rate); });
    add("train", "momentum", [](RunConfig& c, std::string_view v, std::size_t l) { c.train.momentum = parse_real(v, l); },
        [](const RunConfig& c) { return real_str(c.train.momentum); });
    add("train", "weight_decay", [](RunConfig& c, std::string_view v, std::size_t l) { c.train.weight_decay = parse_real(v, l); },
        [](const RunConfig& c) { return real_str(c.train.weight_decay); });
    add("train", "lr_milestones",
        [](RunConfig& c, std::string_view v, std::size_t l) {
          c.train.lr_milestones.clear();
          for (const auto& s : split_list(v)) c.train.lr_milestones.push_back(parse_number<int>(s, l));
        },
        [](const RunConfig& c) { return join(c.train.lr_milestones); });
    add("train", "lr_gamma", [](RunConfig& c, std::string_view v, std::size_t l) { c.train.lr_gamma = parse_real(v, l); },
        [](const RunConfig& c) { return real_str(c.train.lr_gamma); });
    add("train", "augment_flip", [](RunConfig& c, std::string_view v, std::size_t l) { c.train.augment_flip = parse_bool(v, l); },
        [](const RunConfig& c) { return std::string(c.train.augment_flip ? "true" : "false"); });
    add("train", "seed", [](RunConfig& c, std::string_view v, std::size_t l) { c.train.seed = parse_number<std::uint64_t>(v, l); },
        [](const RunConfig& c) { return std::to_string(c.train.seed); });

    add("prune", "enabled", [](RunConfig& c, std::string_view v, std::size_t l) { c.prune_enabled = parse_bool(v, l); },
        [](const RunConfig& c) { return std::string(c.prune_enabled ? "true" : "false"); });
    add("prune", "ratio", [](RunConfig& c, std::string_view v, std::size_t l) { c.prune.ratio = parse_real(v, l); },
        [](const RunConfig& c) { return real_str(c.prune.ratio); });
    add("prune", "method",
        [](RunConfig& c, std::string_view v, std::size_t l) {
          try {
            c.prune.method = parse_method(trim(v));
          } catch (const ConfigError& e) {
            throw ConfigError(e.what(), l);
          }
        },
        [](const RunConfig& c) { return to_string(c.prune.method); });
    add("prune", "metric",
        [](RunConfig& c, std::string_view v, std::size_t l) {
          try {
            c.prune.metric = parse_metric(trim(v));
          } catch (const ConfigError& e) {
            throw ConfigError(e.what(), l);
          }
        },
        [](const RunConfig& c) { return to_string(c.prune.metric); });
    add("prune", "min_filters", [](RunConfig& c, std::string_view v, std::size_t l) { c.prune.min_filters = parse_number<Index>(v, l); },
        [](const RunConfig& c) { return std::to_string(c.prune.min_filters); });
    add("prune", "pair_dedup", [](RunConfig& c, std::string_view v, std::size_t l) { c.prune.pair_dedup = parse_bool(v, l); },
        [](const RunConfig& c) { return std::string(c.prune.pair_dedup ? "true" : "false"); });
    add("prune", "ratio_base",
        [](RunConfig& c, std::string_view v, std::size_t l) {
          try {
            c.prune.ratio_base = parse_ratio_base(trim(v));
          } catch (const ConfigError& e) {
            throw ConfigError(e.what(), l);
          }
        },
        [](const RunConfig& c) { return to_string(c.prune.ratio_base); });
    add("prune", "prune_epochs", [](RunConfig& c, std::string_view v, std::size_t l) { c.prune.prune_epochs = parse_number<int>(v, l); },
        [](const RunConfig& c) { return std::to_string(c.prune.prune_epochs); });

    add("data", "path", [](RunConfig& c, std::string_view v, std::size_t) { c.data.dir = trim(v); },
        [](const RunConfig& c) { return c.data.dir.string(); });
    add("data", "train_files", [](RunConfig& c, std::string_view v, std::size_t) { c.data.train_files = split_list(v); },
        [](const RunConfig& c) { return join(c.data.train_files); });
    add("data", "test_files", [](RunConfig& c, std::string_view v, std::size_t) { c.data.test_files = split_list(v); },
        [](const RunConfig& c) { return join(c.data.test_files); });
    add("data", "subset", [](RunConfig& c, std::string_view v, std::size_t l) { c.data.subset = parse_number<Index>(v, l); },
        [](const RunConfig& c) { return std::to_string(c.data.subset); });
    add("data", "test_subset", [](RunConfig& c, std::string_view v, std::size_t l) { c.data.test_subset = parse_number<Index>(v, l); },
        [](const RunConfig& c) { return std::to_string(c.data.test_subset); });

    add("model", "conv_channels",
        [](RunConfig& c, std::string_view v, std::size_t l) {
          c.model.conv_channels.clear();
          for (const auto& s : split_list(v)) c.model.conv_channels.push_back(parse_number<Index>(s, l));
          if (c.model.conv_channels.empty()) throw ConfigError("conv_channels is empty", l);
        },
        [](const RunConfig& c) { return join(c.model.conv_channels); });
    add("model", "dense_units", [](RunConfig& c, std::string_view v, std::size_t l) { c.model.dense_units = parse_number<Index>(v, l); },
        [](const RunConfig& c) { return std::to_string(c.model.dense_units); });

    add("output", "dir", [](RunConfig& c, std::string_view v, std::size_t) { c.output_dir = trim(v); },
        [](const RunConfig& c) { return c.output_dir.string(); });
    return t;
  }();
  return table;
}

}  // namespace

TrainConfig RunConfig::resolved_train() const {
  TrainConfig t = train;
  if (prune_enabled) {
    t.prune = prune;
    t.prune->seed = train.seed;
  } else {
    t.prune.reset();
  }
  return t;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& h : handlers()) k.push_back(h.name);
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig& cfg, std::string_view section, std::string_view key,
                      std::string_view value, std::size_t line) {
  const KeyHandler* found = nullptr;
  for (const auto& h : handlers()) {
    if (h.name.key == key && (section.empty() || h.name.section == section)) {
      found = &h;
      break;
    }
  }
  if (!found) {
    const std::string where = section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
    throw ConfigError("unknown key '" + where + "'", line);
  }
  found->set(cfg, value, line);
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::string section;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section header", line);
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      const bool known = std::any_of(config_keys().begin(), config_keys().end(),
                                     [&](const ConfigKey& k) { return k.section == section; });
      if (!known) throw ConfigError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    if (section.empty()) throw ConfigError("key outside of a [section]", line);
    set_config_value(cfg, section, trim(std::string_view(s).substr(0, eq)),
                     std::string_view(s).substr(eq + 1), line);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string format_run_config(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& h : handlers()) {
    if (h.name.section != section) {
      if (!section.empty()) os << "\n";
      section = h.name.section;
      os << "[" << section << "]\n";
    }
    os << h.name.key << " = " << h.get(cfg) << "\n";
  }
  return os.str();
}

void validate(const RunConfig& cfg) {
  try {
    validate(cfg.resolved_train());
  } catch (const RangeError& e) {
    throw ConfigError(e.what());
  }
  if (cfg.prune_enabled) {
    try {
      validate(cfg.prune);
    } catch (const RangeError& e) {
      throw ConfigError(e.what());
    }
  }
  if (cfg.model.dense_units < 1) throw ConfigError("dense_units must be >= 1");
  for (Index c : cfg.model.conv_channels) {
    if (c < 1) throw ConfigError("conv_channels entries must be >= 1");
  }
}

}  // namespace ssmprune
