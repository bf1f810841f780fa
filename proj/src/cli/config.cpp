#include "pgan/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pgan/common/error.hpp"
#include "pgan/data/sampling.hpp"

namespace pgan::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("config key '" + std::string(key) + "': cannot read '" + std::string(value) + "' as " +
                    std::string(expected));
}

template <class T>
T parse_number(std::string_view key, std::string_view text, std::string_view expected) {
  text = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) bad_value(key, text, expected);
  return v;
}

std::size_t parse_size(std::string_view key, std::string_view v) {
  return parse_number<std::size_t>(key, v, "a non-negative integer");
}
double parse_double(std::string_view key, std::string_view v) { return parse_number<double>(key, v, "a number"); }

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T, class F>
std::vector<T> parse_list(std::string_view v, F&& item) {
  std::vector<T> out;
  for (auto part : split(v, ',')) out.push_back(item(part));
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& item, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += item(xs[i]);
  }
  return out;
}

std::string count_str(std::size_t v) { return std::to_string(v); }

struct Field {
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Ordered table of every config key.
const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  using K = std::string_view;
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto size_field = [](std::size_t C::*outer) {
      return Field{[outer](C& c, K k, K v) { c.*outer = parse_size(k, v); },
                   [outer](const C& c) { return std::to_string(c.*outer); }};
    };
    auto train_size = [](std::size_t training::TrainingConfig::*m) {
      return Field{[m](C& c, K k, K v) { c.training.*m = parse_size(k, v); },
                   [m](const C& c) { return std::to_string(c.training.*m); }};
    };
    auto train_double = [](double training::TrainingConfig::*m) {
      return Field{[m](C& c, K k, K v) { c.training.*m = parse_double(k, v); },
                   [m](const C& c) { return fmt(c.training.*m); }};
    };
    auto path_field = [](std::filesystem::path DatasetSpec::*m) {
      return Field{[m](C& c, K, K v) { c.dataset.*m = std::filesystem::path(std::string(trim(v))); },
                   [m](const C& c) { return (c.dataset.*m).generic_string(); }};
    };

    t.push_back({"name", {[](C& c, K, K v) { c.name = std::string(trim(v)); }, [](const C& c) { return c.name; }}});
    t.push_back({"method",
                 {[](C& c, K k, K v) {
                    const std::string m(trim(v));
                    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end()) {
                      bad_value(k, v, "one of pgan, plain, oversample, smote, vanilla_gan, cgan");
                    }
                    c.method = m;
                  },
                  [](const C& c) { return c.method; }}});
    t.push_back({"output.dir",
                 {[](C& c, K, K v) { c.output_dir = std::filesystem::path(std::string(trim(v))); },
                  [](const C& c) { return c.output_dir.generic_string(); }}});
    t.push_back({"checkpoint_every", size_field(&C::checkpoint_every)});

    t.push_back({"dataset.kind",
                 {[](C& c, K k, K v) {
                    const std::string kind(trim(v));
                    if (kind != "blobs" && kind != "rings" && kind != "csv" && kind != "idx") {
                      bad_value(k, v, "one of blobs, rings, csv, idx");
                    }
                    c.dataset.kind = kind;
                  },
                  [](const C& c) { return c.dataset.kind; }}});
    t.push_back({"dataset.counts",
                 {[](C& c, K k, K v) {
                    const auto t = trim(v);
                    if (t == "mnist_protocol") {
                      c.dataset.counts = data::kMnistProtocolCounts;
                    } else if (t == "cifar_protocol") {
                      c.dataset.counts = data::kCifarProtocolCounts;
                    } else {
                      c.dataset.counts = parse_list<std::size_t>(v, [&](K x) { return parse_size(k, x); });
                    }
                  },
                  [](const C& c) { return join(c.dataset.counts, count_str); }}});
    t.push_back({"dataset.centers",
                 {[](C& c, K k, K v) {
                    c.dataset.centers.clear();
                    for (auto point : split(v, ';')) {
                      c.dataset.centers.push_back(parse_list<double>(point, [&](K x) { return parse_double(k, x); }));
                    }
                  },
                  [](const C& c) {
                    return join(
                        c.dataset.centers, [](const std::vector<double>& p) { return join(p, fmt); }, ";");
                  }}});
    t.push_back({"dataset.stddev",
                 {[](C& c, K k, K v) { c.dataset.stddev = parse_double(k, v); },
                  [](const C& c) { return fmt(c.dataset.stddev); }}});
    t.push_back({"dataset.radii",
                 {[](C& c, K k, K v) {
                    c.dataset.radii = parse_list<double>(v, [&](K x) { return parse_double(k, x); });
                  },
                  [](const C& c) { return join(c.dataset.radii, fmt); }}});
    t.push_back({"dataset.noise",
                 {[](C& c, K k, K v) { c.dataset.noise = parse_double(k, v); },
                  [](const C& c) { return fmt(c.dataset.noise); }}});
    t.push_back({"dataset.seed",
                 {[](C& c, K k, K v) { c.dataset.seed = parse_number<std::uint64_t>(k, v, "a seed"); },
                  [](const C& c) { return std::to_string(c.dataset.seed); }}});
    t.push_back({"dataset.path", path_field(&DatasetSpec::path)});
    t.push_back({"dataset.images", path_field(&DatasetSpec::images)});
    t.push_back({"dataset.labels", path_field(&DatasetSpec::labels)});
    t.push_back({"dataset.downscale",
                 {[](C& c, K k, K v) { c.dataset.downscale = parse_size(k, v); },
                  [](const C& c) { return std::to_string(c.dataset.downscale); }}});
    t.push_back({"dataset.classes",
                 {[](C& c, K k, K v) {
                    c.dataset.classes = parse_list<int>(v, [&](K x) { return parse_number<int>(k, x, "a label"); });
                  },
                  [](const C& c) { return join(c.dataset.classes, [](int x) { return std::to_string(x); }); }}});

    using T = training::TrainingConfig;
    t.push_back({"training.epochs", train_size(&T::epochs)});
    t.push_back({"training.j_steps", train_size(&T::j_steps)});
    t.push_back({"training.batch_size", train_size(&T::batch_size)});
    t.push_back({"training.latent_dim", train_size(&T::latent_dim)});
    t.push_back({"training.hidden", train_size(&T::hidden)});
    t.push_back({"training.feature_widths",
                 {[](C& c, K k, K v) {
                    c.training.feature_widths = parse_list<std::size_t>(v, [&](K x) { return parse_size(k, x); });
                  },
                  [](const C& c) { return join(c.training.feature_widths, count_str); }}});
    t.push_back({"training.lr", train_double(&T::lr)});
    t.push_back({"training.beta1", train_double(&T::beta1)});
    t.push_back({"training.beta2", train_double(&T::beta2)});
    t.push_back({"training.lipschitz",
                 {[](C& c, K k, K v) {
                    const auto s = trim(v);
                    if (s == "gradient_penalty") {
                      c.training.lipschitz = training::Lipschitz::gradient_penalty;
                    } else if (s == "weight_clipping") {
                      c.training.lipschitz = training::Lipschitz::weight_clipping;
                    } else {
                      bad_value(k, v, "gradient_penalty or weight_clipping");
                    }
                  },
                  [](const C& c) { return std::string(training::to_string(c.training.lipschitz)); }}});
    t.push_back({"training.gp_lambda", train_double(&T::gp_lambda)});
    t.push_back({"training.clip_value", train_double(&T::clip_value)});
    t.push_back({"training.lambda_C", train_double(&T::lambda_C)});
    t.push_back({"training.lambda_D", train_double(&T::lambda_D)});
    t.push_back({"training.bank_size", train_size(&T::bank_size)});
    t.push_back({"training.seed",
                 {[](C& c, K k, K v) { c.training.seed = parse_number<std::uint64_t>(k, v, "a seed"); },
                  [](const C& c) { return std::to_string(c.training.seed); }}});
    t.push_back({"training.label_sampling_fallback",
                 {[](C& c, K k, K v) {
                    const auto s = trim(v);
                    if (s == "uniform_all") {
                      c.training.label_sampling_fallback = training::LabelFallback::uniform_all;
                    } else if (s == "uniform_minority") {
                      c.training.label_sampling_fallback = training::LabelFallback::uniform_minority;
                    } else {
                      bad_value(k, v, "uniform_all or uniform_minority");
                    }
                  },
                  [](const C& c) { return std::string(training::to_string(c.training.label_sampling_fallback)); }}});
    t.push_back({"training.feature_warmup_epochs", train_size(&T::feature_warmup_epochs)});
    t.push_back({"training.ae_epochs", train_size(&T::ae_epochs)});
    t.push_back({"training.ae_lr", train_double(&T::ae_lr)});
    t.push_back({"training.classifier_epochs", train_size(&T::classifier_epochs)});
    t.push_back({"training.jitter", train_double(&T::jitter)});

    t.push_back({"eval.test_per_class",
                 {[](C& c, K k, K v) { c.eval.test_per_class = parse_size(k, v); },
                  [](const C& c) { return std::to_string(c.eval.test_per_class); }}});
    t.push_back({"eval.mode",
                 {[](C& c, K k, K v) {
                    const auto s = trim(v);
                    if (s == "retrained-c") {
                      c.eval.mode = training::EvalMode::retrained_c;
                    } else if (s == "adversarial-c") {
                      c.eval.mode = training::EvalMode::adversarial_c;
                    } else {
                      bad_value(k, v, "retrained-c or adversarial-c");
                    }
                  },
                  [](const C& c) { return std::string(training::to_string(c.eval.mode)); }}});
    t.push_back({"eval.smote_k",
                 {[](C& c, K k, K v) { c.eval.smote_k = parse_size(k, v); },
                  [](const C& c) { return std::to_string(c.eval.smote_k); }}});
    return t;
  }();
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  training.validate();
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (name.empty()) fail("name must not be empty");
  if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end()) fail("unknown method '" + method + "'");
  if (dataset.kind != "blobs" && dataset.kind != "rings" && dataset.kind != "csv" && dataset.kind != "idx") {
    fail("unknown dataset.kind '" + dataset.kind + "'");
  }
  if (dataset.kind == "blobs" || dataset.kind == "rings") {
    if (dataset.counts.size() < 2) fail("dataset.counts needs at least two classes");
    for (auto c : dataset.counts) {
      if (c == 0) fail("dataset.counts entries must be positive");
    }
  }
  if (dataset.kind == "blobs") {
    if (!dataset.centers.empty() && dataset.centers.size() != dataset.counts.size()) {
      fail("dataset.centers has " + std::to_string(dataset.centers.size()) + " entries for " +
           std::to_string(dataset.counts.size()) + " classes");
    }
    for (const auto& c : dataset.centers) {
      if (c.empty() || c.size() != dataset.centers.front().size()) fail("dataset.centers must share one dimension");
    }
    if (!(dataset.stddev > 0.0)) fail("dataset.stddev must be positive");
  }
  if (dataset.kind == "rings" && dataset.radii.size() != dataset.counts.size()) {
    fail("dataset.radii needs one radius per class");
  }
  if (dataset.kind == "csv" && dataset.path.empty()) fail("dataset.path is required for csv data");
  if (dataset.kind == "idx" && (dataset.images.empty() || dataset.labels.empty())) {
    fail("dataset.images and dataset.labels are required for idx data");
  }
  if (dataset.downscale == 0) fail("dataset.downscale must be at least 1");
  if (eval.test_per_class == 0) fail("eval.test_per_class must be positive");
  if (eval.smote_k == 0) fail("eval.smote_k must be positive");
}

void set_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(cfg, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  set_value(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s(line);
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    set_value(base, s.substr(0, eq), s.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, std::move(base));
}

std::string canonical_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(cfg) + "\n";
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a(canonical_text(cfg)); }

std::filesystem::path output_root() {
  const char* env = std::getenv("PGAN_OUTPUT_ROOT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("runs");
}

std::filesystem::path run_directory(const ExperimentConfig& cfg) {
  const auto dir = cfg.output_dir.empty() ? std::filesystem::path(cfg.name) : cfg.output_dir;
  return dir.is_absolute() ? dir : output_root() / dir;
}

}  // namespace pgan::cli
