#include "pgan/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "pgan/cli/plot.hpp"
#include "pgan/common/error.hpp"
#include "pgan/data/idx.hpp"
#include "pgan/data/sampling.hpp"
#include "pgan/data/synthetic.hpp"
#include "pgan/models/networks.hpp"
#include "pgan/models/pgan_model.hpp"
#include "pgan/nn/gradcheck.hpp"
#include "pgan/nn/serialize.hpp"
#include "pgan/training/baselines.hpp"
#include "pgan/training/pgan.hpp"

#ifndef PGAN_VERSION
#define PGAN_VERSION "unknown"
#endif

namespace pgan::cli {
namespace fs = std::filesystem;

namespace {

constexpr const char* kCheckpoint = "checkpoint.bin";
constexpr std::size_t kPlotSamplesPerClass = 150;

void say(const RunOptions& opt, const std::string& line) {
  if (opt.log) *opt.log << line << '\n';
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

template <class F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Adds or replaces manifest entries for `files` (paths relative to `dir`).
void record(const fs::path& dir, const ExperimentConfig& cfg, const std::vector<std::string>& files,
            const RunOptions& opt) {
  const fs::path manifest = dir / "manifest.txt";
  std::map<std::string, std::string> entries;
  if (fs::exists(manifest)) {
    std::istringstream in(read_text(manifest));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      entries[line.substr(0, line.find('\t'))] = line;
    }
  }
  const std::string chash = hex64(config_hash(cfg));
  for (const auto& f : files) {
    entries[f] = f + "\tfnv1a=" + hex64(fnv1a(read_text(dir / f))) + "\tconfig=" + chash +
                 "\tversion=" PGAN_VERSION;
  }
  std::string text = "# path\tcontent hash\tconfig hash\tcode version\n";
  if (opt.timestamps) text += "# written " + utc_now() + "\n";
  for (const auto& [_, line] : entries) text += line + "\n";
  write_text(manifest, text);
}

std::vector<std::vector<double>> default_centers(std::size_t k) {
  std::vector<std::vector<double>> out;
  for (std::size_t c = 0; c < k; ++c) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
    out.push_back({4.0 * std::cos(a), 4.0 * std::sin(a)});
  }
  return out;
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw Error(std::string(what) + " not found: " + p.string());
}

std::pair<data::Dataset, data::Dataset> build_split(const ExperimentConfig& cfg) {
  const auto& spec = cfg.dataset;
  const std::size_t test = cfg.eval.test_per_class;
  const std::uint64_t split_seed = mix_seed(spec.seed, 31);
  if (spec.kind == "blobs" || spec.kind == "rings") {
    std::vector<std::size_t> totals(spec.counts);
    for (auto& t : totals) t += test;
    data::Dataset full =
        spec.kind == "blobs"
            ? data::make_blobs(totals, spec.centers.empty() ? default_centers(totals.size()) : spec.centers,
                               spec.stddev, spec.seed)
            : data::make_rings(totals, spec.radii, spec.noise, spec.seed);
    return data::split_per_class(full, test, split_seed);
  }
  data::Dataset full;
  if (spec.kind == "csv") {
    require_file(spec.path, "dataset file");
    full = data::read_csv(spec.path);
  } else {
    require_file(spec.images, "image file");
    require_file(spec.labels, "label file");
    full = data::load_idx(spec.images, spec.labels, spec.downscale);
  }
  if (!spec.classes.empty()) full = data::select_classes(full, spec.classes);
  auto [train, held_out] = data::split_per_class(full, test, split_seed);
  if (!spec.counts.empty()) train = data::apply_imbalance(train, spec.counts, mix_seed(spec.seed, 32));
  return {std::move(train), std::move(held_out)};
}

std::string csv_text(const data::Dataset& ds) {
  return render([&](std::ostream& os) { data::write_csv(os, ds); });
}

std::string join_counts(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::map<std::string, std::string> read_keyvalues(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

nn::Blob classifier_blob(const std::string& method, const training::Classifier& clf) {
  nn::Blob blob;
  blob.put("method", method);
  blob.put("F", clf.f_net);
  blob.put("C", clf.c_net);
  return blob;
}

void put_gan(nn::Blob& blob, const training::GanModel& gan) {
  blob.put("G", gan.g_net);
  blob.put("D", gan.d_net);
  blob.put("gan.shape", std::vector<double>{static_cast<double>(gan.latent_dim), static_cast<double>(gan.num_classes)});
}

training::GanModel get_gan(const nn::Blob& blob) {
  training::GanModel gan;
  gan.g_net = blob.network("G");
  gan.d_net = blob.network("D");
  const auto& shape = blob.doubles("gan.shape");
  if (shape.size() != 2) throw FormatError("checkpoint section gan.shape must hold two values");
  gan.latent_dim = static_cast<std::size_t>(shape[0]);
  gan.num_classes = static_cast<std::size_t>(shape[1]);
  return gan;
}

void write_curve(const fs::path& dir, const std::string& stem, const training::LossCurve& curve,
                 const std::string& title, const RunOptions& opt, std::vector<std::string>& written) {
  write_text(dir / (stem + ".csv"), render([&](std::ostream& os) { curve.write_csv(os, opt.timestamps); }));
  write_text(dir / (stem + ".svg"), render([&](std::ostream& os) { write_loss_svg(os, curve, title); }));
  written.push_back(stem + ".csv");
  written.push_back(stem + ".svg");
}

std::vector<nn::Tensor> class_rows(const nn::Tensor& x, const std::vector<int>& labels, std::size_t k) {
  std::vector<std::vector<std::size_t>> rows(k);
  for (std::size_t r = 0; r < labels.size(); ++r) rows[static_cast<std::size_t>(labels[r])].push_back(r);
  std::vector<nn::Tensor> out;
  for (const auto& r : rows) out.push_back(x.gather_rows(r));
  return out;
}

std::vector<int> repeated_labels(std::size_t k, std::size_t per_class) {
  std::vector<int> out;
  for (std::size_t c = 0; c < k; ++c) out.insert(out.end(), per_class, static_cast<int>(c));
  return out;
}

}  // namespace

PreparedData cmd_prepare(const ExperimentConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  const fs::path dir = run_directory(cfg);
  say(opt, "prepare: building " + cfg.dataset.kind + " split in " + dir.string());
  auto [train, test] = build_split(cfg);
  const std::string train_csv = csv_text(train);
  const std::string test_csv = csv_text(test);
  PreparedData out{std::move(train), std::move(test), hex64(fnv1a(train_csv)), hex64(fnv1a(test_csv))};
  out.train.name = out.test.name = cfg.dataset.kind + "-" + out.train_hash;

  std::vector<std::string> written{"config.txt", "data/train.csv", "data/test.csv", "data/split.txt",
                                   "data/priors.csv"};
  write_text(dir / "config.txt", canonical_text(cfg));
  write_text(dir / "data/train.csv", train_csv);
  write_text(dir / "data/test.csv", test_csv);
  const auto train_counts = out.train.class_counts();
  write_text(dir / "data/split.txt",
             "kind=" + cfg.dataset.kind + "\nnum_classes=" + std::to_string(out.train.num_classes) +
                 "\ndim=" + std::to_string(out.train.dim()) + "\ntrain_rows=" + std::to_string(out.train.size()) +
                 "\ntest_rows=" + std::to_string(out.test.size()) + "\ntrain_counts=" + join_counts(train_counts) +
                 "\ntest_counts=" + join_counts(out.test.class_counts()) + "\ntrain_hash=" + out.train_hash +
                 "\ntest_hash=" + out.test_hash + "\n");
  const auto priors = data::class_priors(out.train);
  write_text(dir / "data/priors.csv", render([&](std::ostream& os) {
               os << "class,count,prior\n";
               char buf[40];
               for (std::size_t c = 0; c < priors.num_classes(); ++c) {
                 std::snprintf(buf, sizeof buf, "%.17g", priors.priors[c]);
                 os << c << ',' << train_counts[c] << ',' << buf << '\n';
               }
             }));
  if (out.train.image_shape) {
    data::write_idx(dir / "data/train-images.idx3-ubyte", dir / "data/train-labels.idx1-ubyte", out.train);
    data::write_idx(dir / "data/test-images.idx3-ubyte", dir / "data/test-labels.idx1-ubyte", out.test);
    for (const char* f : {"data/train-images.idx3-ubyte", "data/train-labels.idx1-ubyte",
                          "data/test-images.idx3-ubyte", "data/test-labels.idx1-ubyte"}) {
      written.push_back(f);
    }
  }
  record(dir, cfg, written, opt);
  say(opt, "prepare: train counts " + join_counts(train_counts) + ", test counts " +
               join_counts(out.test.class_counts()));
  return out;
}

PreparedData load_prepared(const ExperimentConfig& cfg) {
  const fs::path dir = run_directory(cfg) / "data";
  const fs::path split = dir / "split.txt";
  if (!fs::exists(split)) throw Error("prepared data not found at " + dir.string() + "; run prepare first");
  auto kv = read_keyvalues(split);
  const std::size_t k = std::stoull(kv.at("num_classes"));
  PreparedData out;
  const std::string train_csv = read_text(dir / "train.csv");
  const std::string test_csv = read_text(dir / "test.csv");
  out.train_hash = hex64(fnv1a(train_csv));
  out.test_hash = hex64(fnv1a(test_csv));
  if (out.train_hash != kv["train_hash"] || out.test_hash != kv["test_hash"]) {
    throw FormatError("prepared data in " + dir.string() + " does not match its split manifest");
  }
  std::istringstream train_in(train_csv), test_in(test_csv);
  out.train = data::read_csv(train_in, k);
  out.test = data::read_csv(test_in, k);
  out.train.name = out.test.name = kv["kind"] + "-" + out.train_hash;
  return out;
}

TrainOutcome cmd_train(const ExperimentConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  const fs::path dir = run_directory(cfg);
  const auto data = load_prepared(cfg);
  const auto& train = data.train;
  const auto& tc = cfg.training;
  const auto equal = data::equalized_counts(train);
  say(opt, "train: " + cfg.method + " on " + std::to_string(train.size()) + " rows");

  std::vector<std::string> written{"config.txt"};
  write_text(dir / "config.txt", canonical_text(cfg));
  TrainOutcome out;
  nn::Blob blob;
  try {
    if (cfg.method == "pgan") {
      training::TrainObserver obs;
      if (cfg.checkpoint_every > 0) {
        obs.on_iteration = [&](std::size_t it, const models::PGanModel& m) {
          if (it % cfg.checkpoint_every != 0) return;
          auto b = models::to_blob(m);
          b.put("method", cfg.method);
          const std::string name = "checkpoint_iter" + std::to_string(it) + ".bin";
          nn::save_blob(dir / name, b);
          written.push_back(name);
        };
      }
      auto res = training::pgan_train(train, tc, obs);
      for (const auto& note : res.notes) say(opt, "note: " + note);
      blob = models::to_blob(res.model);
      blob.put("method", cfg.method);
      out.curve = std::move(res.curve);
    } else if (cfg.method == "plain" || cfg.method == "oversample" || cfg.method == "smote") {
      data::Dataset fit_on = train;
      if (cfg.method == "oversample") fit_on = data::random_oversample(train, equal, mix_seed(tc.seed, 20));
      if (cfg.method == "smote") fit_on = data::smote_oversample(train, cfg.eval.smote_k, equal, mix_seed(tc.seed, 21));
      auto fit = training::train_plain_classifier(fit_on, tc);
      blob = classifier_blob(cfg.method, fit.classifier);
      out.curve = std::move(fit.curve);
    } else {
      const bool conditional = cfg.method == "cgan";
      auto gan = conditional ? training::train_cgan(train, tc) : training::train_vanilla_gan(train, tc);
      // The unconditional generator cannot label its samples, so its
      // classifier is trained on the original data.
      const data::Dataset fit_on =
          conditional ? training::rebalance_with_gan(train, gan, equal, mix_seed(tc.seed, 22)) : train;
      auto fit = training::train_plain_classifier(fit_on, tc);
      blob = classifier_blob(cfg.method, fit.classifier);
      put_gan(blob, gan);
      write_curve(dir, "classifier_losses", fit.curve, cfg.method + " classifier loss", opt, written);
      out.curve = std::move(gan.curve);
    }
  } catch (const training::TrainingDivergence& e) {
    write_curve(dir, "losses", e.curve(), cfg.method + " training loss (diverged)", opt, written);
    record(dir, cfg, written, opt);
    throw;
  }
  out.checkpoint = dir / kCheckpoint;
  nn::save_blob(out.checkpoint, blob);
  written.push_back(kCheckpoint);
  write_curve(dir, "losses", out.curve, cfg.method + " training loss", opt, written);
  record(dir, cfg, written, opt);
  say(opt, "train: " + std::to_string(out.curve.size()) + " iterations, checkpoint " + out.checkpoint.string());
  return out;
}

EvalOutcome cmd_evaluate(const ExperimentConfig& cfg, const RunOptions& opt,
                         const std::optional<fs::path>& checkpoint, const std::string& split) {
  cfg.validate();
  if (split != "test" && split != "train") throw ConfigError("evaluation split must be 'test' or 'train'");
  const fs::path dir = run_directory(cfg);
  const auto data = load_prepared(cfg);
  const fs::path ckpt = checkpoint.value_or(dir / kCheckpoint);
  require_file(ckpt, "checkpoint");
  const nn::Blob blob = nn::load_blob(ckpt);
  const std::string method = blob.text("method");
  if (method != cfg.method) {
    throw ConfigError("checkpoint " + ckpt.string() + " holds a " + method + " model but the config names " +
                      cfg.method);
  }
  const data::Dataset& eval_set = split == "train" ? data.train : data.test;
  const std::size_t k = data.train.num_classes;

  std::optional<models::PGanModel> model;
  training::Classifier clf;
  if (method == "pgan") {
    model = models::from_blob(blob, data.train);
    clf = training::pgan_classifier(data.train, *model, cfg.eval.mode, cfg.training);
  } else {
    clf = {blob.network("F"), blob.network("C")};
  }
  const std::size_t expected = clf.f_net.empty() ? clf.c_net.input_size() : clf.f_net.input_size();
  if (expected != eval_set.dim()) {
    throw DimensionError("checkpoint expects " + std::to_string(expected) + " input features but the dataset has " +
                         std::to_string(eval_set.dim()));
  }

  const nn::Tensor probs = clf.probabilities(eval_set.features);
  EvalOutcome out{metrics::f1_report(models::argmax_rows(probs), eval_set.labels, k),
                  metrics::uncertainty_metrics(probs)};
  std::vector<std::string> written{"metrics.csv", "uncertainty.csv", "summary.txt"};
  write_text(dir / "metrics.csv", render([&](std::ostream& os) { metrics::write_metrics_csv(os, out.metrics); }));
  write_text(dir / "uncertainty.csv",
             render([&](std::ostream& os) { metrics::write_uncertainty_csv(os, out.uncertainty); }));
  std::string summary = "method " + method + "\nsplit " + split + "\n";
  if (method == "pgan") summary += "classifier " + std::string(training::to_string(cfg.eval.mode)) + "\n";
  summary += metrics::summary_text(out.metrics, out.uncertainty);

  Rng rng(mix_seed(cfg.training.seed, 40));
  if (model) {
    // Sliced EMD between each class's real features and generator samples.
    const nn::Tensor feats = models::extract_features(model->f_net, data.train.features);
    const auto real = class_rows(feats, data.train.labels, k);
    std::string shift = "class,distribution_shift\n";
    for (std::size_t c = 0; c < k; ++c) {
      const std::vector<int> labels(256, static_cast<int>(c));
      const double d = metrics::distribution_shift(real[c], models::sample_generator(*model, labels, rng), 32,
                                                   mix_seed(cfg.training.seed, 41));
      char buf[64];
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", c, d);
      shift += buf;
    }
    write_text(dir / "shift.csv", shift);
    written.push_back("shift.csv");
  }
  write_text(dir / "summary.txt", summary);

  if (eval_set.dim() == 2) {
    write_text(dir / "boundary.svg", render([&](std::ostream& os) {
                 write_boundary_svg(os, [&](const nn::Tensor& x) { return clf.predict(x); }, eval_set);
               }));
    written.push_back("boundary.svg");
    std::optional<std::string> scatter;
    if (model && model->feature_dim() == 2) {
      const auto labels = repeated_labels(k, kPlotSamplesPerClass);
      const nn::Tensor samples = models::sample_generator(*model, labels, rng);
      scatter = render([&](std::ostream& os) {
        write_hull_scatter_svg(os, model->g.bank.anchors, samples, labels, "generator samples and bank hulls");
      });
    } else if (method == "cgan" || method == "vanilla_gan") {
      const auto gan = get_gan(blob);
      const auto hulls = class_rows(data.train.features, data.train.labels, k);
      std::vector<int> labels;
      nn::Tensor samples;
      if (gan.num_classes > 0) {
        labels = repeated_labels(k, kPlotSamplesPerClass);
        samples = training::sample_gan(gan, labels, rng);
      } else {
        labels.assign(kPlotSamplesPerClass * k, static_cast<int>(k));
        samples = training::sample_gan(gan, labels.size(), rng);
      }
      scatter = render([&](std::ostream& os) {
        write_hull_scatter_svg(os, hulls, samples, labels, "generator samples and class hulls");
      });
    }
    if (scatter) {
      write_text(dir / "samples.svg", *scatter);
      written.push_back("samples.svg");
    }
  }
  record(dir, cfg, written, opt);
  say(opt, "evaluate: macro F1 " + std::to_string(out.metrics.macro_f1));
  return out;
}

std::vector<CompareRow> cmd_compare(const std::vector<ExperimentConfig>& configs, const fs::path& out_dir,
                                    const RunOptions& opt) {
  if (configs.empty()) throw ConfigError("compare needs at least one config");
  std::vector<CompareRow> rows;
  std::string split_ref;
  std::string split_owner;
  for (const auto& cfg : configs) {
    cfg.validate();
    const fs::path dir = run_directory(cfg);
    const bool fresh = fs::exists(dir / kCheckpoint) && fs::exists(dir / "config.txt") &&
                       read_text(dir / "config.txt") == canonical_text(cfg);
    if (!fresh) {
      cmd_prepare(cfg, opt);
      cmd_train(cfg, opt);
    }
    const auto data = load_prepared(cfg);
    const std::string split = data.train_hash + "/" + data.test_hash;
    if (split_ref.empty()) {
      split_ref = split;
      split_owner = cfg.name;
    } else if (split != split_ref) {
      throw ConfigError("split mismatch: run '" + cfg.name + "' does not use the same train/test split as '" +
                        split_owner + "'");
    }
    const auto ev = cmd_evaluate(cfg, opt);
    rows.push_back({cfg.name, cfg.method, ev.metrics.macro_f1, ev.metrics.average_accuracy,
                    ev.uncertainty.least_confidence.mean, ev.uncertainty.margin_of_confidence.mean,
                    ev.uncertainty.ratio_of_confidence.mean, ev.uncertainty.entropy.mean});
  }
  std::string csv =
      "run,method,macro_f1,average_accuracy,least_confidence,margin_of_confidence,ratio_of_confidence,entropy\n";
  std::string text = "run                  method       macro_f1  avg_acc   LC      margin  ratio   entropy\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.run.c_str(), r.method.c_str(),
                  r.macro_f1, r.average_accuracy, r.least_confidence, r.margin_of_confidence, r.ratio_of_confidence,
                  r.entropy);
    csv += buf;
    std::snprintf(buf, sizeof buf, "%-20s %-12s %.4f    %.4f    %.4f  %.4f  %.4f  %.4f\n", r.run.c_str(),
                  r.method.c_str(), r.macro_f1, r.average_accuracy, r.least_confidence, r.margin_of_confidence,
                  r.ratio_of_confidence, r.entropy);
    text += buf;
  }
  write_text(out_dir / "comparison.csv", csv);
  write_text(out_dir / "comparison.txt", text);
  if (opt.log) *opt.log << text;
  return rows;
}

int cmd_gradcheck(std::size_t seeds, std::ostream& out) {
  const auto cases = nn::run_gradcheck_suite(seeds);
  bool ok = true;
  char buf[160];
  for (const auto& c : cases) {
    std::snprintf(buf, sizeof buf, "%-40s max rel err %.3e  %s\n", c.name.c_str(), c.max_relative_error,
                  c.passed ? "ok" : "FAIL");
    out << buf;
    ok = ok && c.passed;
  }
  out << (ok ? "gradcheck passed\n" : "gradcheck FAILED\n");
  return ok ? kExitOk : kExitFailure;
}

}  // namespace pgan::cli
