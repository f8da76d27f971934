// Batch command-line driver for the spiking-network pipeline: dataset
// preparation, training, evaluation with optional MC-dropout uncertainty,
// triage export, and architecture summaries. Every command is deterministic
// given its configuration, so reruns produce byte-identical CSV outputs.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "bcsnn/bayes.hpp"
#include "bcsnn/checkpoint.hpp"
#include "bcsnn/coding.hpp"
#include "bcsnn/csv.hpp"
#include "bcsnn/data.hpp"
#include "bcsnn/model.hpp"
#include "bcsnn/rng.hpp"
#include "bcsnn/trainer.hpp"

namespace fs = std::filesystem;

namespace {

// Independent RNG streams derived from the single run seed.
constexpr std::uint64_t kStreamDataset = 1;
constexpr std::uint64_t kStreamSplit = 2;
constexpr std::uint64_t kStreamVal = 3;
constexpr std::uint64_t kStreamAugment = 4;
constexpr std::uint64_t kStreamInit = 5;
constexpr std::uint64_t kStreamMc = 6;

constexpr const char* kOutputDirEnv = "BCSNN_OUTPUT_DIR";

struct KeyDef {
  const char* key;
  const char* fallback;  // built-in default, overridden by env/config/flags
  const char* help;
};

// Config keys and their command-line flags mirror one-to-one: `--epochs 30`
// and a config-file line `epochs=30` set the same value, with flags taking
// precedence over the file.
const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      {"dataset", "", "dataset directory of class subfolders, or a dataset cache file"},
      {"synthetic", "", "generate a synthetic dataset, spec CxN (classes x per-class count)"},
      {"image-size", "0", "square input edge; 0 picks the model's native size"},
      {"model", "desk", "architecture: desk or paper"},
      {"coding", "rate", "output coding: rate, temporal-negative, or temporal-inverse"},
      {"epochs", "10", "training epochs"},
      {"batch-size", "20", "minibatch size"},
      {"learning-rate", "0.0001", "ADAM learning rate"},
      {"num-steps", "25", "simulation time steps per forward pass"},
      {"seed", "0", "run seed; drives data generation, splits, init, and dropout"},
      {"split", "0.8", "training fraction of the train/test split"},
      {"val-fraction", "0", "fraction of the training portion held out for validation"},
      {"augment", "1", "augmentation factor for the training portion (1 = off)"},
      {"uq", "on", "MC-dropout uncertainty during evaluation: on or off"},
      {"passes", "100", "MC-dropout forward passes"},
      {"threshold", "0.4", "triage threshold in nats"},
      {"metric", "entropy", "triage metric: entropy or mi"},
      {"partition", "test", "portion evaluated by eval/triage: test, train, or all"},
      {"eval-batch", "64", "evaluation batch size"},
      {"classes", "2", "class count for summarize without a checkpoint"},
      {"output-dir", "out", "directory for CSVs and the default checkpoint"},
      {"checkpoint", "", "checkpoint path (default <output-dir>/checkpoint.bcsnn)"},
      {"output", "", "output file for augment (default <output-dir>/augmented.bcsnnds)"},
      {"timing", "off", "write real wall-clock columns instead of 0.000000: on or off"},
  };
  return defs;
}

struct CommandContext {
  CLI::App* cmd = nullptr;
  std::map<std::string, std::string> staged;  // flag targets, keyed by config key
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
};

void register_keys(CommandContext& ctx) {
  for (const KeyDef& def : key_defs()) {
    std::string& slot = ctx.staged[def.key];  // map nodes keep stable addresses
    ctx.options[def.key] = ctx.cmd->add_option("--" + std::string(def.key), slot, def.help);
  }
  ctx.cmd->add_option("--config", ctx.config_path, "flat key=value config file");
}

std::string trim(const std::string& s) {
  const std::size_t first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const std::size_t last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::set<std::string> known;
  for (const KeyDef& def : key_defs()) known.insert(def.key);

  std::map<std::string, std::string> values;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_number) +
                               ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (known.find(key) == known.end()) {
      throw std::runtime_error(path + ":" + std::to_string(line_number) +
                               ": unknown config key: " + key);
    }
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

struct RawOptions {
  std::map<std::string, std::string> values;
  std::set<std::string> overridden;  // set explicitly via config file or flag
};

// Precedence: flags > config file > environment (output dir only) > defaults.
RawOptions collect(const CommandContext& ctx) {
  RawOptions raw;
  for (const KeyDef& def : key_defs()) raw.values[def.key] = def.fallback;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    raw.values["output-dir"] = env;
  }
  if (!ctx.config_path.empty()) {
    for (const auto& [key, value] : parse_config_file(ctx.config_path)) {
      raw.overridden.insert(key);
      if (ctx.options.at(key)->count() == 0) raw.values[key] = value;
    }
  }
  for (const auto& [key, option] : ctx.options) {
    if (option->count() > 0) {
      raw.values[key] = ctx.staged.at(key);
      raw.overridden.insert(key);
    }
  }
  return raw;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw std::invalid_argument("invalid value for " + key + ": '" + value + "' (" + expected + ")");
}

int parse_int(const RawOptions& raw, const std::string& key, int min_value) {
  const std::string& v = raw.values.at(key);
  try {
    std::size_t pos = 0;
    const int parsed = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    if (parsed < min_value) {
      bad_value(key, v, "must be >= " + std::to_string(min_value));
    }
    return parsed;
  } catch (const std::invalid_argument&) {
    bad_value(key, v, "expected an integer");
  } catch (const std::out_of_range&) {
    bad_value(key, v, "out of range");
  }
}

double parse_double(const RawOptions& raw, const std::string& key) {
  const std::string& v = raw.values.at(key);
  try {
    std::size_t pos = 0;
    const double parsed = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return parsed;
  } catch (const std::invalid_argument&) {
    bad_value(key, v, "expected a number");
  } catch (const std::out_of_range&) {
    bad_value(key, v, "out of range");
  }
}

std::uint64_t parse_u64(const RawOptions& raw, const std::string& key) {
  const std::string& v = raw.values.at(key);
  try {
    std::size_t pos = 0;
    const unsigned long long parsed = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(parsed);
  } catch (const std::invalid_argument&) {
    bad_value(key, v, "expected a non-negative integer");
  } catch (const std::out_of_range&) {
    bad_value(key, v, "out of range");
  }
}

bool parse_on_off(const RawOptions& raw, const std::string& key) {
  const std::string& v = raw.values.at(key);
  if (v == "on") return true;
  if (v == "off") return false;
  bad_value(key, v, "expected on or off");
}

struct Options {
  std::string dataset;
  std::string synthetic;
  int image_size = 0;
  std::string model = "desk";
  bcsnn::CodingMode coding = bcsnn::CodingMode::kRate;
  int epochs = 10;
  int batch_size = 20;
  double learning_rate = 1e-4;
  int num_steps = 25;
  std::uint64_t seed = 0;
  double split = 0.8;
  double val_fraction = 0.0;
  int augment = 1;
  bool uq = true;
  int passes = bcsnn::kDefaultMcPasses;
  double threshold = bcsnn::kDefaultTriageThreshold;
  bcsnn::UncertaintyMetric metric = bcsnn::UncertaintyMetric::kEntropy;
  std::string partition = "test";
  int eval_batch = 64;
  int classes = 2;
  std::string output_dir = "out";
  std::string checkpoint;
  std::string output;
  bool timing = false;
  std::set<std::string> overridden;
};

Options resolve(const RawOptions& raw) {
  Options opt;
  opt.dataset = raw.values.at("dataset");
  opt.synthetic = raw.values.at("synthetic");
  opt.image_size = parse_int(raw, "image-size", 0);
  if (opt.image_size != 0 && opt.image_size < 8) {
    bad_value("image-size", raw.values.at("image-size"), "must be 0 or >= 8");
  }
  opt.model = raw.values.at("model");
  if (opt.model != "desk" && opt.model != "paper") {
    bad_value("model", opt.model, "expected desk or paper");
  }
  opt.coding = bcsnn::coding_mode_from_name(raw.values.at("coding"));
  opt.epochs = parse_int(raw, "epochs", 1);
  opt.batch_size = parse_int(raw, "batch-size", 1);
  opt.learning_rate = parse_double(raw, "learning-rate");
  if (!(opt.learning_rate >= 0.0)) {
    bad_value("learning-rate", raw.values.at("learning-rate"), "must be >= 0");
  }
  opt.num_steps = parse_int(raw, "num-steps", 1);
  opt.seed = parse_u64(raw, "seed");
  opt.split = parse_double(raw, "split");
  if (!(opt.split > 0.0 && opt.split < 1.0)) {
    bad_value("split", raw.values.at("split"), "must lie in (0, 1)");
  }
  opt.val_fraction = parse_double(raw, "val-fraction");
  if (!(opt.val_fraction >= 0.0 && opt.val_fraction < 1.0)) {
    bad_value("val-fraction", raw.values.at("val-fraction"), "must lie in [0, 1)");
  }
  opt.augment = parse_int(raw, "augment", 1);
  opt.uq = parse_on_off(raw, "uq");
  opt.passes = parse_int(raw, "passes", 1);
  opt.threshold = parse_double(raw, "threshold");
  if (!(opt.threshold >= 0.0)) {
    bad_value("threshold", raw.values.at("threshold"), "must be >= 0");
  }
  opt.metric = bcsnn::uncertainty_metric_from_name(raw.values.at("metric"));
  opt.partition = raw.values.at("partition");
  if (opt.partition != "test" && opt.partition != "train" && opt.partition != "all") {
    bad_value("partition", opt.partition, "expected test, train, or all");
  }
  opt.eval_batch = parse_int(raw, "eval-batch", 1);
  opt.classes = parse_int(raw, "classes", 2);
  opt.output_dir = raw.values.at("output-dir");
  opt.checkpoint = raw.values.at("checkpoint");
  opt.output = raw.values.at("output");
  opt.timing = parse_on_off(raw, "timing");
  opt.overridden = raw.overridden;
  return opt;
}

int native_input_size(const Options& opt) {
  if (opt.image_size > 0) return opt.image_size;
  return opt.model == "paper" ? 128 : 32;
}

std::string checkpoint_path(const Options& opt) {
  if (!opt.checkpoint.empty()) return opt.checkpoint;
  return (fs::path(opt.output_dir) / "checkpoint.bcsnn").string();
}

// Loads from a class-folder directory, a dataset cache file, or the synthetic
// generator, and conforms every image to [3, input_size, input_size].
bcsnn::Dataset load_dataset(const Options& opt, int input_size) {
  if (!opt.dataset.empty() && !opt.synthetic.empty()) {
    throw std::invalid_argument("pass either --dataset or --synthetic, not both");
  }
  if (!opt.synthetic.empty()) {
    const auto [classes, per_class] = bcsnn::parse_synthetic_spec(opt.synthetic);
    return bcsnn::synthetic_dataset(classes, per_class, input_size,
                                    bcsnn::mix_seed(opt.seed, kStreamDataset));
  }
  if (opt.dataset.empty()) {
    throw std::invalid_argument("a dataset is required: pass --dataset DIR or --synthetic CxN");
  }
  if (fs::is_directory(opt.dataset)) {
    return bcsnn::load_image_dataset(opt.dataset, input_size);
  }
  if (fs::is_regular_file(opt.dataset)) {
    bcsnn::Dataset ds = bcsnn::load_dataset_cache(opt.dataset);
    for (bcsnn::Sample& sample : ds.samples) {
      if (sample.image.dim(1) != input_size || sample.image.dim(2) != input_size) {
        sample.image = bcsnn::resize_bilinear(sample.image, input_size, input_size);
      }
    }
    return ds;
  }
  throw std::invalid_argument("dataset path does not exist: " + opt.dataset);
}

bcsnn::ArchitectureSpec make_arch(const Options& opt, int num_classes) {
  bcsnn::ArchitectureSpec arch = opt.model == "paper" ? bcsnn::paper_architecture(num_classes)
                                                      : bcsnn::desk_architecture(num_classes);
  if (opt.model == "paper" && num_classes != 2 && num_classes != 3) {
    throw std::invalid_argument("the paper architecture supports 2 or 3 classes, got " +
                                std::to_string(num_classes));
  }
  if (opt.image_size > 0) arch.input_size = opt.image_size;
  arch.init_seed = bcsnn::mix_seed(opt.seed, kStreamInit);
  return arch;
}

std::pair<bcsnn::Dataset, bcsnn::Dataset> split_train_test(const bcsnn::Dataset& full,
                                                           const Options& opt) {
  bcsnn::SplitSpec spec;
  spec.train_fraction = opt.split;
  spec.test_fraction = 1.0 - opt.split;
  spec.seed = bcsnn::mix_seed(opt.seed, kStreamSplit);
  return bcsnn::split(full, spec);
}

bcsnn::Dataset select_partition(const bcsnn::Dataset& full, const Options& opt) {
  if (opt.partition == "all") return full;
  auto [train_part, test_part] = split_train_test(full, opt);
  return opt.partition == "train" ? std::move(train_part) : std::move(test_part);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("failed while writing file: " + path);
}

bcsnn::EvalConfig make_eval_config(const Options& opt, bool force_mc) {
  bcsnn::EvalConfig ec;
  ec.coding = opt.coding;
  ec.num_steps = opt.num_steps;
  ec.mc = force_mc || opt.uq;
  ec.mc_passes = opt.passes;
  ec.seed = bcsnn::mix_seed(opt.seed, kStreamMc);
  ec.triage_threshold = opt.threshold;
  ec.metric = opt.metric;
  ec.eval_batch = opt.eval_batch;
  return ec;
}

int cmd_train(const Options& opt) {
  const int input_size = native_input_size(opt);
  bcsnn::Dataset full = load_dataset(opt, input_size);
  auto [train_part, test_part] = split_train_test(full, opt);
  (void)test_part;  // eval/triage re-derive it from the same seed

  bcsnn::Dataset val_part;
  bool has_val = false;
  if (opt.val_fraction > 0.0) {
    bcsnn::SplitSpec vs;
    vs.train_fraction = 1.0 - opt.val_fraction;
    vs.test_fraction = opt.val_fraction;
    vs.seed = bcsnn::mix_seed(opt.seed, kStreamVal);
    auto [reduced, held_out] = bcsnn::split(train_part, vs);
    train_part = std::move(reduced);
    val_part = std::move(held_out);
    has_val = !val_part.samples.empty();
  }

  const std::size_t before = train_part.samples.size();
  if (opt.augment > 1) {
    train_part = bcsnn::augment(train_part, opt.augment, bcsnn::mix_seed(opt.seed, kStreamAugment));
    std::printf("training images: %zu (%dX augmentation of %zu)\n", train_part.samples.size(),
                opt.augment, before);
  } else {
    std::printf("training images: %zu\n", before);
  }

  bcsnn::ArchitectureSpec arch = make_arch(opt, full.num_classes());
  bcsnn::Network network = bcsnn::build_model(arch);

  bcsnn::TrainConfig tc;
  tc.learning_rate = opt.learning_rate;
  tc.batch_size = opt.batch_size;
  tc.epochs = opt.epochs;
  tc.num_steps = opt.num_steps;
  tc.coding = opt.coding;
  tc.mc_dropout = opt.uq;
  tc.seed = opt.seed;
  tc.verbose = true;
  std::vector<bcsnn::EpochMetrics> history =
      bcsnn::train(network, train_part, has_val ? &val_part : nullptr, tc);

  fs::create_directories(opt.output_dir);
  const std::string metrics_path = (fs::path(opt.output_dir) / "epoch_metrics.csv").string();
  const std::string arch_path = (fs::path(opt.output_dir) / "architecture.txt").string();
  const std::string ckpt = checkpoint_path(opt);

  bcsnn::write_epoch_metrics_csv(metrics_path, history, opt.timing);
  write_text_file(arch_path, bcsnn::architecture_summary(network));
  bcsnn::CheckpointMeta meta{arch, opt.coding, opt.num_steps, opt.seed};
  bcsnn::save_checkpoint(ckpt, network, meta);

  std::printf("wrote %s\n", metrics_path.c_str());
  std::printf("wrote %s\n", arch_path.c_str());
  std::printf("wrote %s\n", ckpt.c_str());
  return 0;
}

int cmd_eval(Options opt) {
  bcsnn::LoadedCheckpoint loaded = bcsnn::load_checkpoint(checkpoint_path(opt));
  if (opt.overridden.find("seed") == opt.overridden.end()) opt.seed = loaded.meta.seed;
  if (opt.overridden.find("coding") == opt.overridden.end()) opt.coding = loaded.meta.coding;
  if (opt.overridden.find("num-steps") == opt.overridden.end()) {
    opt.num_steps = loaded.meta.num_steps;
  }

  bcsnn::Dataset full = load_dataset(opt, loaded.meta.arch.input_size);
  if (full.num_classes() != loaded.meta.arch.num_classes) {
    throw std::invalid_argument("checkpoint expects " +
                                std::to_string(loaded.meta.arch.num_classes) +
                                " classes, the dataset has " +
                                std::to_string(full.num_classes()));
  }
  bcsnn::Dataset part = select_partition(full, opt);

  bcsnn::EvalResult result = bcsnn::evaluate(loaded.network, part, make_eval_config(opt, false));

  fs::create_directories(opt.output_dir);
  const std::string metrics_path = (fs::path(opt.output_dir) / "class_metrics.csv").string();
  const std::string confusion_path = (fs::path(opt.output_dir) / "confusion.csv").string();
  bcsnn::write_class_metrics_csv(metrics_path, result.metrics, full.class_names);
  bcsnn::write_confusion_csv(confusion_path, result.metrics, full.class_names);
  std::printf("wrote %s\n", metrics_path.c_str());
  std::printf("wrote %s\n", confusion_path.c_str());
  if (opt.uq) {
    const std::string uq_path = (fs::path(opt.output_dir) / "uncertainty.csv").string();
    bcsnn::write_uncertainty_csv(uq_path, result.report);
    std::printf("wrote %s\n", uq_path.c_str());
  }
  std::printf("accuracy: %.2f%% over %lld samples\n", result.metrics.accuracy,
              static_cast<long long>(result.metrics.total));
  return 0;
}

int cmd_triage(Options opt) {
  bcsnn::LoadedCheckpoint loaded = bcsnn::load_checkpoint(checkpoint_path(opt));
  if (opt.overridden.find("seed") == opt.overridden.end()) opt.seed = loaded.meta.seed;
  if (opt.overridden.find("coding") == opt.overridden.end()) opt.coding = loaded.meta.coding;
  if (opt.overridden.find("num-steps") == opt.overridden.end()) {
    opt.num_steps = loaded.meta.num_steps;
  }

  bcsnn::Dataset full = load_dataset(opt, loaded.meta.arch.input_size);
  if (full.num_classes() != loaded.meta.arch.num_classes) {
    throw std::invalid_argument("checkpoint expects " +
                                std::to_string(loaded.meta.arch.num_classes) +
                                " classes, the dataset has " +
                                std::to_string(full.num_classes()));
  }
  bcsnn::Dataset part = select_partition(full, opt);

  bcsnn::EvalResult result = bcsnn::evaluate(loaded.network, part, make_eval_config(opt, true));
  std::vector<bcsnn::UncertaintyRecord> flagged =
      bcsnn::triage(result.report, opt.threshold, opt.metric);

  fs::create_directories(opt.output_dir);
  const std::string triage_path = (fs::path(opt.output_dir) / "triage.csv").string();
  const std::string dist_path =
      (fs::path(opt.output_dir) / "uncertainty_distribution.csv").string();
  bcsnn::write_uncertainty_csv(triage_path, flagged);
  bcsnn::write_distribution_csv(dist_path, result.report);
  std::printf("wrote %s\n", triage_path.c_str());
  std::printf("wrote %s\n", dist_path.c_str());
  std::printf("triage: %zu of %zu samples with %s >= %s\n", flagged.size(), result.report.size(),
              bcsnn::uncertainty_metric_name(opt.metric).c_str(),
              bcsnn::csv_fixed(opt.threshold).c_str());
  return 0;
}

int cmd_augment(const Options& opt) {
  const int input_size = native_input_size(opt);
  bcsnn::Dataset full = load_dataset(opt, input_size);
  const std::size_t before = full.samples.size();
  bcsnn::Dataset augmented =
      opt.augment > 1
          ? bcsnn::augment(full, opt.augment, bcsnn::mix_seed(opt.seed, kStreamAugment))
          : full;
  std::printf("training images: %zu (%dX augmentation of %zu)\n", augmented.samples.size(),
              opt.augment, before);

  std::string out_path = opt.output;
  if (out_path.empty()) {
    fs::create_directories(opt.output_dir);
    out_path = (fs::path(opt.output_dir) / "augmented.bcsnnds").string();
  } else if (fs::path(out_path).has_parent_path()) {
    fs::create_directories(fs::path(out_path).parent_path());
  }
  bcsnn::save_dataset_cache(out_path, augmented);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_summarize(const Options& opt) {
  if (opt.overridden.find("checkpoint") != opt.overridden.end()) {
    bcsnn::LoadedCheckpoint loaded = bcsnn::load_checkpoint(checkpoint_path(opt));
    std::fputs(bcsnn::architecture_summary(loaded.network).c_str(), stdout);
    return 0;
  }
  bcsnn::ArchitectureSpec arch = make_arch(opt, opt.classes);
  bcsnn::Network network = bcsnn::build_model(arch);
  std::fputs(bcsnn::architecture_summary(network).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiking-network training, evaluation, and uncertainty triage"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    std::function<int(const Options&)> run;
    CommandContext ctx;
  };
  std::vector<Command> commands;
  commands.push_back({"train", "train a model and write checkpoint + epoch metrics",
                      [](const Options& o) { return cmd_train(o); }, {}});
  commands.push_back({"eval", "evaluate a checkpoint and write class metrics + confusion",
                      [](const Options& o) { return cmd_eval(o); }, {}});
  commands.push_back({"triage", "flag high-uncertainty samples for review",
                      [](const Options& o) { return cmd_triage(o); }, {}});
  commands.push_back({"augment", "materialize an augmented dataset cache",
                      [](const Options& o) { return cmd_augment(o); }, {}});
  commands.push_back({"summarize", "print the architecture table",
                      [](const Options& o) { return cmd_summarize(o); }, {}});
  for (Command& command : commands) {
    command.ctx.cmd = app.add_subcommand(command.name, command.help);
    register_keys(command.ctx);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (Command& command : commands) {
      if (command.ctx.cmd->parsed()) {
        return command.run(resolve(collect(command.ctx)));
      }
    }
    std::fprintf(stderr, "error: no command given\n");
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
