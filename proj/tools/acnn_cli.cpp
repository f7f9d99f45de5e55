// acnn: command-line surface for the analytic CNN pipeline.
//
// Subcommands:
//   build     construct a network from one exemplar per class and save it
//   classify  run one test image through a saved network
//   eval      evaluate a saved network on the test set
//   sweep     build+evaluate canonical configurations across seeds
//   dump      export kernels, channels, thresholds, or per-image scores
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "acnn/acnn.hpp"

namespace fs = std::filesystem;

namespace {

// A problem with how the tool was invoked (bad flag value, missing input
// file); reported with exit code 2 before any real work happens.
class usage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr const char* kImagesBase = "t10k-images-idx3-ubyte";
constexpr const char* kLabelsBase = "t10k-labels-idx1-ubyte";

std::vector<long long> parse_int_list(const std::string& s, const char* flag) {
  std::vector<long long> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string tok = s.substr(pos, comma - pos);
    if (tok.empty()) throw usage_error(std::string(flag) + ": empty element in list");
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      throw usage_error(std::string(flag) + ": not an integer: '" + tok + "'");
    }
    if (used != tok.size()) {
      throw usage_error(std::string(flag) + ": not an integer: '" + tok + "'");
    }
    out.push_back(v);
    if (comma == s.size()) break;
    pos = comma + 1;
  }
  return out;
}

// Resolves an input data file: an explicit path must exist; otherwise the
// canonical file name is searched under $ACNN_DATA_DIR (default ./data),
// gzipped variant first.
std::string resolve_input(const std::string& given, const char* base, const char* flag) {
  if (!given.empty()) {
    if (!fs::exists(given)) {
      throw usage_error(std::string(flag) + ": file not found: " + given);
    }
    return given;
  }
  const char* env = std::getenv("ACNN_DATA_DIR");
  const fs::path dir = (env && *env) ? fs::path(env) : fs::path("data");
  for (const char* suffix : {".gz", ""}) {
    const fs::path p = dir / (std::string(base) + suffix);
    if (fs::exists(p)) return p.string();
  }
  throw usage_error(std::string("cannot locate ") + base + "[.gz] under '" + dir.string() +
                    "'; pass " + flag + " or set ACNN_DATA_DIR");
}

std::string require_file(const std::string& path, const char* flag) {
  if (!fs::exists(path)) {
    throw usage_error(std::string(flag) + ": file not found: " + path);
  }
  return path;
}

std::string zero_pad(int v, int width) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, v);
  return buf;
}

acnn::RealGrid patch_as_grid(const acnn::Patch5& w) {
  acnn::RealGrid g(acnn::kKernelSide, acnn::kKernelSide);
  for (int i = 0; i < acnn::kKernelCells; ++i) g.data()[i] = w[i];
  return g;
}

acnn::RealGrid slice_as_grid(const std::vector<double>& w, int slice) {
  acnn::RealGrid g(acnn::kKernelSide, acnn::kKernelSide);
  for (int i = 0; i < acnn::kKernelCells; ++i) {
    g.data()[i] = w[static_cast<std::size_t>(slice) * acnn::kKernelCells + i];
  }
  return g;
}

// ---------------------------------------------------------------------------
// Shared option bundles
// ---------------------------------------------------------------------------

struct DataOpts {
  std::string images;
  std::string labels;
};

struct ConfigOpts {
  double K = 40.0;
  bool pooling = true;
  bool image_channels = true;
  std::string exemplar_indices;  // comma list, overrides seed
  std::uint32_t seed = 1;
};

void add_data_flags(CLI::App* cmd, DataOpts& d) {
  cmd->add_option("--images", d.images, "IDX image file (plain or .gz)");
  cmd->add_option("--labels", d.labels, "IDX label file (plain or .gz)");
}

void add_config_flags(CLI::App* cmd, ConfigOpts& c) {
  cmd->add_option("--K", c.K, "bias percentage (0, 100]")->capture_default_str();
  cmd->add_flag("--pooling,!--no-pooling", c.pooling, "2x2 max pooling between layers")
      ->capture_default_str();
  cmd->add_flag("--image-channels,!--merged", c.image_channels,
                "one channel per (kernel, exemplar) pair vs merged channels")
      ->capture_default_str();
  cmd->add_option("--exemplar-indices", c.exemplar_indices,
                  "comma list of 10 test-set indices, one per class 0..9 (overrides --seed)");
  cmd->add_option("--seed", c.seed, "seed for the exemplar draw")->capture_default_str();
}

acnn::BuildConfig make_config(const ConfigOpts& c) {
  if (!(c.K > 0.0 && c.K <= 100.0)) {
    throw usage_error("--K must be in (0, 100]");
  }
  acnn::BuildConfig cfg;
  cfg.K = c.K;
  cfg.use_pooling = c.pooling;
  cfg.use_image_channels = c.image_channels;
  return cfg;
}

acnn::ExemplarSet pick_exemplars(const std::vector<acnn::BinaryImage>& images,
                                 const ConfigOpts& c) {
  if (!c.exemplar_indices.empty()) {
    const auto list = parse_int_list(c.exemplar_indices, "--exemplar-indices");
    if (list.size() != 10) {
      throw usage_error("--exemplar-indices: expected 10 indices, got " +
                        std::to_string(list.size()));
    }
    std::vector<int> idx;
    for (long long v : list) {
      if (v < 0 || v >= static_cast<long long>(images.size())) {
        throw usage_error("--exemplar-indices: index out of range: " + std::to_string(v));
      }
      idx.push_back(static_cast<int>(v));
    }
    acnn::ExemplarSet set = acnn::select_exemplars(images, idx);
    for (int cls = 0; cls < set.size(); ++cls) {
      if (set.images[cls].label != cls) {
        std::cerr << "warning: exemplar for class " << cls << " (index " << idx[cls]
                  << ") is labeled " << set.images[cls].label << "\n";
      }
    }
    return set;
  }
  return acnn::select_exemplars(images, c.seed);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_build(const DataOpts& d, const ConfigOpts& c, const std::string& out) {
  const acnn::BuildConfig cfg = make_config(c);
  const std::string images_path = resolve_input(d.images, kImagesBase, "--images");
  const std::string labels_path = resolve_input(d.labels, kLabelsBase, "--labels");

  const auto images = acnn::load_binarized(images_path, labels_path);
  const acnn::ExemplarSet exemplars = pick_exemplars(images, c);
  const acnn::AnalyticNetwork net = acnn::build_network(exemplars, cfg);

  acnn::save_network(net, out);
  acnn::write_text_file(out + ".manifest.txt", acnn::network_manifest(net));

  std::cout << "exemplar indices:";
  for (int idx : net.exemplar_indices) std::cout << " " << idx;
  std::cout << "\n";
  std::cout << "layer-1 kernels: " << net.layer1.size() << "\n";
  std::cout << "layer-2 kernels: " << net.layer2.size() << "\n";
  std::cout << "head field: " << net.head.channels << "x" << net.head.height << "x"
            << net.head.width << "\n";
  std::cout << "build time: " << net.build_seconds << " s\n";
  std::cout << "wrote " << out << " (+ manifest)\n";
  return 0;
}

int run_classify(const std::string& net_path, const DataOpts& d, int index) {
  if (index < 0) throw usage_error("--index must be >= 0");
  const acnn::AnalyticNetwork net = acnn::load_network(require_file(net_path, "--net"));
  const std::string images_path = resolve_input(d.images, kImagesBase, "--images");

  auto images = acnn::load_idx_images(images_path);
  if (index >= static_cast<int>(images.size())) {
    throw std::runtime_error("image index " + std::to_string(index) +
                             " out of range (file holds " + std::to_string(images.size()) +
                             ")");
  }

  // Labels are optional for classification; attach them when available.
  bool have_labels = false;
  try {
    const std::string labels_path = resolve_input(d.labels, kLabelsBase, "--labels");
    acnn::attach_labels(images, acnn::load_idx_labels(labels_path));
    have_labels = true;
  } catch (const usage_error&) {
    if (!d.labels.empty()) throw;  // explicit path that is missing is still an error
  }

  const acnn::ForwardResult r = acnn::forward(net, images[index]);
  std::cout << "image " << index << ": predicted class " << r.cls;
  if (have_labels) {
    std::cout << ", true label " << images[index].label
              << (r.cls == images[index].label ? " (correct)" : " (wrong)");
  }
  std::cout << "\n";
  std::cout << "net values:";
  for (std::size_t k = 0; k < r.nets.size(); ++k) std::cout << " " << k << ":" << r.nets[k];
  std::cout << "\n";
  return 0;
}

int run_eval(const std::string& net_path, const DataOpts& d, int limit, int threads,
             const std::string& out_prefix) {
  if (limit <= 0) throw usage_error("--limit must be > 0");
  const acnn::AnalyticNetwork net = acnn::load_network(require_file(net_path, "--net"));
  const std::string images_path = resolve_input(d.images, kImagesBase, "--images");
  const std::string labels_path = resolve_input(d.labels, kLabelsBase, "--labels");

  const auto images = acnn::load_binarized(images_path, labels_path);
  auto labels = std::vector<int>();
  labels.reserve(images.size());
  for (const auto& im : images) labels.push_back(im.label);

  std::vector<acnn::ScoreRow> scores;
  const acnn::EvalReport rep =
      acnn::evaluate(net, images, labels, limit, threads, out_prefix.empty() ? nullptr : &scores);

  std::cout << acnn::format_report(rep);
  if (!out_prefix.empty()) {
    acnn::write_text_file(out_prefix + "confusion.csv", acnn::confusion_to_csv(rep));
    acnn::write_text_file(out_prefix + "scores.csv", acnn::scores_to_csv(scores));
    std::cout << "wrote " << out_prefix << "confusion.csv and " << out_prefix
              << "scores.csv\n";
  }
  return 0;
}

int run_sweep(const DataOpts& d, const std::string& configs_str, const std::string& seeds_str,
              int limit, int threads, const std::string& out) {
  if (limit <= 0) throw usage_error("--limit must be > 0");

  std::vector<acnn::BuildConfig> configs;
  std::vector<char> config_names;
  {
    std::size_t pos = 0;
    const std::string& s = configs_str;
    while (pos <= s.size()) {
      const std::size_t comma = std::min(s.find(',', pos), s.size());
      const std::string tok = s.substr(pos, comma - pos);
      const char ch = tok.size() == 1
                          ? static_cast<char>(std::toupper(static_cast<unsigned char>(tok[0])))
                          : '\0';
      if (ch == 'A') configs.push_back(acnn::config_pooled_image_channels());
      else if (ch == 'B') configs.push_back(acnn::config_unpooled_image_channels());
      else if (ch == 'C') configs.push_back(acnn::config_unpooled_merged());
      else throw usage_error("--configs: expected letters from {A, B, C}, got '" + s + "'");
      config_names.push_back(ch);
      if (comma == s.size()) break;
      pos = comma + 1;
    }
  }

  std::vector<std::uint32_t> seeds;
  for (long long v : parse_int_list(seeds_str, "--seeds")) {
    if (v < 0 || v > 0xffffffffLL) throw usage_error("--seeds: out of range: " + std::to_string(v));
    seeds.push_back(static_cast<std::uint32_t>(v));
  }

  const std::string images_path = resolve_input(d.images, kImagesBase, "--images");
  const std::string labels_path = resolve_input(d.labels, kLabelsBase, "--labels");
  const auto images = acnn::load_binarized(images_path, labels_path);
  std::vector<int> labels;
  labels.reserve(images.size());
  for (const auto& im : images) labels.push_back(im.label);

  const auto reports = acnn::sweep(configs, seeds, images, labels, limit, threads);
  std::string text = acnn::format_summary_table(reports);

  // Per-config mean accuracy (reports are ordered config-major).
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    double sum = 0.0;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      sum += reports[ci * seeds.size() + si].accuracy();
    }
    const double mean = seeds.empty() ? 0.0 : sum / static_cast<double>(seeds.size());
    text += "config " + std::string(1, config_names[ci]) +
            " mean accuracy: " + std::to_string(mean) + "\n";
  }

  std::cout << text;
  if (!out.empty()) {
    acnn::write_text_file(out, text);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int run_dump(const std::string& net_path, const DataOpts& d, const std::string& what,
             const std::string& format, int exemplar, int limit, int threads,
             const std::string& out_dir) {
  const bool csv = format == "csv";
  if (!csv && format != "pgm") throw usage_error("--format: expected csv or pgm");
  const bool want_pgm = !csv;
  if (exemplar < 0) throw usage_error("--exemplar must be >= 0");

  const acnn::AnalyticNetwork net = acnn::load_network(require_file(net_path, "--net"));
  fs::create_directories(out_dir.empty() ? "." : out_dir);
  const fs::path dir = out_dir.empty() ? "." : out_dir;
  const std::string ext = csv ? ".csv" : ".pgm";
  int files = 0;

  auto emit_grid = [&](const std::string& stem, const acnn::RealGrid& g) {
    const fs::path p = dir / (stem + ext);
    acnn::write_text_file(p.string(), csv ? acnn::grid_to_csv(g) : acnn::grid_to_pgm(g));
    ++files;
  };

  auto load_exemplar = [&]() {
    if (exemplar >= static_cast<int>(net.exemplar_indices.size())) {
      throw std::runtime_error("--exemplar " + std::to_string(exemplar) +
                               " out of range (network stores " +
                               std::to_string(net.exemplar_indices.size()) + " exemplars)");
    }
    const std::string images_path = resolve_input(d.images, kImagesBase, "--images");
    auto raw = acnn::load_idx_images(images_path);
    const int src = net.exemplar_indices[static_cast<std::size_t>(exemplar)];
    if (src < 0 || src >= static_cast<int>(raw.size())) {
      throw std::runtime_error("stored exemplar index " + std::to_string(src) +
                               " not present in the image file");
    }
    return acnn::binarize(raw[static_cast<std::size_t>(src)]);
  };

  if (what == "kernels") {
    std::string index_text = "layer kernel owner row col bias\n";
    for (std::size_t i = 0; i < net.layer1.size(); ++i) {
      const auto& k = net.layer1[i];
      if (csv) {
        emit_grid("layer1_k" + zero_pad(static_cast<int>(i), 3), patch_as_grid(k.w));
      } else {
        const fs::path p = dir / ("layer1_k" + zero_pad(static_cast<int>(i), 3) + ext);
        acnn::write_text_file(
            p.string(), acnn::grid_to_pgm(acnn::kernel_to_bytes(k.w.data(), acnn::kKernelSide)));
        ++files;
      }
      index_text += "1 " + std::to_string(i) + " " + std::to_string(k.owner) + " " +
                    std::to_string(k.row) + " " + std::to_string(k.col) + " " +
                    std::to_string(k.bias) + "\n";
    }
    for (std::size_t i = 0; i < net.layer2.size(); ++i) {
      const auto& mk = net.layer2[i];
      for (int m = 0; m < mk.channels; ++m) {
        const std::string stem =
            "layer2_k" + zero_pad(static_cast<int>(i), 3) + "_c" + zero_pad(m, 2);
        if (csv) {
          emit_grid(stem, slice_as_grid(mk.w, m));
        } else {
          const fs::path p = dir / (stem + ext);
          acnn::write_text_file(
              p.string(),
              acnn::grid_to_pgm(acnn::kernel_to_bytes(
                  mk.w.data() + static_cast<std::size_t>(m) * acnn::kKernelCells,
                  acnn::kKernelSide)));
          ++files;
        }
      }
      index_text += "2 " + std::to_string(i) + " " + std::to_string(mk.owner) + " " +
                    std::to_string(mk.row) + " " + std::to_string(mk.col) + " " +
                    std::to_string(mk.bias) + "\n";
    }
    acnn::write_text_file((dir / "kernels.txt").string(), index_text);
    ++files;
  } else if (what == "feature-channels") {
    const acnn::BinaryImage img = load_exemplar();
    const acnn::FeatureChannel fc = acnn::scan_boundary_features(img, net.cfg.scan_step);
    const std::string stem = "features_e" + std::to_string(exemplar);
    if (csv) {
      acnn::write_text_file((dir / (stem + ext)).string(), acnn::grid_to_csv(fc));
    } else {
      // Marks render as ink (0) on a white background.
      acnn::ByteGrid vis(fc.rows(), fc.cols());
      for (std::size_t i = 0; i < fc.size(); ++i) {
        vis.data()[i] = fc.data()[i] ? 0 : 255;
      }
      acnn::write_text_file((dir / (stem + ext)).string(), acnn::grid_to_pgm(vis));
    }
    ++files;
  } else if (what == "real-channels") {
    const acnn::BinaryImage img = load_exemplar();
    acnn::ChannelStack s1;
    for (const auto& k : net.layer1) s1.push_back(acnn::convolve_layer1(img, k));
    if (net.cfg.use_pooling) {
      for (auto& ch : s1) ch = acnn::max_pool(ch);
    }
    for (std::size_t i = 0; i < s1.size(); ++i) {
      emit_grid("real1_e" + std::to_string(exemplar) + "_k" + zero_pad(static_cast<int>(i), 3),
                s1[i]);
    }
    for (std::size_t i = 0; i < net.layer2.size(); ++i) {
      emit_grid("real2_e" + std::to_string(exemplar) + "_k" + zero_pad(static_cast<int>(i), 3),
                acnn::convolve_layer2(s1, net.layer2[i]));
    }
  } else if (what == "thresholds") {
    if (want_pgm) throw usage_error("--what thresholds supports --format csv only");
    acnn::write_text_file((dir / "thresholds.csv").string(),
                          acnn::thresholds_to_csv(net.head));
    ++files;
  } else if (what == "scores") {
    if (want_pgm) throw usage_error("--what scores supports --format csv only");
    if (limit <= 0) throw usage_error("--limit must be > 0");
    const std::string images_path = resolve_input(d.images, kImagesBase, "--images");
    const std::string labels_path = resolve_input(d.labels, kLabelsBase, "--labels");
    const auto images = acnn::load_binarized(images_path, labels_path);
    std::vector<int> labels;
    labels.reserve(images.size());
    for (const auto& im : images) labels.push_back(im.label);
    std::vector<acnn::ScoreRow> scores;
    acnn::evaluate(net, images, labels, limit, threads, &scores);
    acnn::write_text_file((dir / "scores.csv").string(), acnn::scores_to_csv(scores));
    ++files;
  } else {
    throw usage_error("--what: expected one of kernels, real-channels, feature-channels, "
                      "thresholds, scores");
  }

  std::cout << "wrote " << files << " file" << (files == 1 ? "" : "s") << " under "
            << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analytic CNN: build, evaluate, and inspect trained-by-construction networks"};
  app.require_subcommand(1);

  // build
  DataOpts b_data;
  ConfigOpts b_cfg;
  std::string b_out;
  CLI::App* build = app.add_subcommand("build", "construct a network and save it");
  add_data_flags(build, b_data);
  add_config_flags(build, b_cfg);
  build->add_option("--out", b_out, "output network file")->required();

  // classify
  DataOpts c_data;
  std::string c_net;
  int c_index = 0;
  CLI::App* classify = app.add_subcommand("classify", "classify one test image");
  add_data_flags(classify, c_data);
  classify->add_option("--net", c_net, "network file")->required();
  classify->add_option("--index", c_index, "test image index")->capture_default_str();

  // eval
  DataOpts e_data;
  std::string e_net, e_out;
  int e_limit = 1000;
  int e_threads = 0;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a network on the test set");
  add_data_flags(eval_cmd, e_data);
  eval_cmd->add_option("--net", e_net, "network file")->required();
  eval_cmd->add_option("--limit", e_limit, "number of test images")->capture_default_str();
  eval_cmd->add_option("--threads", e_threads, "worker threads (0 = hardware)")
      ->capture_default_str();
  eval_cmd->add_option("--out", e_out, "prefix for confusion.csv and scores.csv");

  // sweep
  DataOpts s_data;
  std::string s_configs = "A,B,C";
  std::string s_seeds = "1,2,3,4,5";
  std::string s_out;
  int s_limit = 1000;
  int s_threads = 0;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "build + evaluate canonical configs across seeds");
  add_data_flags(sweep_cmd, s_data);
  sweep_cmd->add_option("--configs", s_configs, "comma list from {A, B, C}")
      ->capture_default_str();
  sweep_cmd->add_option("--seeds", s_seeds, "comma list of seeds")->capture_default_str();
  sweep_cmd->add_option("--limit", s_limit, "number of test images per run")
      ->capture_default_str();
  sweep_cmd->add_option("--threads", s_threads, "worker threads (0 = hardware)")
      ->capture_default_str();
  sweep_cmd->add_option("--out", s_out, "also write the summary table to this file");

  // dump
  DataOpts d_data;
  std::string d_net, d_what, d_format = "csv", d_out = ".";
  int d_exemplar = 0;
  int d_limit = 1000;
  int d_threads = 0;
  CLI::App* dump = app.add_subcommand("dump", "export network internals");
  add_data_flags(dump, d_data);
  dump->add_option("--net", d_net, "network file")->required();
  dump->add_option("--what", d_what,
                   "kernels | real-channels | feature-channels | thresholds | scores")
      ->required();
  dump->add_option("--format", d_format, "csv | pgm")->capture_default_str();
  dump->add_option("--exemplar", d_exemplar, "exemplar slot for channel dumps")
      ->capture_default_str();
  dump->add_option("--limit", d_limit, "number of test images for score dumps")
      ->capture_default_str();
  dump->add_option("--threads", d_threads, "worker threads (0 = hardware)")
      ->capture_default_str();
  dump->add_option("--out", d_out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      return app.exit(e);  // --help / --version
    }
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "run '" << (argv[0] ? argv[0] : "acnn") << " --help' for usage\n";
    return 2;
  }

  try {
    if (build->parsed()) return run_build(b_data, b_cfg, b_out);
    if (classify->parsed()) return run_classify(c_net, c_data, c_index);
    if (eval_cmd->parsed()) return run_eval(e_net, e_data, e_limit, e_threads, e_out);
    if (sweep_cmd->parsed())
      return run_sweep(s_data, s_configs, s_seeds, s_limit, s_threads, s_out);
    if (dump->parsed())
      return run_dump(d_net, d_data, d_what, d_format, d_exemplar, d_limit, d_threads, d_out);
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
