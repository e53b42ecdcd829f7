// Command-line surface for the M2AENet inference engine: run the network on
// an image, verify pruned/dense equivalence, report analytic FLOPs, and
// micro-benchmark the pruned path.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "m2ae/m2ae.hpp"

namespace {

using nlohmann::json;

constexpr int kExitIo = 1;
constexpr int kExitShape = 2;
constexpr int kExitTolerance = 3;

void write_json_atomic(const json& j, const std::string& path) {
  m2ae::detail::AtomicFileWriter writer(path);
  const std::string text = j.dump(2);
  writer.stream().write(text.data(), static_cast<std::streamsize>(text.size()));
  writer.commit();
}

m2ae::NetworkConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream is(path);
  if (!is) throw m2ae::IoError("cannot open config: " + path);
  json j;
  is >> j;
  return m2ae::config_from_json(j);
}

/// Synthetic mask with the requested fraction of ones, reproducible.
m2ae::BlurMask synthetic_mask(int H, int W, double ratio, uint64_t seed) {
  m2ae::BlurMask m;
  m.hard = m2ae::Tensor({H, W});
  m.probs = m2ae::Tensor({H, W});
  for (int64_t i = 0; i < m.hard.size(); ++i) {
    const bool on = m2ae::to_unit(m2ae::counter_rng(seed, static_cast<uint64_t>(i), 7)) < ratio;
    m.hard.data[i] = on ? 1.0f : 0.0f;
    m.probs.data[i] = on ? 1.0f : 0.0f;
  }
  return m;
}

m2ae::Tensor random_image(int H, int W, uint64_t seed) {
  m2ae::Tensor t({3, H, W});
  for (int64_t i = 0; i < t.size(); ++i)
    t.data[i] = m2ae::uniform_range(m2ae::counter_rng(seed, static_cast<uint64_t>(i), 3), 0.0f,
                                    1.0f);
  return t;
}

int cmd_run(const std::string& image_path, const std::string& weights_path,
            const std::string& out_path, const std::string& mode_str, float threshold,
            const std::string& config_path, const std::string& report_path, uint64_t seed,
            bool deterministic) {
  (void)seed;
  (void)deterministic;  // the engine is single-stream and deterministic throughout
  m2ae::NetworkConfig cfg = load_config(config_path);
  cfg.mode = m2ae::parse_run_mode(mode_str);
  cfg.epsilon = threshold;
  const m2ae::Tensor image = m2ae::load_image(image_path);
  const m2ae::WeightStore weights = m2ae::load_weights(weights_path);

  const auto t0 = std::chrono::steady_clock::now();
  const m2ae::ForwardResult result = m2ae::forward(image, weights, cfg);
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  m2ae::save_image(result.output, out_path);
  json q_per_stage = json::object();
  for (const auto& stage : result.stages) {
    if (!stage.produced) continue;
    q_per_stage[stage.name] = stage.mask.popcount();
    m2ae::save_mask(stage.mask.hard, out_path + "." + stage.name + ".mask.png");
  }
  if (!report_path.empty()) {
    json report = {{"mode", mode_str},
                   {"Q_per_stage", q_per_stage},
                   {"flops",
                    {{"dense", result.ledger.total_dense()},
                     {"actual", result.ledger.total_actual()},
                     {"ratio", result.ledger.total_dense() > 0
                                   ? static_cast<double>(result.ledger.total_actual()) /
                                         result.ledger.total_dense()
                                   : 0.0}}},
                   {"entries", m2ae::flop_report(result.ledger)["entries"]},
                   {"wall_ms", deterministic ? 0.0 : wall_ms}};
    write_json_atomic(report, report_path);
  }
  return 0;
}

int cmd_equiv_check(int trials, int H, int W, uint64_t seed, double tolerance) {
  if (trials == 0) {
    std::cout << "warning: 0 trials requested, vacuous pass\n";
    return 0;
  }
  m2ae::NetworkConfig cfg;
  cfg.encoder_blocks = {1, 1, 1, 2};  // compact network keeps trials fast
  double max_err = 0.0;
  for (int t = 0; t < trials; ++t) {
    const uint64_t trial_seed = seed + static_cast<uint64_t>(t);
    const m2ae::WeightStore ws = m2ae::init_weights(cfg, trial_seed);
    const m2ae::Tensor image = random_image(H, W, trial_seed ^ 0xabcdefull);
    cfg.mode = m2ae::RunMode::kMasked;
    const m2ae::ForwardResult masked = m2ae::forward(image, ws, cfg);
    cfg.mode = m2ae::RunMode::kPruned;
    const m2ae::ForwardResult pruned = m2ae::forward(image, ws, cfg);
    double err = 0.0;
    for (int64_t i = 0; i < masked.output.size(); ++i)
      err = std::max(err, std::abs(static_cast<double>(masked.output.data[i]) -
                                   pruned.output.data[i]));
    max_err = std::max(max_err, err);
    if (err > tolerance) {
      std::cerr << "equivalence violated: max error " << err << " > " << tolerance
                << " at trial seed " << trial_seed << "\n";
      return kExitTolerance;
    }
  }
  std::cout << "max error over " << trials << " trials: " << max_err << "\n";
  return 0;
}

int cmd_flops(int H, int W, const std::string& config_path, double mask_ratio) {
  m2ae::NetworkConfig cfg = load_config(config_path);
  cfg.mode = m2ae::RunMode::kDense;
  const m2ae::FlopLedger dense = m2ae::analytic_flops(cfg, H, W);
  cfg.mode = m2ae::RunMode::kPruned;
  const m2ae::FlopLedger pruned = m2ae::analytic_flops(cfg, H, W, mask_ratio);
  const json report = {{"height", H},
                       {"width", W},
                       {"mask_ratio", mask_ratio},
                       {"dense_macs", dense.total_dense()},
                       {"dense_tmacs", static_cast<double>(dense.total_dense()) / 1e12},
                       {"pruned_macs", pruned.total_actual()},
                       {"pruned_tmacs", static_cast<double>(pruned.total_actual()) / 1e12},
                       {"mac_convention", "1 multiply-accumulate = 1 unit"}};
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_bench(int H, int W, double mask_ratio, int repeat, uint64_t seed) {
  m2ae::NetworkConfig cfg;
  cfg.encoder_blocks = {1, 1, 1, 2};
  cfg.predictor_stages.clear();  // masks are injected synthetically
  const m2ae::WeightStore ws = m2ae::init_weights(cfg, seed);
  const m2ae::Tensor f1 = [&] {
    m2ae::Tensor t({cfg.base_width, H, W});
    for (int64_t i = 0; i < t.size(); ++i)
      t.data[i] =
          m2ae::uniform_range(m2ae::counter_rng(seed, static_cast<uint64_t>(i), 11), -1.0f, 1.0f);
    return t;
  }();
  const m2ae::BlurMask mask = synthetic_mask(H, W, mask_ratio, seed ^ 0x5eedull);
  const m2ae::BlurMask ones = synthetic_mask(H, W, 1.1, seed);
  const m2ae::M2ASBlockParams params = m2ae::detail::load_block(ws, "encoder-1.block0", cfg.base_width);
  const m2ae::OffsetField grid = m2ae::base_grid_offsets(H, W);

  auto median_ms = [&](m2ae::RunMode mode, const m2ae::BlurMask& m) {
    std::vector<double> times;
    for (int r = 0; r < repeat; ++r) {
      m2ae::FlopLedger ledger;
      const auto t0 = std::chrono::steady_clock::now();
      const m2ae::Tensor out = m2ae::m2as_block(f1, params, m, grid, mode, {1}, &ledger);
      times.push_back(
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count());
      if (out.data[0] == 12345.0f) std::cout << "";  // keep the result alive
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
  };

  const double dense_ms = median_ms(m2ae::RunMode::kDense, ones);
  const double pruned_ms = median_ms(m2ae::RunMode::kPruned, mask);
  const json report = {{"height", H},
                       {"width", W},
                       {"mask_ratio", mask_ratio},
                       {"repeat", repeat},
                       {"dense_ms", dense_ms},
                       {"pruned_ms", pruned_ms},
                       {"speedup", pruned_ms > 0 ? dense_ms / pruned_ms : 0.0}};
  std::cout << report.dump(2) << "\n";
  return 0;
}

bool parse_size(const std::string& s, int& H, int& W) {
  const auto pos = s.find('x');
  if (pos == std::string::npos) return false;
  try {
    H = std::stoi(s.substr(0, pos));
    W = std::stoi(s.substr(pos + 1));
  } catch (...) {
    return false;
  }
  return H > 0 && W > 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"M2AENet local-motion-deblurring inference engine"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run the network on an image");
  std::string image_path, weights_path, out_path, config_path, report_path;
  std::string mode = "dense";
  double threshold = 0.5;
  uint64_t seed = 0;
  bool deterministic = false;
  run->add_option("--image", image_path)->required();
  run->add_option("--weights", weights_path)->required();
  run->add_option("--out", out_path)->required();
  run->add_option("--mode", mode)->check(CLI::IsMember({"dense", "masked", "pruned"}));
  run->add_option("--threshold", threshold);
  run->add_option("--config", config_path);
  run->add_option("--report", report_path);
  run->add_option("--seed", seed);
  run->add_flag("--deterministic", deterministic);

  // equiv-check
  auto* equiv = app.add_subcommand("equiv-check", "Randomized pruned-vs-dense comparison");
  int trials = 100;
  std::string size = "32x32";
  double tolerance = 1e-5;
  equiv->add_option("--trials", trials);
  equiv->add_option("--size", size);
  equiv->add_option("--seed", seed);
  equiv->add_option("--tolerance", tolerance);

  // flops
  auto* flops = app.add_subcommand("flops", "Analytic MAC totals without executing tensors");
  int height = 0, width = 0;
  double mask_ratio = 1.0;
  flops->add_option("--height", height)->required();
  flops->add_option("--width", width)->required();
  flops->add_option("--config", config_path);
  flops->add_option("--mask-ratio", mask_ratio);

  // bench
  auto* bench = app.add_subcommand("bench", "Median wall time, dense vs pruned");
  int repeat = 3;
  bench->add_option("--size", size);
  bench->add_option("--mask-ratio", mask_ratio);
  bench->add_option("--repeat", repeat);
  bench->add_option("--seed", seed);

  // init-weights
  auto* init = app.add_subcommand("init-weights", "Random fan-in-scaled initialization");
  init->add_option("--out", out_path)->required();
  init->add_option("--seed", seed);
  init->add_option("--config", config_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(image_path, weights_path, out_path, mode, static_cast<float>(threshold),
                     config_path, report_path, seed, deterministic);
    if (equiv->parsed()) {
      int H, W;
      if (!parse_size(size, H, W)) {
        std::cerr << "invalid --size, expected HxW\n";
        return kExitShape;
      }
      return cmd_equiv_check(trials, H, W, seed, tolerance);
    }
    if (flops->parsed()) {
      if (height <= 0 || width <= 0) {
        std::cerr << "invalid dims\n";
        return kExitShape;
      }
      return cmd_flops(height, width, config_path, mask_ratio);
    }
    if (bench->parsed()) {
      int H, W;
      if (!parse_size(size, H, W)) {
        std::cerr << "invalid --size, expected HxW\n";
        return kExitShape;
      }
      return cmd_bench(H, W, mask_ratio, repeat, seed);
    }
    if (init->parsed()) {
      const m2ae::NetworkConfig cfg = load_config(config_path);
      m2ae::save_weights(m2ae::init_weights(cfg, seed), out_path);
      return 0;
    }
  } catch (const m2ae::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const m2ae::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const m2ae::ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kExitShape;
  } catch (const m2ae::ArgumentError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return kExitShape;
  }
  return 0;
}
