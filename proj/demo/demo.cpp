// End-to-end walk through on synthetic night frames:
// APA -> short training -> tiled inference -> stats -> EEI with the shipped calibration.
// Usage: lowlight_demo [out_dir] [calibration.cal]

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

#include "lowlight/lowlight.hpp"

using namespace lowlight;
namespace fs = std::filesystem;

namespace {

// Dim gradient with a few bright "street lights" and sensor noise.
Image night_frame(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1);
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double base = 0.02 + 0.08 * x / w + 0.04 * std::sin(0.05 * y);
      img.at(0, y, x) = static_cast<float>(std::clamp(base * 1.3 + noise(rng), 0.0, 1.0));
      img.at(1, y, x) = static_cast<float>(std::clamp(base + noise(rng), 0.0, 1.0));
      img.at(2, y, x) = static_cast<float>(std::clamp(base * 0.8 + noise(rng), 0.0, 1.0));
    }
  for (int k = 0; k < 4; ++k) {
    const int cx = px(rng), cy = py(rng);
    for (int y = std::max(0, cy - 6); y < std::min(h, cy + 6); ++y)
      for (int x = std::max(0, cx - 6); x < std::min(w, cx + 6); ++x)
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = 1.0f;
  }
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? argv[1] : "demo_out";
  const std::string cal = argc > 2 ? argv[2] : "data/calibration/rtx3090_table.cal";
  try {
    fs::create_directories(out / "raw");
    fs::create_directories(out / "apa");
    std::vector<TrainingPair> pairs;
    for (unsigned i = 0; i < 8; ++i) {
      const auto name = "night" + std::to_string(i) + ".png";
      auto raw = night_frame(128, 96, 10 + i);
      auto aug = apa_transform(raw, ApaParams{});
      save_image(out / "raw" / name, raw);
      save_image(out / "apa" / name, aug);
      pairs.push_back({name, raw, aug});
    }
    std::cout << "wrote 8 raw frames and their APA versions under " << out << '\n';

    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.base_lr = 5e-3;
    cfg.warmup_epochs = 2;
    cfg.decay_every = 20;
    cfg.micro_batch = 4;
    cfg.accum_steps = 2;
    cfg.patch = 64;
    TrainOptions opt;
    opt.out_dir = out / "run";
    const auto res = train_pairs(pairs, cfg, LossConfig{}, opt);
    std::cout << "trained " << res.steps.size() << " steps, loss " << res.steps.front().loss.total << " -> "
              << res.steps.back().loss.total << ", best epoch " << res.best_epoch << '\n';

    const auto net = load_checkpoint<float>(res.best_checkpoint);
    const auto big = night_frame(640, 480, 99);
    const auto enhanced = enhance_tiled(net, big, kDefaultPatchSize, kDefaultPatchOverlap, net.iterations());
    save_image(out / "big_raw.png", big);
    save_image(out / "big_enhanced.png", enhanced);
    const auto before = compute_stats(big), after = compute_stats(enhanced);
    std::cout << "640x480 tiled inference: luminance " << before.mean_luminance << " -> " << after.mean_luminance
              << ", entropy " << before.entropy << " -> " << after.entropy << " bits\n";

    // numbers for a 4K deployment, taken from the published measurements; PI from two score rows
    if (fs::exists(cal)) {
      std::istringstream scores("filename,niqe,brisque\na.png,4.30,29.92\nb.png,3.89,39.43\n");
      EeiInputs in;
      in.resolution = kUhdResolution;
      in.time_model_s = 0.04182;
      in.mem_model_bytes = 2.756e9;
      in.flops_model = 9.91e9;
      in.params_model = static_cast<double>(net.parameter_count());
      in.pi = pi_from_rows(parse_scores(scores));
      write_report_table(std::cout, in, eei_score(in, load_calibration(cal)));
    } else {
      std::cout << "calibration file " << cal << " not found; skipping EEI\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "demo failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
