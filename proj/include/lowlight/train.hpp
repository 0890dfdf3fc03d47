#pragma once

// Training loop: seeded crop sampling, gradient accumulation over
// micro-batches, global-norm clipping, Adam with decoupled decay, periodic
// validation and best/last checkpoints.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "lowlight/checkpoint.hpp"
#include "lowlight/curve.hpp"
#include "lowlight/eei.hpp"
#include "lowlight/image_io.hpp"
#include "lowlight/losses.hpp"
#include "lowlight/optim.hpp"
#include "lowlight/parallel.hpp"
#include "lowlight/profiling.hpp"
#include "lowlight/stats.hpp"

namespace lowlight {

struct TrainingPair {
  std::string name;
  Image input;
  Image augmented;  // APA output for the same frame
};

/// Pairs every image in dataset_dir with the same filename in apa_dir.
inline std::vector<TrainingPair> load_training_pairs(const std::filesystem::path& dataset_dir,
                                                     const std::filesystem::path& apa_dir) {
  const auto files = list_images(dataset_dir);
  if (files.empty()) throw InvalidInput("train: no images in " + dataset_dir.string());
  std::vector<std::string> orphans;
  for (const auto& f : files)
    if (!std::filesystem::exists(apa_dir / f.filename())) orphans.push_back(f.filename().string());
  if (!orphans.empty()) {
    std::string msg = "train: no augmented counterpart in " + apa_dir.string() + " for:";
    for (const auto& o : orphans) msg += " " + o;
    throw InvalidInput(msg);
  }
  std::vector<TrainingPair> pairs;
  pairs.reserve(files.size());
  for (const auto& f : files) {
    TrainingPair p{f.filename().string(), load_image(f), load_image(apa_dir / f.filename())};
    if (!p.input.same_shape(p.augmented)) throw InvalidInput("train: size mismatch between input and augmented " + p.name);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

struct StepRecord {
  long long step = 0;  // 1-based optimizer step
  int epoch = 0;
  double lr = 0.0;
  LossBreakdown loss;  // mean over the effective batch
  double grad_norm = 0.0;  // before clipping
};

inline void write_step_header(std::ostream& out) {
  out << "step,epoch,lr,total,int_dark,int_bright,int_global,spa,col,tv,grad_norm\n";
}

inline void write_step_row(std::ostream& out, const StepRecord& r) {
  const auto& b = r.loss;
  out << r.step << ',' << r.epoch << ',' << format_real(r.lr) << ',' << format_real(b.total) << ','
      << format_real(b.int_dark) << ',' << format_real(b.int_bright) << ',' << format_real(b.int_global) << ','
      << format_real(b.spa) << ',' << format_real(b.col) << ',' << format_real(b.tv) << ','
      << format_real(r.grad_norm) << '\n';
}

class Trainer {
 public:
  Trainer(std::vector<TrainingPair> data, TrainConfig cfg, LossConfig loss, CurveNet<float> net)
      : data_(std::move(data)), cfg_(cfg), loss_(loss), net_(std::move(net)), adam_(net_.parameter_count()),
        rng_(cfg.seed) {
    cfg_.validate();
    loss_.validate();
    if (data_.empty()) throw InvalidInput("train: empty dataset");
    for (const auto& p : data_) {
      require_channels(p.input.channels(), 3, "train");
      require_same_shape(p.input, p.augmented, "train pair " + p.name);
    }
  }

  int batch_size() const { return cfg_.micro_batch * cfg_.accum_steps; }
  int steps_per_epoch() const {
    const int n = static_cast<int>(data_.size());
    return std::max(1, (n + batch_size() - 1) / batch_size());
  }

  /// One optimizer step: accum_steps micro-batches, gradient = mean over all samples.
  StepRecord step(int epoch) {
    const std::size_t np = net_.parameter_count();
    std::vector<double> grad(np, 0.0);
    LossBreakdown sum;
    const int micro = cfg_.micro_batch;
    for (int a = 0; a < cfg_.accum_steps; ++a) {
      std::vector<std::pair<Image, Image>> batch;
      batch.reserve(micro);
      for (int m = 0; m < micro; ++m) batch.push_back(sample_crop(next_index()));
      std::vector<TotalLoss<float>> results(batch.size());
      parallel_for(0, micro, [&](int m) {
        results[m] = total_loss(batch[m].first, batch[m].second, net_, loss_, net_.iterations());
      });
      // summation order is fixed whatever the thread count
      for (const auto& r : results) {
        for (std::size_t i = 0; i < np; ++i) grad[i] += static_cast<double>(r.grad[i]);
        add_breakdown(sum, r.breakdown);
      }
    }
    const double n = static_cast<double>(batch_size());
    std::vector<float> g(np);
    for (std::size_t i = 0; i < np; ++i) g[i] = static_cast<float>(grad[i] / n);
    StepRecord rec;
    rec.step = ++steps_;
    rec.epoch = epoch;
    rec.lr = lr_at(epoch, cfg_);
    rec.loss = scale_breakdown(sum, 1.0 / n);
    rec.grad_norm = clip_gradients(std::span<float>(g), cfg_.clip_norm);
    adam_step(net_.params(), std::span<const float>(g), adam_, rec.lr, cfg_.weight_decay);
    return rec;
  }

  std::vector<StepRecord> run_epoch(int epoch) {
    std::vector<StepRecord> out;
    for (int s = 0; s < steps_per_epoch(); ++s) out.push_back(step(epoch));
    return out;
  }

  const CurveNet<float>& net() const { return net_; }
  CurveNet<float>& net() { return net_; }
  const TrainConfig& config() const { return cfg_; }
  const LossConfig& loss_config() const { return loss_; }
  long long steps() const { return steps_; }

 private:
  static void add_breakdown(LossBreakdown& s, const LossBreakdown& b) {
    s.total += b.total;
    s.int_dark += b.int_dark;
    s.int_bright += b.int_bright;
    s.int_global += b.int_global;
    s.spa += b.spa;
    s.col += b.col;
    s.tv += b.tv;
  }

  static LossBreakdown scale_breakdown(LossBreakdown b, double k) {
    b.total *= k;
    b.int_dark *= k;
    b.int_bright *= k;
    b.int_global *= k;
    b.spa *= k;
    b.col *= k;
    b.tv *= k;
    return b;
  }

  // Walks a seeded permutation, reshuffling each time it is exhausted.
  std::size_t next_index() {
    if (cursor_ >= order_.size()) {
      order_.resize(data_.size());
      for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
      for (std::size_t i = order_.size() - 1; i > 0; --i) std::swap(order_[i], order_[rng_() % (i + 1)]);
      cursor_ = 0;
    }
    return order_[cursor_++];
  }

  // Same window from the input and its augmented twin.
  std::pair<Image, Image> sample_crop(std::size_t idx) {
    const auto& p = data_[idx];
    const int w = p.input.width(), h = p.input.height();
    const int cw = std::min(cfg_.patch, w), ch = std::min(cfg_.patch, h);
    const int x0 = static_cast<int>(rng_() % static_cast<std::uint64_t>(w - cw + 1));
    const int y0 = static_cast<int>(rng_() % static_cast<std::uint64_t>(h - ch + 1));
    return {crop(p.input, x0, y0, cw, ch), crop(p.augmented, x0, y0, cw, ch)};
  }

  std::vector<TrainingPair> data_;
  TrainConfig cfg_;
  LossConfig loss_;
  CurveNet<float> net_;
  AdamState adam_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  long long steps_ = 0;
};

// ---- validation ----------------------------------------------------------------

struct ValidationOptions {
  int patch = kDefaultPatchSize;
  int overlap = kDefaultPatchOverlap;
  std::optional<std::filesystem::path> scores_file;  // external NIQE/BRISQUE scores
  std::optional<CalibrationBaseline> calibration;    // needed for EEI
  EeiWeights weights;
  ProfileOptions profile{1, 3};
};

struct ValidationRow {
  int epoch = 0;
  std::size_t images = 0;
  double val_loss = 0.0;  // lambda-weighted int + spa + col on the enhanced frames
  ImageStats stats;       // mean over images
  std::optional<double> pi;
  std::optional<double> e_norm;
  std::optional<double> eei;

  /// Lower is better: EEI when available, otherwise the validation loss.
  double selection_score() const { return eei ? *eei : val_loss; }
};

inline std::size_t select_best(const std::vector<ValidationRow>& rows) {
  if (rows.empty()) throw InvalidInput("select_best: no validation rows");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].selection_score() < rows[best].selection_score()) best = i;
  return best;
}

using NamedImage = std::pair<std::string, Image>;

inline std::vector<NamedImage> load_named_images(const std::filesystem::path& dir) {
  std::vector<NamedImage> out;
  for (const auto& f : list_images(dir)) out.emplace_back(f.filename().string(), load_image(f));
  if (out.empty()) throw InvalidInput("validate: no images in " + dir.string());
  return out;
}

/// Tiled inference over the validation set plus stats and, with scores and a
/// calibration baseline, an EEI for the current weights.
inline ValidationRow validate(const CurveNet<float>& net, const std::vector<NamedImage>& images,
                              const LossConfig& loss, const ValidationOptions& opt = {}) {
  if (images.empty()) throw InvalidInput("validate: empty validation set");
  ValidationRow row;
  row.images = images.size();
  for (const auto& [name, img] : images) {
    const Image enh = enhance_tiled(net, img, opt.patch, opt.overlap, net.iterations());
    const auto li = l_int(enh, loss.lint, loss.luminance);
    const auto ls = l_spa(enh, img, loss.luminance);
    const auto lc = l_col(enh);
    row.val_loss += loss.lambda_int * li.value + loss.lambda_spa * ls.value + loss.lambda_col * lc.value;
    const auto s = compute_stats(enh);
    row.stats.mean_luminance += s.mean_luminance;
    row.stats.contrast += s.contrast;
    row.stats.entropy += s.entropy;
    row.stats.sharpness += s.sharpness;
    for (int c = 0; c < 3; ++c) row.stats.mean_lab[c] += s.mean_lab[c];
  }
  const double n = static_cast<double>(images.size());
  row.val_loss /= n;
  row.stats.mean_luminance /= n;
  row.stats.contrast /= n;
  row.stats.entropy /= n;
  row.stats.sharpness /= n;
  for (auto& v : row.stats.mean_lab) v /= n;

  if (opt.scores_file) {
    row.pi = pi_from_scores(*opt.scores_file);
    if (opt.calibration) {
      CurveNetAdapter adapter(net);
      AllocationProbe probe;
      const auto& first = images.front().second;
      auto prof = profile_model(adapter, Resolution{first.width(), first.height()}, probe, opt.profile);
      prof.inputs.pi = *row.pi;
      const auto rep = eei_score(prof.inputs, *opt.calibration, opt.weights);
      row.e_norm = rep.e_norm;
      row.eei = rep.eei;
    }
  }
  return row;
}

inline ValidationRow validate_checkpoint(const std::filesystem::path& checkpoint, const std::filesystem::path& val_dir,
                                         const LossConfig& loss, const ValidationOptions& opt = {}) {
  return validate(load_checkpoint<float>(checkpoint), load_named_images(val_dir), loss, opt);
}

inline void write_validation_header(std::ostream& out) {
  out << "epoch,images,val_loss,luminance,contrast,entropy,sharpness,lab_l,lab_a,lab_b,pi,e_norm,eei\n";
}

inline void write_validation_row(std::ostream& out, const ValidationRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  out << r.epoch << ',' << r.images << ',' << format_real(r.val_loss) << ',' << format_real(r.stats.mean_luminance)
      << ',' << format_real(r.stats.contrast) << ',' << format_real(r.stats.entropy) << ','
      << format_real(r.stats.sharpness) << ',' << format_real(r.stats.mean_lab[0]) << ','
      << format_real(r.stats.mean_lab[1]) << ',' << format_real(r.stats.mean_lab[2]) << ',' << opt(r.pi) << ','
      << opt(r.e_norm) << ',' << opt(r.eei) << '\n';
}

// ---- full run ------------------------------------------------------------------

struct TrainOptions {
  std::filesystem::path out_dir = "runs";
  std::vector<NamedImage> validation;  // empty: select on epoch-mean training loss
  ValidationOptions val;
  int width = kDefaultCurveWidth;
  int iterations = kDefaultCurveIterations;
  std::optional<CurveNet<float>> init;  // otherwise Gaussian init from cfg.seed
  std::ostream* log = nullptr;          // key=value progress lines
};

struct TrainResult {
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::filesystem::path step_log;
  std::filesystem::path validation_log;
  std::vector<StepRecord> steps;
  std::vector<ValidationRow> validation;
  int best_epoch = -1;
};

/// Validation runs after epoch e when (e + 1) % validate_every == 0 and after the last epoch.
inline bool is_validation_epoch(int epoch, const TrainConfig& cfg) {
  return (epoch + 1) % cfg.validate_every == 0 || epoch + 1 == cfg.epochs;
}

inline TrainResult train_pairs(std::vector<TrainingPair> pairs, const TrainConfig& cfg, const LossConfig& loss,
                               const TrainOptions& opt = {}) {
  CurveNet<float> net(opt.width, opt.iterations);
  if (opt.init) {
    net = *opt.init;
  } else {
    net.init_gaussian(cfg.seed);
  }
  Trainer trainer(std::move(pairs), cfg, loss, std::move(net));

  std::filesystem::create_directories(opt.out_dir);
  TrainResult res;
  res.best_checkpoint = opt.out_dir / "best.llw";
  res.last_checkpoint = opt.out_dir / "last.llw";
  res.step_log = opt.out_dir / "train_log.csv";
  res.validation_log = opt.out_dir / "validation.csv";
  std::ofstream steps_csv(res.step_log, std::ios::trunc);
  if (!steps_csv) throw IoError("cannot write " + res.step_log.string());
  write_step_header(steps_csv);
  std::ofstream val_csv;
  if (!opt.validation.empty()) {
    val_csv.open(res.validation_log, std::ios::trunc);
    if (!val_csv) throw IoError("cannot write " + res.validation_log.string());
    write_validation_header(val_csv);
  }

  double best = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto recs = trainer.run_epoch(epoch);
    double epoch_loss = 0.0;
    for (const auto& r : recs) {
      write_step_row(steps_csv, r);
      epoch_loss += r.loss.total;
      res.steps.push_back(r);
    }
    steps_csv.flush();
    epoch_loss /= static_cast<double>(recs.size());
    save_checkpoint(res.last_checkpoint, trainer.net());

    std::optional<double> score;
    if (opt.validation.empty()) {
      score = epoch_loss;
    } else if (is_validation_epoch(epoch, cfg)) {
      auto row = validate(trainer.net(), opt.validation, loss, opt.val);
      row.epoch = epoch;
      write_validation_row(val_csv, row);
      val_csv.flush();
      score = row.selection_score();
      res.validation.push_back(row);
    }
    if (score && *score < best) {
      best = *score;
      res.best_epoch = epoch;
      save_checkpoint(res.best_checkpoint, trainer.net());
    }
    if (opt.log) {
      *opt.log << "event=epoch epoch=" << epoch << " lr=" << format_real(lr_at(epoch, cfg))
               << " loss=" << format_real(epoch_loss);
      if (score) *opt.log << " score=" << format_real(*score);
      *opt.log << '\n';
    }
  }
  // NaN scores never compare below infinity; keep a best file regardless
  if (res.best_epoch < 0) {
    res.best_epoch = cfg.epochs - 1;
    save_checkpoint(res.best_checkpoint, trainer.net());
  }
  return res;
}

inline TrainResult train(const std::filesystem::path& dataset_dir, const std::filesystem::path& apa_dir,
                         const TrainConfig& cfg, const LossConfig& loss, const TrainOptions& opt = {}) {
  cfg.validate();
  loss.validate();
  return train_pairs(load_training_pairs(dataset_dir, apa_dir), cfg, loss, opt);
}

}  // namespace lowlight
