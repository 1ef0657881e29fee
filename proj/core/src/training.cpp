#include "irp/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>

#include "irp/capture_io.hpp"
#include "irp/error.hpp"
#include "irp/evaluation.hpp"
#include "irp/nn/ops.hpp"
#include "irp/nn/optim.hpp"
#include "irp/parallel.hpp"
#include "irp/rng.hpp"

namespace irp {

std::vector<TrainingSample> load_training_samples(const DatasetManifest& m, const std::filesystem::path& root,
                                                  const std::vector<IrpRecord>& labels, Split split) {
  std::map<std::pair<std::string, int>, double> by_key;
  for (const auto& r : labels) by_key[{r.scene_id, r.exposure_index}] = r.final_irp;
  std::vector<TrainingSample> out;
  std::vector<std::string> missing;
  for (const auto* scene : m.scenes_in(split)) {
    for (const auto& cap : scene->captures) {
      const auto it = by_key.find({scene->scene_id, cap.exposure_index});
      if (it == by_key.end()) {
        missing.push_back(scene->scene_id + "/" + std::to_string(cap.exposure_index));
        continue;
      }
      out.push_back({scene->scene_id, cap.exposure_index, read_capture(root / cap.file.path, cap.exposure.m_max),
                     it->second});
    }
  }
  if (!missing.empty()) {
    std::string msg = "labels missing for " + std::to_string(missing.size()) + " capture(s):";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ...";
    throw InvalidArgument(msg);
  }
  return out;
}

QuantizedImage crop_image(const QuantizedImage& img, int x0, int y0, int width, int height) {
  if (x0 < 0 || y0 < 0 || width < 1 || height < 1 || x0 + width > img.width() || y0 + height > img.height()) {
    throw DimensionError("crop outside image bounds");
  }
  QuantizedImage out(width, height, img.channels(), img.m_max());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < img.channels(); ++c) out.set(x, y, c, img.at(x0 + x, y0 + y, c));
  return out;
}

std::vector<double> predict_samples(const IrpPredictor& model, const std::vector<TrainingSample>& samples,
                                    int jobs) {
  std::vector<double> out(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) { out[i] = model.predict(samples[i].image); });
  return out;
}

std::string_view to_string(LrSchedule s) { return s == LrSchedule::Cosine ? "cosine" : "constant"; }

LrSchedule parse_lr_schedule(std::string_view s) {
  if (s == "cosine") return LrSchedule::Cosine;
  if (s == "constant") return LrSchedule::Constant;
  throw InvalidArgument("unknown learning-rate schedule '" + std::string(s) + "' (expected cosine or constant)");
}

namespace {

double mean_l1(const std::vector<double>& pred, const std::vector<TrainingSample>& samples) {
  double s = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) s += std::abs(pred[i] - samples[i].label);
  return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
}

}  // namespace

TrainResult train_predictor(const PredictorConfig& cfg, const std::vector<TrainingSample>& train,
                            const std::vector<TrainingSample>& val, const TrainOptions& opts) {
  if (train.empty()) throw InvalidArgument("train_predictor: empty training set");
  if (opts.epochs < 1) throw InvalidArgument("train_predictor: epochs must be >= 1");
  if (opts.batch < 1) throw InvalidArgument("train_predictor: batch must be >= 1");
  if (!(opts.lr > 0.0)) throw InvalidArgument("train_predictor: lr must be > 0");
  const int crop = opts.crop > 0 ? opts.crop : cfg.input_size;

  IrpPredictor model(cfg, derive_seed(opts.seed, seed_tag("train.init")));
  IrpPredictor best(cfg, 0);
  best.copy_parameters_from(model);

  // Whole-image inputs are reused every epoch; only larger images are re-cropped.
  std::vector<std::optional<PreparedInput>> cached(train.size());
  parallel_for(train.size(), opts.jobs, [&](std::size_t i) {
    const auto& img = train[i].image;
    if (img.width() <= crop && img.height() <= crop) cached[i] = prepare_input(img, cfg);
  });

  TrainResult result{model, {}, 0, 0.0};
  result.initial_train_l1 = mean_l1(predict_samples(model, train, opts.jobs), train);

  auto params = model.parameters().tensors();
  nn::AdamState adam;
  nn::AdamOptions adam_opts;
  adam_opts.lr = opts.lr;
  auto rng = make_rng(opts.seed, "train.order");

  double best_srcc = -std::numeric_limits<double>::infinity();
  double best_val_l1 = std::numeric_limits<double>::infinity();
  double best_train_l1 = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train.size());
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    if (opts.schedule == LrSchedule::Cosine) {
      adam_opts.lr = 0.5 * opts.lr * (1.0 + std::cos(std::numbers::pi * (epoch - 1) / opts.epochs));
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opts.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(opts.batch));
      model.parameters().zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const auto& sample = train[order[k]];
        PreparedInput prepared;
        if (cached[order[k]]) {
          prepared = *cached[order[k]];
        } else {
          const int cw = std::min(crop, sample.image.width()), ch = std::min(crop, sample.image.height());
          const int x0 = static_cast<int>(rng() % static_cast<std::uint64_t>(sample.image.width() - cw + 1));
          const int y0 = static_cast<int>(rng() % static_cast<std::uint64_t>(sample.image.height() - ch + 1));
          prepared = prepare_input(crop_image(sample.image, x0, y0, cw, ch), cfg);
        }
        const auto pred = model.forward(prepared);
        const auto loss = nn::l1_loss(pred, nn::Tensor({1}, std::vector<double>{sample.label}));
        loss_sum += loss.item();
        nn::backward(nn::scale(loss, 1.0 / static_cast<double>(end - start)));
      }
      nn::adam_step(params, adam, adam_opts);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_l1 = loss_sum / static_cast<double>(train.size());
    if (!val.empty()) {
      const auto pred = predict_samples(model, val, opts.jobs);
      log.val_l1 = mean_l1(pred, val);
      std::vector<ScoredCapture> scored;
      for (std::size_t i = 0; i < val.size(); ++i) {
        scored.push_back({val[i].scene_id, val[i].exposure_index, pred[i], val[i].label});
      }
      log.val_srcc = evaluate_scores(scored).scene_avg_srcc;
      // Per-scene SRCC over a short ladder is coarse and saturates early, so it only breaks ties.
      const double s = std::isnan(log.val_srcc) ? -2.0 : log.val_srcc;
      log.best = log.val_l1 < best_val_l1 || (log.val_l1 == best_val_l1 && s > best_srcc);
      if (log.best) {
        best_srcc = s;
        best_val_l1 = log.val_l1;
      }
    } else {
      log.val_l1 = log.val_srcc = std::numeric_limits<double>::quiet_NaN();
      log.best = log.train_l1 < best_train_l1;
      if (log.best) best_train_l1 = log.train_l1;
    }
    if (log.best) {
      best.copy_parameters_from(model);
      result.best_epoch = epoch;
    }
    result.history.push_back(log);
    if (opts.on_epoch) opts.on_epoch(log);
  }
  result.model = best;
  return result;
}

}  // namespace irp
