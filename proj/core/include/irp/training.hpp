#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "irp/image.hpp"
#include "irp/labels.hpp"
#include "irp/manifest.hpp"
#include "irp/predictor.hpp"

namespace irp {

struct TrainingSample {
  std::string scene_id;
  int exposure_index = 0;
  QuantizedImage image;
  double label = 0.0;  // oracle final IRP
};

// Captures of every scene in `split` paired with their final IRP labels. Throws
// InvalidArgument listing the captures that have no label.
std::vector<TrainingSample> load_training_samples(const DatasetManifest& m, const std::filesystem::path& root,
                                                  const std::vector<IrpRecord>& labels, Split split);

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_l1 = 0.0;
  double val_l1 = 0.0;
  double val_srcc = 0.0;  // scene average; NaN without usable validation scenes
  bool best = false;
};

enum class LrSchedule { Constant, Cosine };
std::string_view to_string(LrSchedule s);
LrSchedule parse_lr_schedule(std::string_view s);

struct TrainOptions {
  double lr = 1e-3;
  // Cosine decays the rate from lr towards 0 over the epochs, one value per epoch.
  LrSchedule schedule = LrSchedule::Cosine;
  int epochs = 30;
  int batch = 8;
  std::uint64_t seed = 0;
  // Square crop side; 0 uses the predictor's input_size. Images no larger than the crop
  // are used whole.
  int crop = 0;
  int jobs = 1;  // validation scoring only; training order is fixed
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  IrpPredictor model;
  std::vector<EpochLog> history;
  int best_epoch = 0;
  // Mean |label - prediction| over the training set before the first update.
  double initial_train_l1 = 0.0;
};

// Adam on the L1 loss. Per epoch the training set is shuffled by the seed, cropped at a
// seeded random offset and processed in minibatches whose gradients are accumulated in
// sample order. The returned model is the epoch with the lowest validation L1 (ties: higher
// validation scene-average SRCC); without validation data, the lowest training L1.
TrainResult train_predictor(const PredictorConfig& cfg, const std::vector<TrainingSample>& train,
                            const std::vector<TrainingSample>& val, const TrainOptions& opts);

// Predictions for each sample on the whole image, in input order.
std::vector<double> predict_samples(const IrpPredictor& model, const std::vector<TrainingSample>& samples,
                                    int jobs = 1);

QuantizedImage crop_image(const QuantizedImage& img, int x0, int y0, int width, int height);

}  // namespace irp
