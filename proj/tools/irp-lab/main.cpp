// irp-lab: dataset generation, IRP labelling, predictor training and the evaluation
// applications behind one subcommand-style binary.
//
// Exit codes: 0 success, 1 pipeline error, 2 usage or configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "irp/applications.hpp"
#include "irp/capture_io.hpp"
#include "irp/config.hpp"
#include "irp/error.hpp"
#include "irp/labels.hpp"
#include "irp/manifest.hpp"
#include "irp/predictor.hpp"
#include "irp/training.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration; flags override it");
    app->add_option("--seed", seed, "Seed for every stochastic stage");
    app->add_option("--jobs", jobs, "Worker threads (results do not depend on it)")->check(CLI::Range(1, 256));
  }

  // Config file, then flag overrides, then validation. Config problems are usage errors.
  template <typename Override>
  irp::RunConfig resolve(Override&& override_fields) const {
    irp::RunConfig cfg;
    try {
      if (!config.empty()) {
        const auto bytes = irp::read_file_bytes(config);
        irp::apply_config_json(cfg, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      }
      if (seed) cfg.seed = *seed;
      if (jobs) cfg.jobs = *jobs;
      override_fields(cfg);
      cfg.validate();
    } catch (const irp::ConfigError& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
  irp::RunConfig resolve() const {
    return resolve([](irp::RunConfig&) {});
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  irp::write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

fs::path manifest_root(const fs::path& manifest) {
  return manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
}

std::pair<int, int> parse_size(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t used = 0;
    const int w = std::stoi(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(s);
    const int h = std::stoi(s.substr(x + 1), &used);
    if (used != s.size() - x - 1) throw std::invalid_argument(s);
    return {w, h};
  } catch (const std::exception&) {
    throw UsageError("--size must look like WIDTHxHEIGHT, got '" + s + "'");
  }
}

std::optional<irp::Split> parse_split_arg(const std::string& s) {
  if (s == "all") return std::nullopt;
  try {
    return irp::parse_split(s);
  } catch (const irp::Error& e) {
    throw UsageError(e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"irp-lab: image restoration potential toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "irp-lab 0.1.0");

  // gen
  Common gen_common;
  std::string gen_out;
  std::optional<int> gen_scenes;
  std::string gen_size;
  auto* gen = app.add_subcommand("gen", "Generate a procedural dataset with exposure ladders and a manifest");
  gen_common.attach(gen);
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--scenes", gen_scenes, "Number of scenes")->check(CLI::PositiveNumber);
  gen->add_option("--size", gen_size, "Image size WIDTHxHEIGHT");

  // label
  Common label_common;
  std::string label_manifest, label_out, label_restorers_out, label_restorers_in, label_split = "all";
  auto* label = app.add_subcommand("label", "Fit restoration oracles on the train split and write IRP labels");
  label_common.attach(label);
  label->add_option("--manifest", label_manifest, "Dataset manifest.json")->required();
  label->add_option("--out", label_out, "Labels CSV to write")->required();
  label->add_option("--restorers-out", label_restorers_out,
                    "Where to write the fitted restorer table (default: restorers.json beside --out)");
  label->add_option("--restorers", label_restorers_in, "Reuse a fitted restorer table instead of fitting");
  label->add_option("--split", label_split, "train, val, test or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));

  // train
  Common train_common;
  std::string train_manifest, train_labels, train_out, train_log;
  std::optional<int> train_epochs, train_batch;
  std::optional<double> train_lr;
  bool no_illum = false, no_noise = false, no_blur = false, plain_fusion = false;
  auto* train = app.add_subcommand("train", "Train the IRP predictor");
  train_common.attach(train);
  train->add_option("--manifest", train_manifest, "Dataset manifest.json")->required();
  train->add_option("--labels", train_labels, "Labels CSV")->required();
  train->add_option("--out", train_out, "Checkpoint to write (.irpw)")->required();
  train->add_option("--log", train_log, "Per-epoch CSV log");
  train->add_option("--epochs", train_epochs)->check(CLI::PositiveNumber);
  train->add_option("--batch", train_batch)->check(CLI::PositiveNumber);
  train->add_option("--lr", train_lr)->check(CLI::PositiveNumber);
  train->add_flag("--no-illum", no_illum, "Disable the illumination branch");
  train->add_flag("--no-noise", no_noise, "Disable the noise branch");
  train->add_flag("--no-blur", no_blur, "Disable the blur branch");
  train->add_flag("--plain-fusion", plain_fusion, "Average branch features instead of selective fusion");

  // predict
  std::string predict_model, predict_image, predict_features;
  int predict_m_max = 255;
  auto* predict = app.add_subcommand("predict", "Print the predicted IRP of one capture");
  predict->add_option("--model", predict_model, "Checkpoint (.irpw)")->required();
  predict->add_option("--image", predict_image, "Capture (.png or .irpq)")->required();
  predict->add_option("--m-max", predict_m_max, "Code range of IRPQ captures")->check(CLI::Range(1, 65535));
  predict->add_option("--features", predict_features, "Also write the fused feature map (.irpf)");

  // eval
  Common eval_common;
  std::string eval_model, eval_manifest, eval_labels, eval_out, eval_scores, eval_split = "test";
  auto* eval = app.add_subcommand("eval", "Scene-average and overall SRCC/PLCC on a split");
  eval_common.attach(eval);
  eval->add_option("--model", eval_model, "Checkpoint (.irpw)")->required();
  eval->add_option("--manifest", eval_manifest, "Dataset manifest.json")->required();
  eval->add_option("--labels", eval_labels, "Labels CSV")->required();
  eval->add_option("--split", eval_split)->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--out", eval_out, "Report CSV (default: stdout)");
  eval->add_option("--scores", eval_scores, "Per-capture prediction CSV");

  // filter
  Common filter_common;
  std::string filter_model, filter_restorers, filter_manifest, filter_out;
  auto* filter = app.add_subcommand("filter", "Pick the best frame of synthetic frame groups by predicted IRP");
  filter_common.attach(filter);
  filter->add_option("--model", filter_model, "Checkpoint (.irpw)")->required();
  filter->add_option("--restorers", filter_restorers, "Fitted restorer table from `label`")->required();
  filter->add_option("--manifest", filter_manifest, "Take the exposure ladder from this manifest");
  filter->add_option("--out", filter_out, "Result CSV (default: stdout)");

  // recommend
  Common rec_common;
  std::string rec_model, rec_manifest, rec_labels, rec_out, rec_split = "test";
  auto* recommend = app.add_subcommand("recommend", "Choose an exposure per scene by predicted IRP");
  rec_common.attach(recommend);
  recommend->add_option("--model", rec_model, "Checkpoint (.irpw)")->required();
  recommend->add_option("--manifest", rec_manifest, "Dataset manifest.json")->required();
  recommend->add_option("--labels", rec_labels, "Labels CSV; adds oracle PSNR columns");
  recommend->add_option("--split", rec_split)->check(CLI::IsMember({"train", "val", "test"}));
  recommend->add_option("--out", rec_out, "Result CSV (default: stdout)");

  // sweep
  Common sweep_common;
  std::string sweep_axis, sweep_out;
  std::vector<double> sweep_levels;
  std::optional<int> sweep_seeds;
  auto* sweep = app.add_subcommand("sweep", "Oracle IRP along one degradation axis");
  sweep_common.attach(sweep);
  sweep->add_option("--axis", sweep_axis, "illumination, blur or noise")
      ->check(CLI::IsMember({"illumination", "blur", "noise"}));
  sweep->add_option("--levels", sweep_levels, "Severities, strictly increasing")->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds)->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "Result CSV (default: stdout)");

  // config
  Common config_common;
  auto* config = app.add_subcommand("config", "Print the effective configuration as JSON");
  config_common.attach(config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  auto emit = [](const std::string& path, const std::string& text) {
    if (path.empty()) {
      std::cout << text;
    } else {
      write_text(path, text);
    }
  };

  try {
    if (*gen) {
      const auto cfg = gen_common.resolve([&](irp::RunConfig& c) {
        if (gen_scenes) c.dataset.scenes = *gen_scenes;
        if (!gen_size.empty()) std::tie(c.dataset.width, c.dataset.height) = parse_size(gen_size);
      });
      const auto m = irp::generate_dataset(cfg.dataset_options(), gen_out, cfg.jobs);
      std::cerr << "wrote " << m.scenes.size() << " scenes (" << m.counts.train << " train, " << m.counts.val
                << " val, " << m.counts.test << " test) to " << gen_out << "\n";
    } else if (*label) {
      const auto cfg = label_common.resolve();
      const auto split = parse_split_arg(label_split);
      const auto m = irp::load_manifest(label_manifest);
      const fs::path root = manifest_root(label_manifest);
      irp::verify_manifest_files(m, root);
      irp::FittedRestorers fitted;
      if (!label_restorers_in.empty()) {
        fitted = irp::load_fitted(label_restorers_in);
      } else {
        fitted = irp::fit_restorers(m, root, cfg.jobs);
        const fs::path dst = label_restorers_out.empty() ? fs::path(label_out).parent_path() / "restorers.json"
                                                         : fs::path(label_restorers_out);
        irp::save_fitted(dst, fitted);
      }
      auto opts = cfg.label_options();
      opts.only_split = split;
      const auto records = irp::generate_irp_labels(m, root, fitted, opts);
      irp::save_labels(label_out, records);
      std::cerr << "labelled " << records.size() << " captures\n";
    } else if (*train) {
      const auto cfg = train_common.resolve([&](irp::RunConfig& c) {
        if (train_epochs) c.training.epochs = *train_epochs;
        if (train_batch) c.training.batch = *train_batch;
        if (train_lr) c.training.lr = *train_lr;
        if (no_illum) c.predictor.illumination = false;
        if (no_noise) c.predictor.noise = false;
        if (no_blur) c.predictor.blur = false;
        if (plain_fusion) c.predictor.fusion = irp::FusionMode::PlainSum;
      });
      const auto m = irp::load_manifest(train_manifest);
      const fs::path root = manifest_root(train_manifest);
      const auto labels = irp::load_labels(train_labels);
      const auto train_set = irp::load_training_samples(m, root, labels, irp::Split::Train);
      const auto val_set = irp::load_training_samples(m, root, labels, irp::Split::Val);
      auto opts = cfg.train_options();
      std::string log = "epoch,train_l1,val_l1,val_srcc,best\n";
      opts.on_epoch = [&](const irp::EpochLog& e) {
        std::cerr << "epoch " << e.epoch << "  train_l1 " << fmt(e.train_l1) << "  val_l1 " << fmt(e.val_l1)
                  << "  val_srcc " << fmt(e.val_srcc) << (e.best ? "  *" : "") << "\n";
        log += std::to_string(e.epoch) + "," + fmt(e.train_l1) + "," + fmt(e.val_l1) + "," + fmt(e.val_srcc) + "," +
               (e.best ? "1" : "0") + "\n";
      };
      const auto result = irp::train_predictor(cfg.predictor_config(), train_set, val_set, opts);
      std::cerr << "initial train_l1 " << fmt(result.initial_train_l1) << ", best epoch " << result.best_epoch << "\n";
      if (fs::path(train_out).has_parent_path()) fs::create_directories(fs::path(train_out).parent_path());
      result.model.save(train_out);
      if (!train_log.empty()) write_text(train_log, log);
    } else if (*predict) {
      const auto model = irp::IrpPredictor::load(predict_model);
      const auto img = irp::read_capture(predict_image, predict_m_max);
      std::cout << fmt(model.predict(img)) << "\n";
      if (!predict_features.empty()) {
        const auto bytes = irp::encode_features(model.export_features(img));
        irp::write_file_bytes(predict_features, bytes);
      }
    } else if (*eval) {
      const auto cfg = eval_common.resolve();
      const auto split = irp::parse_split(eval_split);
      const auto model = irp::IrpPredictor::load(eval_model);
      const auto m = irp::load_manifest(eval_manifest);
      const auto labels = irp::load_labels(eval_labels);
      const auto preds = irp::predict_split(model, m, manifest_root(eval_manifest), split, cfg.jobs);
      std::vector<irp::ScoredCapture> joined;
      const auto report = irp::evaluate(preds, labels, m, split, &joined);
      emit(eval_out, irp::eval_report_to_csv(report));
      if (!eval_scores.empty()) write_text(eval_scores, irp::scores_to_csv(joined));
      std::cerr << "scene-average SRCC " << fmt(report.scene_avg_srcc) << "  PLCC " << fmt(report.scene_avg_plcc)
                << "  overall SRCC " << fmt(report.overall_srcc) << "  PLCC " << fmt(report.overall_plcc) << "\n";
    } else if (*filter) {
      const auto cfg = filter_common.resolve();
      const auto model = irp::IrpPredictor::load(filter_model);
      const auto fitted = irp::load_fitted(filter_restorers);
      auto fopts = cfg.filter;
      fopts.seed = cfg.seed;
      fopts.width = cfg.dataset.width;
      fopts.height = cfg.dataset.height;
      fopts.procedural = cfg.dataset.procedural;
      std::vector<irp::ExposureConfig> ladder;
      if (!filter_manifest.empty()) {
        const auto m = irp::load_manifest(filter_manifest);
        if (m.scenes.empty()) throw irp::FormatError("manifest has no scenes");
        for (const auto& c : m.scenes.front().captures) ladder.push_back(c.exposure);
      } else {
        const auto& d = cfg.dataset;
        ladder = irp::make_exposure_ladder(d.base_exposure, d.ladder_size, d.ladder_min, d.ladder_max);
      }
      if (static_cast<std::size_t>(fopts.exposure_index) >= ladder.size()) {
        throw irp::InvalidArgument("filter.exposure_index outside the exposure ladder");
      }
      fopts.exposure = ladder[static_cast<std::size_t>(fopts.exposure_index)];
      auto groups = irp::make_frame_groups(fopts, fitted, cfg.label_options());
      irp::score_frame_groups(groups, model, cfg.jobs);
      const auto result = irp::filter_frames(groups);
      emit(filter_out, irp::filter_result_to_csv(groups, result));
      std::cerr << "accuracy " << fmt(result.accuracy) << "  selected PSNR " << fmt(result.mean_selected_psnr)
                << "  all-frames PSNR " << fmt(result.mean_all_psnr) << "\n";
    } else if (*recommend) {
      const auto cfg = rec_common.resolve();
      (void)cfg;
      const auto split = irp::parse_split(rec_split);
      const auto model = irp::IrpPredictor::load(rec_model);
      const auto m = irp::load_manifest(rec_manifest);
      std::vector<irp::IrpRecord> labels;
      if (!rec_labels.empty()) labels = irp::load_labels(rec_labels);
      auto lookup = [&](const std::string& id, int k) -> std::optional<double> {
        for (const auto& r : labels)
          if (r.scene_id == id && r.exposure_index == k) return r.mean_restored_psnr();
        return std::nullopt;
      };
      std::string csv = "scene_id,recommended,brightest,recommended_psnr,brightest_psnr\n";
      for (const auto* scene : m.scenes_in(split)) {
        const auto spec = irp::scene_spec_for(m, *scene);
        const auto rec = irp::recommend_exposure(spec.ground_truth, spec.flow, spec.exposure_ladder, model,
                                                 spec.base_seed);
        const int bright = irp::brightest_exposure(rec.captures);
        const auto rp = lookup(scene->scene_id, rec.index);
        const auto bp = lookup(scene->scene_id, bright);
        csv += scene->scene_id + "," + std::to_string(rec.index) + "," + std::to_string(bright) + "," +
               (rp ? fmt(*rp) : "") + "," + (bp ? fmt(*bp) : "") + "\n";
      }
      emit(rec_out, csv);
    } else if (*sweep) {
      const auto cfg = sweep_common.resolve([&](irp::RunConfig& c) {
        if (!sweep_axis.empty()) c.sweep.axis = irp::parse_sweep_axis(sweep_axis);
        if (!sweep_levels.empty()) c.sweep.levels = sweep_levels;
        if (sweep_seeds) c.sweep.seeds = *sweep_seeds;
      });
      const auto opts = cfg.sweep_options();
      const auto rows = irp::degradation_sweep(opts, cfg.label_options());
      emit(sweep_out, irp::sweep_to_csv(opts.axis, rows));
    } else if (*config) {
      std::cout << irp::run_config_to_json(config_common.resolve());
    }
  } catch (const UsageError& e) {
    std::cerr << "irp-lab: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "irp-lab: error: " << e.what() << "\n";
    return kExitPipeline;
  }
  return 0;
}
