#include "irp/config.hpp"

#include <cmath>
#include <functional>
#include <map>

#include "irp/capture_io.hpp"
#include "irp/error.hpp"
#include "json.hpp"

namespace irp {

using nlohmann::json;

namespace {

using Setter = std::function<void(const json&, const std::string&)>;

template <typename T>
Setter number(T& dst) {
  return [&dst](const json& v, const std::string& key) {
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) {
          dst = v.get<T>();
        } else {
          const auto i = v.get<long long>();
          if (i < 0) throw ConfigError("config key '" + key + "' must be non-negative");
          dst = static_cast<T>(i);
        }
      } else {
        const auto i = v.get<long long>();
        if (i < std::numeric_limits<T>::min() || i > std::numeric_limits<T>::max()) {
          throw ConfigError("config key '" + key + "' is out of range");
        }
        dst = static_cast<T>(i);
      }
    } else {
      if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
      dst = v.get<T>();
    }
  };
}

Setter boolean(bool& dst) {
  return [&dst](const json& v, const std::string& key) {
    if (!v.is_boolean()) throw ConfigError("config key '" + key + "' must be true or false");
    dst = v.get<bool>();
  };
}

using Section = std::map<std::string, Setter>;

void apply_section(const json& obj, const Section& section, const std::string& prefix) {
  if (!obj.is_object()) throw ConfigError("config key '" + prefix + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    const auto it = section.find(key);
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (it == section.end()) throw ConfigError("unknown config key '" + path + "'");
    it->second(value, path);
  }
}

void check(bool ok, const std::string& key, const std::string& rule) {
  if (!ok) throw ConfigError("config key '" + key + "' " + rule);
}

}  // namespace

void apply_config_json(RunConfig& cfg, std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  auto& d = cfg.dataset;
  auto& e = d.base_exposure;
  auto& p = cfg.predictor;
  auto& t = cfg.training;
  auto& f = cfg.filter;
  auto& s = cfg.sweep;
  auto& m = cfg.labels;

  const Section dataset{{"scenes", number(d.scenes)},         {"width", number(d.width)},
                        {"height", number(d.height)},         {"ladder_size", number(d.ladder_size)},
                        {"ladder_min", number(d.ladder_min)}, {"ladder_max", number(d.ladder_max)},
                        {"split_seed", [&d](const json& v, const std::string& key) {
                           std::uint64_t x = 0;
                           number(x)(v, key);
                           d.split_seed = x;
                         }}};
  const Section exposure{{"full_well", number(e.full_well)},
                         {"read_sigma", number(e.read_sigma)},
                         {"gamma", number(e.gamma)},
                         {"m_max", number(e.m_max)}};
  const Section procedural{{"max_flow", number(d.procedural.max_flow)},
                           {"translation_lo", number(d.procedural.translation_lo)},
                           {"translation_hi", number(d.procedural.translation_hi)}};
  const Section metrics{{"psnr_lo", number(m.psnr_range.lo)}, {"psnr_hi", number(m.psnr_range.hi)},
                        {"ssim_lo", number(m.ssim_range.lo)}, {"ssim_hi", number(m.ssim_range.hi)},
                        {"ssim_window", number(m.ssim.window)}};
  const Section predictor{{"channels", number(p.channels)},
                          {"squeeze_ratio", number(p.squeeze_ratio)},
                          {"fusion_repeats", number(p.fusion_repeats)},
                          {"illumination", boolean(p.illumination)},
                          {"noise", boolean(p.noise)},
                          {"blur", boolean(p.blur)},
                          {"fusion", [&p](const json& v, const std::string& key) {
                             if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
                             try {
                               p.fusion = parse_fusion_mode(v.get<std::string>());
                             } catch (const InvalidArgument& ex) {
                               throw ConfigError("config key '" + key + "': " + ex.what());
                             }
                           }},
                          {"input_size", number(p.input_size)},
                          {"guided_radius", number(p.guided_radius)},
                          {"guided_eps", number(p.guided_eps)}};
  const Section training{{"lr", number(t.lr)},
                         {"epochs", number(t.epochs)},
                         {"batch", number(t.batch)},
                         {"crop", number(t.crop)},
                         {"schedule", [&t](const json& v, const std::string& key) {
                            if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
                            try {
                              t.schedule = parse_lr_schedule(v.get<std::string>());
                            } catch (const InvalidArgument& ex) {
                              throw ConfigError("config key '" + key + "': " + ex.what());
                            }
                          }}};
  const Section filter{{"groups", number(f.groups)},
                       {"frames", number(f.frames)},
                       {"exposure_index", number(f.exposure_index)},
                       {"flow_scale_lo", number(f.flow_scale_lo)},
                       {"flow_scale_hi", number(f.flow_scale_hi)}};
  const Section sweep{{"axis", [&s](const json& v, const std::string& key) {
                         if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
                         try {
                           s.axis = parse_sweep_axis(v.get<std::string>());
                         } catch (const InvalidArgument& ex) {
                           throw ConfigError("config key '" + key + "': " + ex.what());
                         }
                       }},
                      {"levels", [&s](const json& v, const std::string& key) {
                         if (!v.is_array()) throw ConfigError("config key '" + key + "' must be an array of numbers");
                         std::vector<double> levels;
                         for (const auto& x : v) {
                           if (!x.is_number()) throw ConfigError("config key '" + key + "' must hold numbers");
                           levels.push_back(x.get<double>());
                         }
                         s.levels = std::move(levels);
                       }},
                      {"seeds", number(s.seeds)},
                      {"fixed_blur", number(s.fixed_blur)}};

  const std::map<std::string, const Section*> sections{
      {"dataset", &dataset},     {"exposure", &exposure}, {"procedural", &procedural}, {"metrics", &metrics},
      {"predictor", &predictor}, {"training", &training}, {"filter", &filter},         {"sweep", &sweep}};
  Section top{{"seed", number(cfg.seed)}, {"jobs", number(cfg.jobs)}};
  for (const auto& [name, section] : sections) {
    top[name] = [section](const json& v, const std::string& key) { apply_section(v, *section, key); };
  }
  apply_section(doc, top, "");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  RunConfig cfg;
  apply_config_json(cfg, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  check(jobs >= 1 && jobs <= 256, "jobs", "must lie in [1, 256]");
  const auto& d = dataset;
  check(d.scenes >= 1, "dataset.scenes", "must be >= 1");
  check(d.width >= 16 && d.width <= 4096, "dataset.width", "must lie in [16, 4096]");
  check(d.height >= 16 && d.height <= 4096, "dataset.height", "must lie in [16, 4096]");
  check(d.ladder_size >= 1 && d.ladder_size <= 99, "dataset.ladder_size", "must lie in [1, 99]");
  check(d.ladder_min > 0.0 && d.ladder_max >= d.ladder_min, "dataset.ladder_min",
        "must be > 0 and <= dataset.ladder_max");
  check(d.ladder_size == 1 || d.ladder_max > d.ladder_min, "dataset.ladder_max",
        "must exceed dataset.ladder_min for ladders longer than 1");
  const auto& e = d.base_exposure;
  check(e.full_well > 0.0, "exposure.full_well", "must be > 0");
  check(e.read_sigma >= 0.0, "exposure.read_sigma", "must be >= 0");
  check(e.gamma > 0.0 && e.gamma <= 1.0, "exposure.gamma", "must lie in (0, 1]");
  check(e.m_max >= 1 && e.m_max <= 65535, "exposure.m_max", "must lie in [1, 65535]");
  const auto& pr = d.procedural;
  check(pr.max_flow >= 0.0, "procedural.max_flow", "must be >= 0");
  check(pr.translation_lo >= 0.0 && pr.translation_hi >= pr.translation_lo && pr.translation_hi <= 1.0,
        "procedural.translation_lo", "and translation_hi must satisfy 0 <= lo <= hi <= 1");
  check(labels.psnr_range.hi > labels.psnr_range.lo, "metrics.psnr_hi", "must exceed metrics.psnr_lo");
  check(labels.ssim_range.hi > labels.ssim_range.lo, "metrics.ssim_hi", "must exceed metrics.ssim_lo");
  check(labels.ssim.window >= 2, "metrics.ssim_window", "must be >= 2");
  check(labels.ssim.window <= std::min(d.width, d.height), "metrics.ssim_window", "must fit inside the image");
  try {
    predictor_config().validate();
  } catch (const InvalidArgument& ex) {
    throw ConfigError(ex.what());
  }
  check(training.lr > 0.0 && training.lr <= 1.0, "training.lr", "must lie in (0, 1]");
  check(training.epochs >= 1, "training.epochs", "must be >= 1");
  check(training.batch >= 1, "training.batch", "must be >= 1");
  check(training.crop >= 0, "training.crop", "must be >= 0 (0 uses predictor.input_size)");
  check(filter.groups >= 1, "filter.groups", "must be >= 1");
  check(filter.frames >= 2, "filter.frames", "must be >= 2");
  check(filter.exposure_index >= 0 && filter.exposure_index < d.ladder_size, "filter.exposure_index",
        "must index the exposure ladder");
  check(filter.flow_scale_lo >= 0.0 && filter.flow_scale_hi >= filter.flow_scale_lo, "filter.flow_scale_lo",
        "and flow_scale_hi must satisfy 0 <= lo <= hi");
  check(!sweep.levels.empty(), "sweep.levels", "must not be empty");
  for (std::size_t i = 0; i < sweep.levels.size(); ++i) {
    check(sweep.levels[i] >= 0.0 && (i == 0 || sweep.levels[i] > sweep.levels[i - 1]), "sweep.levels",
          "must be non-negative and strictly increasing");
  }
  check(sweep.seeds >= 1, "sweep.seeds", "must be >= 1");
  check(sweep.fixed_blur >= 0.0, "sweep.fixed_blur", "must be >= 0");
}

DatasetOptions RunConfig::dataset_options() const {
  DatasetOptions d = dataset;
  d.seed = seed;
  return d;
}

LabelOptions RunConfig::label_options() const {
  LabelOptions l = labels;
  l.jobs = jobs;
  return l;
}

PredictorConfig RunConfig::predictor_config() const {
  PredictorConfig p = predictor;
  p.gamma = dataset.base_exposure.gamma;
  return p;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions t = training;
  t.seed = seed;
  t.jobs = jobs;
  return t;
}

SweepOptions RunConfig::sweep_options() const {
  SweepOptions s = sweep;
  s.seed = seed;
  s.jobs = jobs;
  s.width = dataset.width;
  s.height = dataset.height;
  s.base = dataset.base_exposure;
  s.procedural = dataset.procedural;
  return s;
}

std::string run_config_to_json(const RunConfig& cfg) {
  const auto& d = cfg.dataset;
  const auto& e = d.base_exposure;
  const auto& p = cfg.predictor;
  json j;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["dataset"] = {{"scenes", d.scenes},         {"width", d.width},          {"height", d.height},
                  {"ladder_size", d.ladder_size}, {"ladder_min", d.ladder_min}, {"ladder_max", d.ladder_max}};
  if (d.split_seed) j["dataset"]["split_seed"] = *d.split_seed;
  j["exposure"] = {{"full_well", e.full_well}, {"read_sigma", e.read_sigma}, {"gamma", e.gamma}, {"m_max", e.m_max}};
  j["procedural"] = {{"max_flow", d.procedural.max_flow},
                     {"translation_lo", d.procedural.translation_lo},
                     {"translation_hi", d.procedural.translation_hi}};
  j["metrics"] = {{"psnr_lo", cfg.labels.psnr_range.lo}, {"psnr_hi", cfg.labels.psnr_range.hi},
                  {"ssim_lo", cfg.labels.ssim_range.lo}, {"ssim_hi", cfg.labels.ssim_range.hi},
                  {"ssim_window", cfg.labels.ssim.window}};
  j["predictor"] = {{"channels", p.channels},
                    {"squeeze_ratio", p.squeeze_ratio},
                    {"fusion_repeats", p.fusion_repeats},
                    {"illumination", p.illumination},
                    {"noise", p.noise},
                    {"blur", p.blur},
                    {"fusion", std::string(to_string(p.fusion))},
                    {"input_size", p.input_size},
                    {"guided_radius", p.guided_radius},
                    {"guided_eps", p.guided_eps}};
  j["training"] = {{"lr", cfg.training.lr},
                   {"epochs", cfg.training.epochs},
                   {"batch", cfg.training.batch},
                   {"crop", cfg.training.crop},
                   {"schedule", std::string(to_string(cfg.training.schedule))}};
  j["filter"] = {{"groups", cfg.filter.groups},
                 {"frames", cfg.filter.frames},
                 {"exposure_index", cfg.filter.exposure_index},
                 {"flow_scale_lo", cfg.filter.flow_scale_lo},
                 {"flow_scale_hi", cfg.filter.flow_scale_hi}};
  j["sweep"] = {{"axis", std::string(to_string(cfg.sweep.axis))},
                {"levels", cfg.sweep.levels},
                {"seeds", cfg.sweep.seeds},
                {"fixed_blur", cfg.sweep.fixed_blur}};
  return j.dump(2) + "\n";
}

}  // namespace irp
