#include "irp/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "irp/capture_io.hpp"
#include "irp/error.hpp"
#include "irp/imaging.hpp"
#include "irp/nn/checkpoint.hpp"
#include "irp/nn/ops.hpp"
#include "irp/rng.hpp"

namespace irp {

using nn::Tensor;

namespace {

constexpr int kHistBins = 256;
constexpr int kHistPool = 8;
constexpr double kFuseSumTolerance = 1e-12;
constexpr double kConfigFormat = 1.0;

std::size_t reduced(std::size_t n) {
  // Stride-2 stem (3x3, pad 1) followed by 2x2 pooling.
  const std::size_t stem = (n - 1) / 2 + 1;
  return stem / 2;
}

}  // namespace

std::string_view to_string(FusionMode m) { return m == FusionMode::Selective ? "selective" : "plain-sum"; }

FusionMode parse_fusion_mode(std::string_view s) {
  if (s == "selective") return FusionMode::Selective;
  if (s == "plain-sum") return FusionMode::PlainSum;
  throw InvalidArgument("unknown fusion mode '" + std::string(s) + "' (expected selective or plain-sum)");
}

std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::Illumination: return "illum";
    case Branch::Noise: return "noise";
    case Branch::Blur: return "blur";
  }
  return "?";
}

void PredictorConfig::validate() const {
  if (channels < 2 || channels % 2 != 0) throw InvalidArgument("predictor.channels must be an even number >= 2");
  if (squeeze_ratio < 1 || channels % squeeze_ratio != 0) {
    throw InvalidArgument("predictor.squeeze_ratio must divide predictor.channels");
  }
  if (fusion_repeats < 1) throw InvalidArgument("predictor.fusion_repeats must be >= 1");
  if (!illumination && !noise && !blur) throw InvalidArgument("predictor: at least one branch must be enabled");
  if (input_size < 16) throw InvalidArgument("predictor.input_size must be >= 16");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("predictor.gamma must lie in (0, 1]");
  if (guided_radius < 1) throw InvalidArgument("predictor.guided_radius must be >= 1");
  if (!(guided_eps > 0.0)) throw InvalidArgument("predictor.guided_eps must be > 0");
}

bool PredictorConfig::enabled(Branch b) const {
  switch (b) {
    case Branch::Illumination: return illumination;
    case Branch::Noise: return noise;
    case Branch::Blur: return blur;
  }
  return false;
}

std::vector<Branch> PredictorConfig::enabled_branches() const {
  std::vector<Branch> out;
  for (auto b : kAllBranches)
    if (enabled(b)) out.push_back(b);
  return out;
}

Tensor luminance_histogram(const QuantizedImage& img) {
  const int w = img.width(), h = img.height(), c = img.channels();
  const std::int64_t levels = static_cast<std::int64_t>(img.m_max()) + 1;
  std::vector<double> hist(kHistBins, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Luminance in thousandths of a code value, kept integral so equal RGB maps exactly.
      std::int64_t lum1000;
      if (c >= 3) {
        lum1000 = 299LL * img.at(x, y, 0) + 587LL * img.at(x, y, 1) + 114LL * img.at(x, y, 2);
      } else {
        lum1000 = 1000LL * img.at(x, y, 0);
      }
      const auto bin = std::min<std::int64_t>(kHistBins - 1, lum1000 * kHistBins / (1000 * levels));
      hist[static_cast<std::size_t>(bin)] += 1.0;
    }
  }
  const double n = static_cast<double>(w) * h;
  for (auto& v : hist) v /= n;
  return Tensor({1, kHistBins}, std::move(hist));
}

Tensor linear_rescale(const QuantizedImage& img, double gamma) {
  const int w = img.width(), h = img.height(), c = img.channels();
  std::vector<double> lut(static_cast<std::size_t>(img.m_max()) + 1);
  for (std::size_t q = 0; q < lut.size(); ++q) lut[q] = decode_linear(static_cast<int>(q), img.m_max(), gamma);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> out(3 * n);
  for (int ch = 0; ch < 3; ++ch) {
    const int src = c >= 3 ? ch : 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out[ch * n + y * w + x] = lut[img.at(x, y, src)];
  }
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(out.size());
  const double denom = std::max(mean, 1e-3);
  for (auto& v : out) v /= denom;
  return Tensor({3, static_cast<std::size_t>(h), static_cast<std::size_t>(w)}, std::move(out));
}

Tensor box_mean(const Tensor& x, int radius) {
  if (x.rank() != 3) throw DimensionError("box_mean expects {C, H, W}, got " + nn::shape_str(x.shape()));
  if (radius < 0) throw InvalidArgument("box_mean: radius must be >= 0");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const long r = radius;
  std::vector<double> out(x.numel());
  std::vector<double> integral((h + 1) * (w + 1));
  const auto d = x.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* plane = d.data() + ch * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      double rowsum = 0.0;
      for (std::size_t xx = 0; xx < w; ++xx) {
        rowsum += plane[y * w + xx];
        integral[(y + 1) * (w + 1) + xx + 1] = integral[y * (w + 1) + xx + 1] + rowsum;
      }
    }
    for (long y = 0; y < static_cast<long>(h); ++y) {
      const long y0 = std::max(0L, y - r), y1 = std::min(static_cast<long>(h) - 1, y + r);
      for (long xx = 0; xx < static_cast<long>(w); ++xx) {
        const long x0 = std::max(0L, xx - r), x1 = std::min(static_cast<long>(w) - 1, xx + r);
        const auto at = [&](long yy, long xi) { return integral[static_cast<std::size_t>(yy * static_cast<long>(w + 1) + xi)]; };
        const double s = at(y1 + 1, x1 + 1) - at(y0, x1 + 1) - at(y1 + 1, x0) + at(y0, x0);
        out[ch * h * w + static_cast<std::size_t>(y) * w + static_cast<std::size_t>(xx)] =
            s / static_cast<double>((y1 - y0 + 1) * (x1 - x0 + 1));
      }
    }
  }
  return Tensor(x.shape(), std::move(out));
}

Tensor guided_filter(const Tensor& p, const Tensor& guide, int radius, double eps) {
  if (p.rank() != 3 || guide.rank() != 3) throw DimensionError("guided_filter expects {C, H, W} tensors");
  if (p.dim(1) != guide.dim(1) || p.dim(2) != guide.dim(2)) {
    throw DimensionError("guided_filter: input " + nn::shape_str(p.shape()) + " and guide " +
                         nn::shape_str(guide.shape()) + " differ in size");
  }
  if (guide.dim(0) != 1 && guide.dim(0) != p.dim(0)) {
    throw DimensionError("guided_filter: guide must have 1 or " + std::to_string(p.dim(0)) + " channels");
  }
  if (radius < 1) throw InvalidArgument("guided_filter: radius must be >= 1");
  if (!(eps > 0.0)) throw InvalidArgument("guided_filter: eps must be > 0");
  nn::NoGradGuard no_grad;
  const std::size_t c = p.dim(0), n = p.dim(1) * p.dim(2);
  // Expand the guide to p's channel count so all moments are per channel.
  std::vector<double> gi(c * n);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const std::size_t src = guide.dim(0) == 1 ? 0 : ch;
    std::copy_n(guide.data().begin() + src * n, n, gi.begin() + ch * n);
  }
  std::vector<double> ip(c * n), ii(c * n);
  const auto pd = p.data();
  for (std::size_t i = 0; i < c * n; ++i) {
    ip[i] = gi[i] * pd[i];
    ii[i] = gi[i] * gi[i];
  }
  const Tensor I(p.shape(), gi);
  const auto mean_i = box_mean(I, radius);
  const auto mean_p = box_mean(p, radius);
  const auto corr_ip = box_mean(Tensor(p.shape(), std::move(ip)), radius);
  const auto corr_ii = box_mean(Tensor(p.shape(), std::move(ii)), radius);
  std::vector<double> a(c * n), b(c * n);
  for (std::size_t i = 0; i < c * n; ++i) {
    const double mi = mean_i.data()[i], mp = mean_p.data()[i];
    const double var = corr_ii.data()[i] - mi * mi;
    const double cov = corr_ip.data()[i] - mi * mp;
    a[i] = cov / (var + eps);
    b[i] = mp - a[i] * mi;
  }
  const auto mean_a = box_mean(Tensor(p.shape(), std::move(a)), radius);
  const auto mean_b = box_mean(Tensor(p.shape(), std::move(b)), radius);
  std::vector<double> out(c * n);
  for (std::size_t i = 0; i < c * n; ++i) out[i] = mean_a.data()[i] * gi[i] + mean_b.data()[i];
  return Tensor(p.shape(), std::move(out));
}

PreparedInput prepare_input(const QuantizedImage& img, const PredictorConfig& cfg) {
  PreparedInput in;
  in.histogram = luminance_histogram(img);
  in.rescaled = linear_rescale(img, cfg.gamma);
  if (cfg.blur) in.guided = guided_filter(in.rescaled, in.rescaled, cfg.guided_radius, cfg.guided_eps);
  return in;
}

double attention_sum_deviation(const std::vector<Tensor>& v) {
  if (v.empty()) return 0.0;
  double worst = 0.0;
  for (std::size_t ch = 0; ch < v[0].numel(); ++ch) {
    double s = 0.0;
    for (const auto& t : v) s += t.data()[ch];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

Tensor selective_fuse(const std::vector<Tensor>& features, const FuseWeights& w, int squeeze_ratio,
                      FusionState* state) {
  if (features.empty()) throw InvalidArgument("selective_fuse: no branch features");
  for (const auto& f : features) {
    if (f.rank() != 3 || f.shape() != features[0].shape()) {
      throw DimensionError("selective_fuse: branch feature shapes differ: " + nn::shape_str(f.shape()) + " vs " +
                           nn::shape_str(features[0].shape()));
    }
  }
  if (w.expand_w.size() != features.size() || w.expand_b.size() != features.size()) {
    throw DimensionError("selective_fuse: " + std::to_string(w.expand_w.size()) + " expansions for " +
                         std::to_string(features.size()) + " branches");
  }
  const std::size_t c = features[0].dim(0);
  const auto s = nn::global_avg_pool(nn::add_n(features));
  nn::Conv2dOptions squeeze;
  squeeze.groups = static_cast<int>(c) / squeeze_ratio;
  const auto z = nn::reshape(
      nn::leaky_relu(nn::conv2d(nn::reshape(s, {c, 1, 1}), w.squeeze_w, w.squeeze_b, squeeze), 0.2),
      {c / static_cast<std::size_t>(squeeze_ratio)});
  std::vector<Tensor> u;
  for (std::size_t k = 0; k < features.size(); ++k) u.push_back(nn::dense(z, w.expand_w[k], w.expand_b[k]));
  auto v = nn::softmax_over_branches(u);
  const double dev = attention_sum_deviation(v);
  if (!(dev <= kFuseSumTolerance)) {
    throw Error("selective_fuse: attention weights deviate from 1 by " + std::to_string(dev));
  }
  std::vector<Tensor> weighted;
  for (std::size_t k = 0; k < features.size(); ++k) weighted.push_back(nn::channel_scale(features[k], v[k]));
  if (state) *state = {s, z, u, v};
  return nn::add_n(weighted);
}

IrpPredictor::IrpPredictor(const PredictorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  auto rng = make_rng(seed, "predictor.init");
  const std::size_t C = static_cast<std::size_t>(cfg_.channels);
  const std::size_t R = static_cast<std::size_t>(cfg_.squeeze_ratio);
  auto conv = [&](const std::string& name, std::size_t out, std::size_t in_per_group, std::size_t k,
                  std::size_t groups = 1) {
    const std::size_t fan_in = in_per_group * k * k, fan_out = out / groups * k * k;
    params_.add(name + ".w", nn::glorot_uniform({out, in_per_group, k, k}, fan_in, fan_out, rng));
    params_.add(name + ".b", Tensor({out}, 0.0));
  };
  auto fc = [&](const std::string& name, std::size_t out, std::size_t in) {
    params_.add(name + ".w", nn::glorot_uniform({out, in}, in, out, rng));
    params_.add(name + ".b", Tensor({out}, 0.0));
  };

  if (cfg_.illumination) {
    params_.add("illum.conv1d.w", nn::glorot_uniform({C, 1, 7}, 7, C * 7, rng));
    params_.add("illum.conv1d.b", Tensor({C}, 0.0));
    fc("illum.dense", C, C * (kHistBins / kHistPool));
  }
  if (cfg_.noise) {
    conv("noise.stem", C, 3, 3);
    for (int blk = 1; blk <= 3; ++blk) {
      const std::string pre = "noise.aspp" + std::to_string(blk);
      for (int d : {1, 2, 4}) conv(pre + ".d" + std::to_string(d), C, C, 3);
      conv(pre + ".proj", C, 3 * C, 1);
    }
  }
  if (cfg_.blur) {
    conv("blur.stage1", C / 2, 3, 3);
    conv("blur.stage2", C, C / 2, 3);
    conv("blur.stage3", C, C, 3);
    conv("blur.stage4", 2 * C, C, 3);
    conv("blur.reduce", C, 2, 1, C);
  }
  const auto branches = cfg_.enabled_branches();
  for (int r = 0; r < cfg_.fusion_repeats; ++r) {
    const std::string rp = std::to_string(r + 1);
    if (r > 0) {
      for (auto b : branches) conv("repeat" + rp + "." + std::string(to_string(b)), C, C, 3);
    }
    if (cfg_.fusion == FusionMode::Selective) {
      conv("fuse" + rp + ".squeeze", C / R, R, 1, C / R);
      for (auto b : branches) fc("fuse" + rp + ".expand." + std::string(to_string(b)), C, C / R);
    }
  }
  fc("head.fc1", C, C);
  fc("head.fc2", C / 2, C);
  fc("head.fc3", 1, C / 2);
}

Tensor IrpPredictor::branch_feature(Branch b, const PreparedInput& in, std::size_t out_h, std::size_t out_w) const {
  nn::Conv2dOptions s2{2, 1, 1, 1};
  nn::Conv2dOptions same{1, 1, 1, 1};
  switch (b) {
    case Branch::Illumination: {
      auto h = nn::relu(nn::conv1d(in.histogram, p("illum.conv1d.w"), p("illum.conv1d.b"), 3));
      h = nn::avg_pool1d(h, kHistPool);
      h = nn::reshape(h, {h.numel()});
      h = nn::relu(nn::dense(h, p("illum.dense.w"), p("illum.dense.b")));
      return nn::broadcast_spatial(h, out_h, out_w);
    }
    case Branch::Noise: {
      auto x = nn::relu(nn::conv2d(in.rescaled, p("noise.stem.w"), p("noise.stem.b"), s2));
      x = nn::avg_pool2d(x, 2);
      for (int blk = 1; blk <= 3; ++blk) {
        const std::string pre = "noise.aspp" + std::to_string(blk);
        std::vector<Tensor> arms;
        for (int d : {1, 2, 4}) {
          const std::string name = pre + ".d" + std::to_string(d);
          arms.push_back(nn::relu(nn::conv2d(x, p(name + ".w"), p(name + ".b"), {1, d, d, 1})));
        }
        x = nn::relu(nn::conv2d(nn::concat_channels(arms), p(pre + ".proj.w"), p(pre + ".proj.b")));
      }
      return x;
    }
    case Branch::Blur: {
      if (!in.guided.defined()) throw InvalidArgument("prepared input lacks the guided-filter plane");
      auto x = nn::relu(nn::conv2d(in.guided, p("blur.stage1.w"), p("blur.stage1.b"), s2));
      x = nn::relu(nn::conv2d(x, p("blur.stage2.w"), p("blur.stage2.b"), s2));
      x = nn::relu(nn::conv2d(x, p("blur.stage3.w"), p("blur.stage3.b"), s2));
      x = nn::relu(nn::conv2d(x, p("blur.stage4.w"), p("blur.stage4.b"), same));
      nn::Conv2dOptions depthwise;
      depthwise.groups = cfg_.channels;
      x = nn::relu(nn::conv2d(x, p("blur.reduce.w"), p("blur.reduce.b"), depthwise));
      return nn::resize_nearest(x, out_h, out_w);
    }
  }
  throw InvalidArgument("unknown branch");
}

FuseWeights IrpPredictor::fuse_weights(int repeat) const {
  const std::string rp = "fuse" + std::to_string(repeat + 1);
  FuseWeights w{p(rp + ".squeeze.w"), p(rp + ".squeeze.b"), {}, {}};
  for (auto b : cfg_.enabled_branches()) {
    const std::string name = rp + ".expand." + std::string(to_string(b));
    w.expand_w.push_back(p(name + ".w"));
    w.expand_b.push_back(p(name + ".b"));
  }
  return w;
}

Tensor IrpPredictor::forward(const PreparedInput& in, ForwardTrace* trace) const {
  if (!in.rescaled.defined() || in.rescaled.rank() != 3) throw DimensionError("prepared input lacks the image plane");
  const std::size_t hp = reduced(in.rescaled.dim(1)), wp = reduced(in.rescaled.dim(2));
  if (hp == 0 || wp == 0) throw DimensionError("predictor input too small: " + nn::shape_str(in.rescaled.shape()));
  const auto branches = cfg_.enabled_branches();
  std::vector<Tensor> features;
  for (auto b : branches) features.push_back(branch_feature(b, in, hp, wp));
  if (trace) {
    trace->branch_features = features;
    trace->fusion.clear();
  }

  Tensor fused;
  for (int r = 0; r < cfg_.fusion_repeats; ++r) {
    if (r > 0) {
      features.clear();
      for (auto b : branches) {
        const std::string name = "repeat" + std::to_string(r + 1) + "." + std::string(to_string(b));
        features.push_back(nn::relu(nn::conv2d(fused, p(name + ".w"), p(name + ".b"), {1, 1, 1, 1})));
      }
    }
    if (cfg_.fusion == FusionMode::Selective) {
      FusionState state;
      fused = selective_fuse(features, fuse_weights(r), cfg_.squeeze_ratio, trace ? &state : nullptr);
      if (trace) trace->fusion.push_back(std::move(state));
    } else {
      fused = nn::scale(nn::add_n(features), 1.0 / static_cast<double>(features.size()));
    }
  }
  if (trace) trace->fused = fused;

  auto h = nn::global_avg_pool(fused);
  h = nn::relu(nn::dense(h, p("head.fc1.w"), p("head.fc1.b")));
  h = nn::relu(nn::dense(h, p("head.fc2.w"), p("head.fc2.b")));
  return nn::dense(h, p("head.fc3.w"), p("head.fc3.b"));
}

double IrpPredictor::predict(const PreparedInput& in) const {
  nn::NoGradGuard no_grad;
  const double score = forward(in).item();
  if (!std::isfinite(score)) throw Error("predictor produced a non-finite score");
  return score;
}

double IrpPredictor::predict(const QuantizedImage& img) const { return predict(prepare_input(img, cfg_)); }

Tensor IrpPredictor::export_features(const QuantizedImage& img) const {
  nn::NoGradGuard no_grad;
  ForwardTrace trace;
  forward(prepare_input(img, cfg_), &trace);
  return trace.fused;
}

std::vector<nn::NamedTensor> IrpPredictor::to_named_tensors() const {
  std::vector<double> meta{kConfigFormat,
                           static_cast<double>(cfg_.channels),
                           static_cast<double>(cfg_.squeeze_ratio),
                           static_cast<double>(cfg_.fusion_repeats),
                           cfg_.illumination ? 1.0 : 0.0,
                           cfg_.noise ? 1.0 : 0.0,
                           cfg_.blur ? 1.0 : 0.0,
                           cfg_.fusion == FusionMode::Selective ? 0.0 : 1.0,
                           static_cast<double>(cfg_.input_size),
                           cfg_.gamma,
                           static_cast<double>(cfg_.guided_radius),
                           cfg_.guided_eps};
  std::vector<nn::NamedTensor> out{{"meta.config", Tensor({meta.size()}, meta)}};
  for (const auto& it : params_.items()) out.push_back({it.name, it.tensor.clone()});
  return out;
}

IrpPredictor IrpPredictor::from_named_tensors(const std::vector<nn::NamedTensor>& tensors) {
  const nn::NamedTensor* meta = nullptr;
  for (const auto& t : tensors)
    if (t.name == "meta.config") meta = &t;
  if (!meta) throw FormatError("checkpoint has no meta.config entry");
  const auto m = meta->tensor.data();
  if (m.size() != 12 || m[0] != kConfigFormat) throw FormatError("unsupported meta.config layout in checkpoint");
  PredictorConfig cfg;
  cfg.channels = static_cast<int>(m[1]);
  cfg.squeeze_ratio = static_cast<int>(m[2]);
  cfg.fusion_repeats = static_cast<int>(m[3]);
  cfg.illumination = m[4] != 0.0;
  cfg.noise = m[5] != 0.0;
  cfg.blur = m[6] != 0.0;
  cfg.fusion = m[7] == 0.0 ? FusionMode::Selective : FusionMode::PlainSum;
  cfg.input_size = static_cast<int>(m[8]);
  cfg.gamma = m[9];
  cfg.guided_radius = static_cast<int>(m[10]);
  cfg.guided_eps = m[11];
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("checkpoint config invalid: ") + e.what());
  }
  IrpPredictor model(cfg, 0);
  if (tensors.size() != model.params_.size() + 1) {
    throw FormatError("checkpoint holds " + std::to_string(tensors.size() - 1) + " parameters, config expects " +
                      std::to_string(model.params_.size()));
  }
  for (const auto& t : tensors) {
    if (t.name == "meta.config") continue;
    if (!model.params_.contains(t.name)) throw FormatError("unexpected checkpoint parameter '" + t.name + "'");
    auto dst = model.params_.at(t.name);
    if (dst.shape() != t.tensor.shape()) {
      throw FormatError("checkpoint parameter '" + t.name + "' has shape " + nn::shape_str(t.tensor.shape()) +
                        ", expected " + nn::shape_str(dst.shape()));
    }
    std::copy(t.tensor.data().begin(), t.tensor.data().end(), dst.data().begin());
  }
  return model;
}

void IrpPredictor::save(const std::filesystem::path& path) const { nn::save_checkpoint(path, to_named_tensors()); }

IrpPredictor IrpPredictor::load(const std::filesystem::path& path) {
  return from_named_tensors(nn::load_checkpoint(path));
}

void IrpPredictor::copy_parameters_from(const IrpPredictor& other) {
  if (!(other.cfg_ == cfg_)) throw InvalidArgument("copy_parameters_from: configs differ");
  for (std::size_t i = 0; i < params_.items().size(); ++i) {
    auto dst = params_.items()[i].tensor;
    const auto src = other.params_.items()[i].tensor.data();
    std::copy(src.begin(), src.end(), dst.data().begin());
  }
}

std::vector<std::uint8_t> encode_features(const Tensor& chw) {
  if (chw.rank() != 3) throw DimensionError("encode_features expects {C, H, W}");
  const std::size_t c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
  std::vector<std::uint8_t> out{'I', 'R', 'P', 'F'};
  auto put = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put(3);
  put(static_cast<std::uint32_t>(h));
  put(static_cast<std::uint32_t>(w));
  put(static_cast<std::uint32_t>(c));
  std::vector<double> hwc(chw.numel());
  const auto d = chw.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h * w; ++i) hwc[i * c + ch] = d[ch * h * w + i];
  const auto* raw = reinterpret_cast<const std::uint8_t*>(hwc.data());
  out.insert(out.end(), raw, raw + hwc.size() * sizeof(double));
  return out;
}

Tensor decode_features(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), "IRPF", 4) != 0) throw FormatError("not an IRPF feature file");
  auto get = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[off + i]) << (8 * i);
    return v;
  };
  if (get(4) != 3) throw FormatError("IRPF feature file must have rank 3");
  const std::size_t h = get(8), w = get(12), c = get(16);
  if (bytes.size() != 20 + h * w * c * sizeof(double)) throw FormatError("IRPF payload size does not match header");
  std::vector<double> hwc(h * w * c);
  std::memcpy(hwc.data(), bytes.data() + 20, hwc.size() * sizeof(double));
  std::vector<double> chw(hwc.size());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h * w; ++i) chw[ch * h * w + i] = hwc[i * c + ch];
  return Tensor({c, h, w}, std::move(chw));
}

}  // namespace irp
