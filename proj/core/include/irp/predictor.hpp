#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "irp/image.hpp"
#include "irp/nn/params.hpp"
#include "irp/nn/tensor.hpp"

namespace irp {

enum class FusionMode { Selective, PlainSum };

std::string_view to_string(FusionMode m);
FusionMode parse_fusion_mode(std::string_view s);

enum class Branch { Illumination = 0, Noise = 1, Blur = 2 };
inline constexpr std::array<Branch, 3> kAllBranches = {Branch::Illumination, Branch::Noise, Branch::Blur};
std::string_view to_string(Branch b);

struct PredictorConfig {
  int channels = 32;
  int squeeze_ratio = 8;
  int fusion_repeats = 3;
  bool illumination = true;
  bool noise = true;
  bool blur = true;
  FusionMode fusion = FusionMode::Selective;
  int input_size = 64;  // training crop side
  double gamma = 1.0 / 2.2;
  int guided_radius = 4;
  double guided_eps = 1e-2;

  // Throws InvalidArgument naming the offending field.
  void validate() const;
  bool enabled(Branch b) const;
  std::vector<Branch> enabled_branches() const;
  bool operator==(const PredictorConfig&) const = default;
};

// 256-bin histogram of luminance 0.299 R + 0.587 G + 0.114 B (the value itself for
// single-channel images), normalised to sum 1. Shape {1, 256}.
nn::Tensor luminance_histogram(const QuantizedImage& img);

// Linearised image divided by max(mean, 1e-3). Shape {3, H, W}; single-channel input is
// replicated across the three channels.
nn::Tensor linear_rescale(const QuantizedImage& img, double gamma);

// Self- or cross-guided filter per channel with clipped (2r+1)^2 box windows. `guide`
// has either one channel or as many as `p`. No gradient is recorded.
nn::Tensor guided_filter(const nn::Tensor& p, const nn::Tensor& guide, int radius, double eps);

// Mean over each clipped (2r+1)^2 window, per channel of a {C, H, W} tensor.
nn::Tensor box_mean(const nn::Tensor& x, int radius);

// Non-differentiable inputs of one forward pass, computed once per image.
struct PreparedInput {
  nn::Tensor histogram;  // {1, 256}
  nn::Tensor rescaled;   // {3, H, W}
  nn::Tensor guided;     // {3, H, W}
};

PreparedInput prepare_input(const QuantizedImage& img, const PredictorConfig& cfg);

struct FusionState {
  nn::Tensor s;                 // {C}
  nn::Tensor z;                 // {C / r}
  std::vector<nn::Tensor> u;    // per enabled branch, {C}
  std::vector<nn::Tensor> v;    // per enabled branch, {C}
};

// Intermediate values of one forward pass, for inspection and tests.
struct ForwardTrace {
  std::vector<nn::Tensor> branch_features;  // F per enabled branch, {C, H', W'}
  std::vector<FusionState> fusion;          // one per repeat (selective mode only)
  nn::Tensor fused;                         // final fused map {C, H', W'}
};

// One selective-fusion step. The parameter prefix selects squeeze/expand weights.
struct FuseWeights {
  nn::Tensor squeeze_w, squeeze_b;           // {C/r, r, 1, 1}, {C/r}
  std::vector<nn::Tensor> expand_w, expand_b;  // per branch {C, C/r}, {C}
};

// s = GAP(sum F); z = leaky_relu(grouped 1x1 squeeze(s)); u_k = W_k z + b_k;
// v = softmax over branches per channel; out = sum v_k * F_k.
nn::Tensor selective_fuse(const std::vector<nn::Tensor>& features, const FuseWeights& w, int squeeze_ratio,
                          FusionState* state = nullptr);

// Largest |sum_k v_k[c] - 1| over channels.
double attention_sum_deviation(const std::vector<nn::Tensor>& v);

class IrpPredictor {
 public:
  IrpPredictor(const PredictorConfig& cfg, std::uint64_t seed);

  const PredictorConfig& config() const { return cfg_; }
  nn::Parameters& parameters() { return params_; }
  const nn::Parameters& parameters() const { return params_; }

  // Scalar {1} score. Records history for training when grad mode is on.
  nn::Tensor forward(const PreparedInput& in, ForwardTrace* trace = nullptr) const;

  double predict(const QuantizedImage& img) const;
  double predict(const PreparedInput& in) const;

  // The final fused feature map before global pooling, {C, H', W'}.
  nn::Tensor export_features(const QuantizedImage& img) const;

  // Checkpoint: every parameter plus the config as a "meta.config" tensor.
  void save(const std::filesystem::path& path) const;
  static IrpPredictor load(const std::filesystem::path& path);

  std::vector<nn::NamedTensor> to_named_tensors() const;
  static IrpPredictor from_named_tensors(const std::vector<nn::NamedTensor>& tensors);

  // Copies parameter values from another model with the same config.
  void copy_parameters_from(const IrpPredictor& other);

 private:
  nn::Tensor branch_feature(Branch b, const PreparedInput& in, std::size_t out_h, std::size_t out_w) const;
  FuseWeights fuse_weights(int repeat) const;
  const nn::Tensor& p(const std::string& name) const { return params_.at(name); }

  PredictorConfig cfg_;
  nn::Parameters params_;
};

// Features as raw f64 in H' x W' x C order behind a header: "IRPF", u32 rank (3),
// u32 H', u32 W', u32 C.
std::vector<std::uint8_t> encode_features(const nn::Tensor& chw);
nn::Tensor decode_features(const std::vector<std::uint8_t>& bytes);

}  // namespace irp
