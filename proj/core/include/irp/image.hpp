#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace irp {

// Interleaved row-major pixel buffer: index = (y * width + x) * channels + c.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, T fill = T{});
  Image(int width, int height, int channels, std::vector<T> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

extern template class Image<double>;
extern template class Image<float>;
extern template class Image<std::uint16_t>;

// Ground-truth linear radiance, non-negative.
class RadianceFrame {
 public:
  RadianceFrame() = default;
  explicit RadianceFrame(Image<double> pixels);

  const Image<double>& pixels() const { return pixels_; }
  int width() const { return pixels_.width(); }
  int height() const { return pixels_.height(); }
  int channels() const { return pixels_.channels(); }

  bool operator==(const RadianceFrame&) const = default;

 private:
  Image<double> pixels_;
};

// Noisy linear sensor signal; may be negative after read noise.
using LinearImage = Image<double>;

// Per-pixel displacement in pixels over the reference interval.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height);
  FlowField(int width, int height, std::vector<float> u, std::vector<float> v);

  int width() const { return width_; }
  int height() const { return height_; }

  float u(int x, int y) const { return u_[idx(x, y)]; }
  float v(int x, int y) const { return v_[idx(x, y)]; }
  void set(int x, int y, float u, float v) {
    u_[idx(x, y)] = u;
    v_[idx(x, y)] = v;
  }

  std::span<const float> u_values() const { return u_; }
  std::span<const float> v_values() const { return v_; }

  double max_magnitude() const;
  double mean_magnitude() const;
  // Mean displacement vector over all pixels.
  std::pair<double, double> mean_vector() const;

  bool operator==(const FlowField&) const = default;

 private:
  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
  int width_ = 0;
  int height_ = 0;
  std::vector<float> u_;
  std::vector<float> v_;
};

// Developed sRGB code values in [0, m_max].
class QuantizedImage {
 public:
  QuantizedImage() = default;
  QuantizedImage(int width, int height, int channels, int m_max);
  QuantizedImage(Image<std::uint16_t> pixels, int m_max);

  int width() const { return pixels_.width(); }
  int height() const { return pixels_.height(); }
  int channels() const { return pixels_.channels(); }
  int m_max() const { return m_max_; }

  const Image<std::uint16_t>& pixels() const { return pixels_; }
  std::uint16_t at(int x, int y, int c) const { return pixels_.at(x, y, c); }
  void set(int x, int y, int c, int value);

  std::span<const std::uint16_t> data() const { return pixels_.data(); }

  double mean() const;

  bool operator==(const QuantizedImage&) const = default;

 private:
  Image<std::uint16_t> pixels_;
  int m_max_ = 255;
};

}  // namespace irp
