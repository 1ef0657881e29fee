#include "irp/image.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "irp/error.hpp"

namespace irp {

template <typename T>
Image<T>::Image(int width, int height, int channels, T fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0 || channels <= 0) {
    throw DimensionError("image dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

template <typename T>
Image<T>::Image(int width, int height, int channels, std::vector<T> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width <= 0 || height <= 0 || channels <= 0) {
    throw DimensionError("image dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw DimensionError("image data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(width) + "x" +
                         std::to_string(height) + "x" + std::to_string(channels));
  }
}

template class Image<double>;
template class Image<float>;
template class Image<std::uint16_t>;

RadianceFrame::RadianceFrame(Image<double> pixels) : pixels_(std::move(pixels)) {
  for (double x : pixels_.data()) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InvalidArgument("radiance values must be finite and non-negative");
    }
  }
}

FlowField::FlowField(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw DimensionError("flow dimensions must be positive");
  u_.assign(static_cast<std::size_t>(width) * height, 0.0f);
  v_.assign(u_.size(), 0.0f);
}

FlowField::FlowField(int width, int height, std::vector<float> u, std::vector<float> v)
    : width_(width), height_(height), u_(std::move(u)), v_(std::move(v)) {
  if (width <= 0 || height <= 0) throw DimensionError("flow dimensions must be positive");
  const auto n = static_cast<std::size_t>(width) * height;
  if (u_.size() != n || v_.size() != n) throw DimensionError("flow component length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(u_[i]) || !std::isfinite(v_[i])) {
      throw InvalidArgument("flow values must be finite");
    }
  }
}

double FlowField::max_magnitude() const {
  double m = 0.0;
  for (std::size_t i = 0; i < u_.size(); ++i) {
    m = std::max(m, std::hypot(double(u_[i]), double(v_[i])));
  }
  return m;
}

double FlowField::mean_magnitude() const {
  if (u_.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < u_.size(); ++i) s += std::hypot(double(u_[i]), double(v_[i]));
  return s / double(u_.size());
}

std::pair<double, double> FlowField::mean_vector() const {
  if (u_.empty()) return {0.0, 0.0};
  double su = 0.0, sv = 0.0;
  for (std::size_t i = 0; i < u_.size(); ++i) {
    su += u_[i];
    sv += v_[i];
  }
  return {su / double(u_.size()), sv / double(u_.size())};
}

QuantizedImage::QuantizedImage(int width, int height, int channels, int m_max)
    : pixels_(width, height, channels, 0), m_max_(m_max) {
  if (m_max < 1 || m_max > 65535) throw InvalidArgument("m_max must be in [1, 65535]");
}

QuantizedImage::QuantizedImage(Image<std::uint16_t> pixels, int m_max)
    : pixels_(std::move(pixels)), m_max_(m_max) {
  if (m_max < 1 || m_max > 65535) throw InvalidArgument("m_max must be in [1, 65535]");
  for (auto v : pixels_.data()) {
    if (v > m_max) throw InvalidArgument("quantized value exceeds m_max");
  }
}

void QuantizedImage::set(int x, int y, int c, int value) {
  if (value < 0 || value > m_max_) throw InvalidArgument("quantized value out of range");
  pixels_.at(x, y, c) = static_cast<std::uint16_t>(value);
}

double QuantizedImage::mean() const {
  const auto d = pixels_.data();
  if (d.empty()) return 0.0;
  double s = std::accumulate(d.begin(), d.end(), 0.0);
  return s / double(d.size());
}

}  // namespace irp
