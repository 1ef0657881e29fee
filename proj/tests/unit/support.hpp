#pragma once

#include <cmath>
#include <cstdint>

#include "irp/image.hpp"
#include "irp/rng.hpp"

namespace irp::test {

inline RadianceFrame constant_frame(int w, int h, int c, double v) { return RadianceFrame(Image<double>(w, h, c, v)); }

inline RadianceFrame random_frame(int w, int h, int c, std::uint64_t seed) {
  auto rng = make_rng(seed, "test.frame");
  Image<double> img(w, h, c);
  for (auto& v : img.values()) v = uniform01(rng);
  return RadianceFrame(std::move(img));
}

inline FlowField uniform_flow(int w, int h, float u, float v) {
  FlowField f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f.set(x, y, u, v);
  return f;
}

inline QuantizedImage random_quantized(int w, int h, int c, int m_max, std::uint64_t seed) {
  auto rng = make_rng(seed, "test.quantized");
  QuantizedImage img(w, h, c, m_max);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) img.set(x, y, ch, static_cast<int>(rng() % static_cast<std::uint64_t>(m_max + 1)));
  return img;
}

inline QuantizedImage constant_quantized(int w, int h, int c, int m_max, int value) {
  QuantizedImage img(w, h, c, m_max);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) img.set(x, y, ch, value);
  return img;
}

}  // namespace irp::test
