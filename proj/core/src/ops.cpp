#include "irp/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "irp/error.hpp"

namespace irp::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.defined() || !b.defined() || a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void require_rank(const Tensor& a, std::size_t rank, const char* op) {
  if (!a.defined() || a.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(a.shape()));
  }
}

// Accumulates g into parent i when it takes part in differentiation.
template <typename F>
void accumulate(detail::Node& self, std::size_t i, F&& fill) {
  auto& p = *self.parents[i];
  if (!p.requires_grad) return;
  fill(p.ensure_grad());
}

struct ConvGeom {
  std::size_t c, h, w;         // input
  std::size_t o, kh, kw;       // weight
  std::size_t groups;
  int stride_h, stride_w, pad_h, pad_w, dil_h, dil_w;
  std::size_t ho, wo;

  std::size_t cg() const { return c / groups; }
  std::size_t og() const { return o / groups; }
  std::size_t krows() const { return cg() * kh * kw; }
  std::size_t npix() const { return ho * wo; }
};

std::size_t conv_out(std::size_t in, int pad, int dil, std::size_t k, int stride) {
  const long long span = static_cast<long long>(in) + 2LL * pad - static_cast<long long>(dil) * (static_cast<long long>(k) - 1) - 1;
  if (span < 0) return 0;
  return static_cast<std::size_t>(span / stride + 1);
}

// Column buffer for one group: rows (ci, ki, kj), columns output pixels.
void im2col(const double* x, const ConvGeom& g, std::size_t group, double* col) {
  const std::size_t cg = g.cg();
  for (std::size_t ci = 0; ci < cg; ++ci) {
    const double* plane = x + (group * cg + ci) * g.h * g.w;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        double* out = col + ((ci * g.kh + ki) * g.kw + kj) * g.npix();
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long long iy = static_cast<long long>(oy) * g.stride_h - g.pad_h + static_cast<long long>(ki) * g.dil_h;
          double* orow = out + oy * g.wo;
          if (iy < 0 || iy >= static_cast<long long>(g.h)) {
            std::fill(orow, orow + g.wo, 0.0);
            continue;
          }
          const double* irow = plane + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long long ix = static_cast<long long>(ox) * g.stride_w - g.pad_w + static_cast<long long>(kj) * g.dil_w;
            orow[ox] = (ix < 0 || ix >= static_cast<long long>(g.w)) ? 0.0 : irow[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeom& g, std::size_t group, double* dx) {
  const std::size_t cg = g.cg();
  for (std::size_t ci = 0; ci < cg; ++ci) {
    double* plane = dx + (group * cg + ci) * g.h * g.w;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const double* in = col + ((ci * g.kh + ki) * g.kw + kj) * g.npix();
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long long iy = static_cast<long long>(oy) * g.stride_h - g.pad_h + static_cast<long long>(ki) * g.dil_h;
          if (iy < 0 || iy >= static_cast<long long>(g.h)) continue;
          double* irow = plane + static_cast<std::size_t>(iy) * g.w;
          const double* crow = in + oy * g.wo;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long long ix = static_cast<long long>(ox) * g.stride_w - g.pad_w + static_cast<long long>(kj) * g.dil_w;
            if (ix >= 0 && ix < static_cast<long long>(g.w)) irow[ix] += crow[ox];
          }
        }
      }
    }
  }
}

Tensor conv_impl(const Tensor& x, const Tensor& weight, const Tensor& bias, ConvGeom g) {
  if (g.groups == 0 || g.c % g.groups != 0 || g.o % g.groups != 0) {
    throw DimensionError("conv: channels " + std::to_string(g.c) + " -> " + std::to_string(g.o) +
                         " not divisible by groups " + std::to_string(g.groups));
  }
  if (weight.dim(1) != g.cg()) {
    throw DimensionError("conv: weight expects " + std::to_string(weight.dim(1)) + " input channels per group, input has " +
                         std::to_string(g.cg()));
  }
  if (g.stride_h < 1 || g.stride_w < 1 || g.dil_h < 1 || g.dil_w < 1 || g.pad_h < 0 || g.pad_w < 0) {
    throw InvalidArgument("conv: stride and dilation must be >= 1 and padding >= 0");
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.o)) {
    throw DimensionError("conv: bias shape " + shape_str(bias.shape()) + " does not match " + std::to_string(g.o) +
                         " output channels");
  }
  g.ho = conv_out(g.h, g.pad_h, g.dil_h, g.kh, g.stride_h);
  g.wo = conv_out(g.w, g.pad_w, g.dil_w, g.kw, g.stride_w);
  if (g.ho == 0 || g.wo == 0) throw DimensionError("conv: kernel footprint exceeds padded input");

  const std::size_t kr = g.krows(), np = g.npix(), og = g.og();
  auto cols = std::make_shared<std::vector<double>>(g.groups * kr * np);
  std::vector<double> out(g.o * np, 0.0);
  const double* xd = x.data().data();
  const double* wd = weight.data().data();
  for (std::size_t gi = 0; gi < g.groups; ++gi) {
    double* col = cols->data() + gi * kr * np;
    im2col(xd, g, gi, col);
    ConstMapMat wmat(wd + gi * og * kr, og, kr);
    ConstMapMat cmat(col, kr, np);
    MapMat omat(out.data() + gi * og * np, og, np);
    omat.noalias() = wmat * cmat;
  }
  if (bias.defined()) {
    const auto b = bias.data();
    for (std::size_t oc = 0; oc < g.o; ++oc) {
      double* p = out.data() + oc * np;
      for (std::size_t i = 0; i < np; ++i) p[i] += b[oc];
    }
  }

  Shape out_shape = x.rank() == 3 ? Shape{g.o, g.ho, g.wo} : Shape{g.o, g.wo};
  std::vector<Tensor> parents{x, weight};
  const bool has_bias = bias.defined();
  if (has_bias) parents.push_back(bias);
  return Tensor::make_result(std::move(out_shape), std::move(out), parents,
                             [g, cols, has_bias](detail::Node& self) {
                               const std::size_t kr = g.krows(), np = g.npix(), og = g.og();
                               const double* gy = self.grad.data();
                               const double* wd = self.parents[1]->data.data();
                               accumulate(self, 1, [&](std::vector<double>& dw) {
                                 for (std::size_t gi = 0; gi < g.groups; ++gi) {
                                   ConstMapMat gmat(gy + gi * og * np, og, np);
                                   ConstMapMat cmat(cols->data() + gi * kr * np, kr, np);
                                   MapMat dmat(dw.data() + gi * og * kr, og, kr);
                                   dmat.noalias() += gmat * cmat.transpose();
                                 }
                               });
                               accumulate(self, 0, [&](std::vector<double>& dx) {
                                 std::vector<double> dcol(kr * np);
                                 for (std::size_t gi = 0; gi < g.groups; ++gi) {
                                   ConstMapMat gmat(gy + gi * og * np, og, np);
                                   ConstMapMat wmat(wd + gi * og * kr, og, kr);
                                   MapMat dmat(dcol.data(), kr, np);
                                   dmat.noalias() = wmat.transpose() * gmat;
                                   col2im_add(dcol.data(), g, gi, dx.data());
                                 }
                               });
                               if (has_bias) {
                                 accumulate(self, 2, [&](std::vector<double>& db) {
                                   for (std::size_t oc = 0; oc < g.o; ++oc) {
                                     double s = 0.0;
                                     for (std::size_t i = 0; i < np; ++i) s += gy[oc * np + i];
                                     db[oc] += s;
                                   }
                                 });
                               }
                             });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      accumulate(self, k, [&](std::vector<double>& g) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      });
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& ad = self.parents[0]->data;
    const auto& bd = self.parents[1]->data;
    accumulate(self, 0, [&](std::vector<double>& g) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bd[i];
    });
    accumulate(self, 1, [&](std::vector<double>& g) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * ad[i];
    });
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= s;
  return Tensor::make_result(a.shape(), std::move(out), {a}, [s](detail::Node& self) {
    accumulate(self, 0, [&](std::vector<double>& g) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
    });
  });
}

Tensor add_n(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw InvalidArgument("add_n: no inputs");
  for (const auto& x : xs) require_same_shape(xs[0], x, "add_n");
  std::vector<double> out(xs[0].numel(), 0.0);
  for (const auto& x : xs) {
    const auto d = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  }
  return Tensor::make_result(xs[0].shape(), std::move(out), xs, [](detail::Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      accumulate(self, k, [&](std::vector<double>& g) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      });
    }
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return Tensor::make_result({1}, {s}, {a}, [](detail::Node& self) {
    accumulate(self, 0, [&](std::vector<double>& g) {
      for (auto& v : g) v += self.grad[0];
    });
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor relu(const Tensor& x) { return leaky_relu(x, 0.0); }

Tensor leaky_relu(const Tensor& x, double slope) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v = v > 0.0 ? v : slope * v;
  return Tensor::make_result(x.shape(), std::move(out), {x}, [slope](detail::Node& self) {
    const auto& xd = self.parents[0]->data;
    accumulate(self, 0, [&](std::vector<double>& g) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += xd[i] > 0.0 ? self.grad[i] : slope * self.grad[i];
    });
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), {x}, [](detail::Node& self) {
    accumulate(self, 0, [&](std::vector<double>& g) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
  });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv2dOptions& opts) {
  require_rank(x, 3, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  if (opts.groups < 1) throw InvalidArgument("conv2d: groups must be >= 1");
  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), weight.dim(0), weight.dim(2), weight.dim(3),
             static_cast<std::size_t>(opts.groups), opts.stride, opts.stride, opts.padding, opts.padding,
             opts.dilation, opts.dilation, 0, 0};
  return conv_impl(x, weight, bias, g);
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, int padding, int dilation, int stride,
              int groups) {
  require_rank(x, 2, "conv1d input");
  require_rank(weight, 3, "conv1d weight");
  if (groups < 1) throw InvalidArgument("conv1d: groups must be >= 1");
  ConvGeom g{x.dim(0), 1, x.dim(1), weight.dim(0), 1, weight.dim(2), static_cast<std::size_t>(groups),
             1, stride, 0, padding, 1, dilation, 0, 0};
  return conv_impl(x, weight, bias, g);
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 1, "dense input");
  require_rank(weight, 2, "dense weight");
  const std::size_t out_n = weight.dim(0), in_n = weight.dim(1);
  if (x.dim(0) != in_n) {
    throw DimensionError("dense: weight " + shape_str(weight.shape()) + " cannot take input " + shape_str(x.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_n)) {
    throw DimensionError("dense: bias shape " + shape_str(bias.shape()) + " does not match " + std::to_string(out_n));
  }
  std::vector<double> out(out_n, 0.0);
  const auto w = weight.data(), xd = x.data();
  for (std::size_t o = 0; o < out_n; ++o) {
    double s = bias.defined() ? bias.data()[o] : 0.0;
    for (std::size_t i = 0; i < in_n; ++i) s += w[o * in_n + i] * xd[i];
    out[o] = s;
  }
  std::vector<Tensor> parents{x, weight};
  const bool has_bias = bias.defined();
  if (has_bias) parents.push_back(bias);
  return Tensor::make_result({out_n}, std::move(out), parents, [in_n, out_n, has_bias](detail::Node& self) {
    const auto& xd = self.parents[0]->data;
    const auto& w = self.parents[1]->data;
    const auto& gy = self.grad;
    accumulate(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t o = 0; o < out_n; ++o)
        for (std::size_t i = 0; i < in_n; ++i) gx[i] += w[o * in_n + i] * gy[o];
    });
    accumulate(self, 1, [&](std::vector<double>& gw) {
      for (std::size_t o = 0; o < out_n; ++o)
        for (std::size_t i = 0; i < in_n; ++i) gw[o * in_n + i] += gy[o] * xd[i];
    });
    if (has_bias) {
      accumulate(self, 2, [&](std::vector<double>& gb) {
        for (std::size_t o = 0; o < out_n; ++o) gb[o] += gy[o];
      });
    }
  });
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 3, "global_avg_pool");
  const std::size_t c = x.dim(0), n = x.dim(1) * x.dim(2);
  if (n == 0) throw DimensionError("global_avg_pool: empty spatial extent");
  std::vector<double> out(c, 0.0);
  const auto d = x.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += d[ch * n + i];
    out[ch] = s / static_cast<double>(n);
  }
  return Tensor::make_result({c}, std::move(out), {x}, [c, n](detail::Node& self) {
    accumulate(self, 0, [&](std::vector<double>& g) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double v = self.grad[ch] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) g[ch * n + i] += v;
      }
    });
  });
}

Tensor avg_pool2d(const Tensor& x, int k) {
  require_rank(x, 3, "avg_pool2d");
  if (k < 1) throw InvalidArgument("avg_pool2d: window must be >= 1");
  const std::size_t ks = static_cast<std::size_t>(k);
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2), ho = h / ks, wo = w / ks;
  if (ho == 0 || wo == 0) throw DimensionError("avg_pool2d: window larger than input " + shape_str(x.shape()));
  const double inv = 1.0 / static_cast<double>(ks * ks);
  std::vector<double> out(c * ho * wo, 0.0);
  const auto d = x.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < ho * ks; ++y)
      for (std::size_t xx = 0; xx < wo * ks; ++xx) out[(ch * ho + y / ks) * wo + xx / ks] += d[(ch * h + y) * w + xx] * inv;
  return Tensor::make_result({c, ho, wo}, std::move(out), {x}, [c, h, w, ho, wo, ks, inv](detail::Node& self) {
    accumulate(self, 0, [&](std::vector<double>& g) {
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < ho * ks; ++y)
          for (std::size_t xx = 0; xx < wo * ks; ++xx)
            g[(ch * h + y) * w + xx] += self.grad[(ch * ho + y / ks) * wo + xx / ks] * inv;
    });
  });
}

Tensor avg_pool1d(const Tensor& x, int k) {
  require_rank(x, 2, "avg_pool1d");
  if (k < 1) throw InvalidArgument("avg_pool1d: window must be >= 1");
  const std::size_t ks = static_cast<std::size_t>(k);
  const std::size_t c = x.dim(0), l = x.dim(1), lo = l / ks;
  if (lo == 0) throw DimensionError("avg_pool1d: window larger than input " + shape_str(x.shape()));
  const double inv = 1.0 / static_cast<double>(ks);
  std::vector<double> out(c * lo, 0.0);
  const auto d = x.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < lo * ks; ++i) out[ch * lo + i / ks] += d[ch * l + i] * inv;
  return Tensor::make_result({c, lo}, std::move(out), {x}, [c, l, lo, ks, inv](detail::Node& self) {
    accumulate(self, 0, [&](std::vector<double>& g) {
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < lo * ks; ++i) g[ch * l + i] += self.grad[ch * lo + i / ks] * inv;
    });
  });
}

Tensor broadcast_spatial(const Tensor& v, std::size_t height, std::size_t width) {
  require_rank(v, 1, "broadcast_spatial");
  const std::size_t c = v.dim(0), n = height * width;
  std::vector<double> out(c * n);
  const auto d = v.data();
  for (std::size_t ch = 0; ch < c; ++ch) std::fill(out.begin() + ch * n, out.begin() + (ch + 1) * n, d[ch]);
  return Tensor::make_result({c, height, width}, std::move(out), {v}, [c, n](detail::Node& self) {
    accumulate(self, 0, [&](std::vector<double>& g) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += self.grad[ch * n + i];
        g[ch] += s;
      }
    });
  });
}

Tensor channel_scale(const Tensor& features, const Tensor& weights) {
  require_rank(features, 3, "channel_scale features");
  require_rank(weights, 1, "channel_scale weights");
  const std::size_t c = features.dim(0), n = features.dim(1) * features.dim(2);
  if (weights.dim(0) != c) {
    throw DimensionError("channel_scale: " + std::to_string(weights.dim(0)) + " weights for " + std::to_string(c) +
                         " channels");
  }
  std::vector<double> out(features.data().begin(), features.data().end());
  const auto w = weights.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < n; ++i) out[ch * n + i] *= w[ch];
  return Tensor::make_result(features.shape(), std::move(out), {features, weights}, [c, n](detail::Node& self) {
    const auto& f = self.parents[0]->data;
    const auto& w = self.parents[1]->data;
    accumulate(self, 0, [&](std::vector<double>& g) {
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < n; ++i) g[ch * n + i] += self.grad[ch * n + i] * w[ch];
    });
    accumulate(self, 1, [&](std::vector<double>& g) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += self.grad[ch * n + i] * f[ch * n + i];
        g[ch] += s;
      }
    });
  });
}

Tensor concat_channels(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw InvalidArgument("concat_channels: no inputs");
  std::size_t c = 0;
  for (const auto& x : xs) {
    require_rank(x, 3, "concat_channels");
    if (x.dim(1) != xs[0].dim(1) || x.dim(2) != xs[0].dim(2)) {
      throw DimensionError("concat_channels: spatial mismatch " + shape_str(x.shape()) + " vs " +
                           shape_str(xs[0].shape()));
    }
    c += x.dim(0);
  }
  std::vector<double> out;
  out.reserve(c * xs[0].dim(1) * xs[0].dim(2));
  for (const auto& x : xs) out.insert(out.end(), x.data().begin(), x.data().end());
  return Tensor::make_result({c, xs[0].dim(1), xs[0].dim(2)}, std::move(out), xs, [](detail::Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      const std::size_t n = self.parents[k]->data.size();
      accumulate(self, k, [&](std::vector<double>& g) {
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
      });
      offset += n;
    }
  });
}

Tensor resize_nearest(const Tensor& x, std::size_t height, std::size_t width) {
  require_rank(x, 3, "resize_nearest");
  if (height == 0 || width == 0) throw DimensionError("resize_nearest: empty target size");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  // Source index for each target row/column: floor(i * in / out).
  std::vector<std::size_t> sy(height), sx(width);
  for (std::size_t i = 0; i < height; ++i) sy[i] = i * h / height;
  for (std::size_t i = 0; i < width; ++i) sx[i] = i * w / width;
  std::vector<double> out(c * height * width);
  const auto d = x.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t xx = 0; xx < width; ++xx) out[(ch * height + y) * width + xx] = d[(ch * h + sy[y]) * w + sx[xx]];
  return Tensor::make_result({c, height, width}, std::move(out), {x},
                             [c, h, w, height, width, sy, sx](detail::Node& self) {
                               accumulate(self, 0, [&](std::vector<double>& g) {
                                 for (std::size_t ch = 0; ch < c; ++ch)
                                   for (std::size_t y = 0; y < height; ++y)
                                     for (std::size_t xx = 0; xx < width; ++xx)
                                       g[(ch * h + sy[y]) * w + sx[xx]] += self.grad[(ch * height + y) * width + xx];
                               });
                             });
}

Tensor stack(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw InvalidArgument("stack: no inputs");
  for (const auto& x : xs) {
    require_rank(x, 1, "stack");
    require_same_shape(xs[0], x, "stack");
  }
  const std::size_t c = xs[0].dim(0);
  std::vector<double> out;
  out.reserve(xs.size() * c);
  for (const auto& x : xs) out.insert(out.end(), x.data().begin(), x.data().end());
  return Tensor::make_result({xs.size(), c}, std::move(out), xs, [c](detail::Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      accumulate(self, k, [&](std::vector<double>& g) {
        for (std::size_t i = 0; i < c; ++i) g[i] += self.grad[k * c + i];
      });
    }
  });
}

Tensor row(const Tensor& x, std::size_t i) {
  require_rank(x, 2, "row");
  const std::size_t b = x.dim(0), c = x.dim(1);
  if (i >= b) throw DimensionError("row: index " + std::to_string(i) + " out of " + shape_str(x.shape()));
  std::vector<double> out(x.data().begin() + i * c, x.data().begin() + (i + 1) * c);
  return Tensor::make_result({c}, std::move(out), {x}, [i, c](detail::Node& self) {
    accumulate(self, 0, [&](std::vector<double>& g) {
      for (std::size_t k = 0; k < c; ++k) g[i * c + k] += self.grad[k];
    });
  });
}

Tensor softmax_rows(const Tensor& x) {
  require_rank(x, 2, "softmax_rows");
  const std::size_t b = x.dim(0), c = x.dim(1);
  if (b == 0) throw DimensionError("softmax_rows: no rows");
  const auto d = x.data();
  std::vector<double> out(b * c);
  for (std::size_t j = 0; j < c; ++j) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < b; ++k) m = std::max(m, d[k * c + j]);
    double z = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
      out[k * c + j] = std::exp(d[k * c + j] - m);
      z += out[k * c + j];
    }
    for (std::size_t k = 0; k < b; ++k) out[k * c + j] /= z;
  }
  auto result = Tensor::make_result({b, c}, out, {x}, [b, c](detail::Node& self) {
    const auto& y = self.data;
    accumulate(self, 0, [&](std::vector<double>& g) {
      for (std::size_t j = 0; j < c; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < b; ++k) dot += self.grad[k * c + j] * y[k * c + j];
        for (std::size_t k = 0; k < b; ++k) g[k * c + j] += y[k * c + j] * (self.grad[k * c + j] - dot);
      }
    });
  });
  return result;
}

std::vector<Tensor> softmax_over_branches(const std::vector<Tensor>& logits) {
  const auto weights = softmax_rows(stack(logits));
  std::vector<Tensor> out;
  out.reserve(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out.push_back(row(weights, k));
  return out;
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "l1_loss");
  const std::size_t n = pred.numel();
  if (n == 0) throw DimensionError("l1_loss of empty tensors");
  const auto p = pred.data(), t = target.data();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(p[i] - t[i]);
  return Tensor::make_result({1}, {s / static_cast<double>(n)}, {pred, target}, [n](detail::Node& self) {
    const auto& p = self.parents[0]->data;
    const auto& t = self.parents[1]->data;
    const double g = self.grad[0] / static_cast<double>(n);
    auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
    accumulate(self, 0, [&](std::vector<double>& gp) {
      for (std::size_t i = 0; i < n; ++i) gp[i] += g * sign(p[i] - t[i]);
    });
    accumulate(self, 1, [&](std::vector<double>& gt) {
      for (std::size_t i = 0; i < n; ++i) gt[i] -= g * sign(p[i] - t[i]);
    });
  });
}

}  // namespace irp::nn
