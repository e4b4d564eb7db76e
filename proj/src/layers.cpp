#include "locaug/layers.hpp"

#include <algorithm>
#include <experimental/simd>
#include <cmath>
#include <numeric>
#include <string>

#include "locaug/error.hpp"

namespace locaug {

namespace {

void require_nchw(const Tensor& x, const char* op) {
  if (x.rank() != 4) {
    throw Error(ErrorKind::shape_mismatch,
                std::string(op) + ": expected NCHW tensor, got " + shape_string(x.shape()));
  }
}

struct ConvGeometry {
  std::size_t batch, cin, cout, in_h, in_w, out_h, out_w, kernel;
  std::ptrdiff_t pad;
};

ConvGeometry conv_geometry(const Tensor& x, const ConvParams& p) {
  require_nchw(x, "conv2d");
  if (p.weights.rank() != 4 || p.weights.extent(2) != p.weights.extent(3)) {
    throw Error(ErrorKind::shape_mismatch, "conv2d: weights must be [Cout,Cin,K,K]");
  }
  if (p.bias.size() != p.out_channels()) {
    throw Error(ErrorKind::shape_mismatch, "conv2d: bias length does not match Cout");
  }
  if (x.extent(1) != p.in_channels()) {
    throw Error(ErrorKind::shape_mismatch, "conv2d: channel mismatch (input has " +
                                               std::to_string(x.extent(1)) + ", weights expect " +
                                               std::to_string(p.in_channels()) + ")");
  }
  ConvGeometry g{};
  g.batch = x.extent(0);
  g.cin = x.extent(1);
  g.cout = p.out_channels();
  g.in_h = x.extent(2);
  g.in_w = x.extent(3);
  g.kernel = p.kernel();
  if (p.padding == Padding::zero) {
    g.pad = static_cast<std::ptrdiff_t>(g.kernel / 2);
    g.out_h = g.in_h;
    g.out_w = g.in_w;
  } else {
    if (g.in_h < g.kernel || g.in_w < g.kernel) {
      throw Error(ErrorKind::shape_mismatch, "conv2d: spatial extent " + shape_string(x.shape()) +
                                                 " smaller than kernel without padding");
    }
    g.pad = 0;
    g.out_h = g.in_h - g.kernel + 1;
    g.out_w = g.in_w - g.kernel + 1;
  }
  return g;
}

}  // namespace

ConvParams make_conv(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                     Padding padding) {
  return ConvParams{Tensor({out_channels, in_channels, kernel, kernel}), Tensor({out_channels}),
                    padding};
}

namespace {

namespace stdx = std::experimental;
using Vec = stdx::native_simd<double>;
constexpr std::size_t kLanes = Vec::size();

// Copy of x with `pad` zeros around every plane.
std::vector<double> pad_planes(const Tensor& x, std::size_t pad, std::size_t& ph, std::size_t& pw) {
  const std::size_t planes = x.extent(0) * x.extent(1);
  const std::size_t h = x.extent(2), w = x.extent(3);
  ph = h + 2 * pad;
  pw = w + 2 * pad;
  std::vector<double> out(planes * ph * pw, 0.0);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = x.data().data() + p * h * w;
    double* dst = out.data() + p * ph * pw + pad * pw + pad;
    for (std::size_t i = 0; i < h; ++i) std::copy_n(src + i * w, w, dst + i * pw);
  }
  return out;
}

struct CorrelateArgs {
  const double* input;  // padded, [N, Cin, PH, PW]
  const double* weights;  // [Cout, Cin, K, K]
  const double* bias;     // [Cout] or nullptr
  double* output;         // [N, Cout, OH, OW]
  std::size_t batch, cin, cout, ph, pw, oh, ow, kernel;
};

// Valid cross-correlation of a padded input. Each call produces `Block`
// output channels starting at co, holding Block x kLanes partial sums in
// registers while sweeping all input taps.
template <std::size_t Block, std::size_t K>
void correlate_block(const CorrelateArgs& a, std::size_t n, std::size_t co) {
  const std::size_t kk = K * K;
  const std::size_t wstride = a.cin * kk;
  for (std::size_t oh = 0; oh < a.oh; ++oh) {
    std::size_t w0 = 0;
    for (; w0 + kLanes <= a.ow; w0 += kLanes) {
      Vec acc[Block];
      for (std::size_t b = 0; b < Block; ++b) acc[b] = a.bias ? a.bias[co + b] : 0.0;
      for (std::size_t ci = 0; ci < a.cin; ++ci) {
        const double* plane = a.input + (n * a.cin + ci) * a.ph * a.pw;
        const double* wci = a.weights + co * wstride + ci * kk;
        for (std::size_t kh = 0; kh < K; ++kh) {
          const double* row = plane + (oh + kh) * a.pw + w0;
          for (std::size_t kw = 0; kw < K; ++kw) {
            const Vec in(row + kw, stdx::element_aligned);
            for (std::size_t b = 0; b < Block; ++b) acc[b] += wci[b * wstride + kh * K + kw] * in;
          }
        }
      }
      for (std::size_t b = 0; b < Block; ++b) {
        acc[b].copy_to(a.output + ((n * a.cout + co + b) * a.oh + oh) * a.ow + w0, stdx::element_aligned);
      }
    }
    for (; w0 < a.ow; ++w0) {
      for (std::size_t b = 0; b < Block; ++b) {
        double acc = a.bias ? a.bias[co + b] : 0.0;
        for (std::size_t ci = 0; ci < a.cin; ++ci) {
          const double* plane = a.input + (n * a.cin + ci) * a.ph * a.pw;
          const double* wci = a.weights + (co + b) * wstride + ci * kk;
          for (std::size_t kh = 0; kh < K; ++kh) {
            for (std::size_t kw = 0; kw < K; ++kw) {
              acc += wci[kh * K + kw] * plane[(oh + kh) * a.pw + w0 + kw];
            }
          }
        }
        a.output[((n * a.cout + co + b) * a.oh + oh) * a.ow + w0] = acc;
      }
    }
  }
}

template <std::size_t K>
void correlate_kernel(const CorrelateArgs& a) {
  for (std::size_t n = 0; n < a.batch; ++n) {
    std::size_t co = 0;
    for (; co + 4 <= a.cout; co += 4) correlate_block<4, K>(a, n, co);
    switch (a.cout - co) {
      case 3: correlate_block<3, K>(a, n, co); break;
      case 2: correlate_block<2, K>(a, n, co); break;
      case 1: correlate_block<1, K>(a, n, co); break;
      default: break;
    }
  }
}

void correlate(const CorrelateArgs& a) {
  switch (a.kernel) {
    case 1: correlate_kernel<1>(a); break;
    case 3: correlate_kernel<3>(a); break;
    default:
      throw Error(ErrorKind::invalid_argument,
                  "conv2d: unsupported kernel extent " + std::to_string(a.kernel));
  }
}

// dW[co,ci,kh,kw] = sum_{n,oh,ow} d_out[n,co,oh,ow] * P[n,ci,oh+kh,ow+kw],
// for `Block` output channels at once so each input row load is shared.
template <std::size_t Block, std::size_t K>
void weight_grad_block(const double* padded, const double* d_out, double* d_weights, std::size_t co,
                       std::size_t batch, std::size_t cin, std::size_t cout, std::size_t ph, std::size_t pw,
                       std::size_t oh_count, std::size_t ow_count) {
  const std::size_t plane_out = oh_count * ow_count;
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (std::size_t kh = 0; kh < K; ++kh) {
      Vec acc[Block][K] = {};
      double tail[Block][K] = {};
      for (std::size_t n = 0; n < batch; ++n) {
        const double* plane = padded + (n * cin + ci) * ph * pw;
        const double* dplane = d_out + (n * cout + co) * plane_out;
        for (std::size_t oh = 0; oh < oh_count; ++oh) {
          const double* row = plane + (oh + kh) * pw;
          std::size_t w0 = 0;
          for (; w0 + kLanes <= ow_count; w0 += kLanes) {
            Vec in[K];
            for (std::size_t kw = 0; kw < K; ++kw) in[kw].copy_from(row + w0 + kw, stdx::element_aligned);
            for (std::size_t b = 0; b < Block; ++b) {
              const Vec d(dplane + b * plane_out + oh * ow_count + w0, stdx::element_aligned);
              for (std::size_t kw = 0; kw < K; ++kw) acc[b][kw] += d * in[kw];
            }
          }
          for (; w0 < ow_count; ++w0) {
            for (std::size_t b = 0; b < Block; ++b) {
              const double d = dplane[b * plane_out + oh * ow_count + w0];
              for (std::size_t kw = 0; kw < K; ++kw) tail[b][kw] += d * row[w0 + kw];
            }
          }
        }
      }
      for (std::size_t b = 0; b < Block; ++b) {
        for (std::size_t kw = 0; kw < K; ++kw) {
          double s = tail[b][kw];
          for (std::size_t j = 0; j < kLanes; ++j) s += acc[b][kw][j];
          d_weights[(((co + b) * cin + ci) * K + kh) * K + kw] += s;
        }
      }
    }
  }
}

template <std::size_t K>
void weight_grad_kernel(const double* padded, const double* d_out, double* d_weights, std::size_t batch,
                        std::size_t cin, std::size_t cout, std::size_t ph, std::size_t pw,
                        std::size_t oh_count, std::size_t ow_count) {
  std::size_t co = 0;
  for (; co + 4 <= cout; co += 4) {
    weight_grad_block<4, K>(padded, d_out, d_weights, co, batch, cin, cout, ph, pw, oh_count, ow_count);
  }
  for (; co < cout; ++co) {
    weight_grad_block<1, K>(padded, d_out, d_weights, co, batch, cin, cout, ph, pw, oh_count, ow_count);
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const ConvParams& p) {
  const ConvGeometry g = conv_geometry(x, p);
  Tensor out({g.batch, g.cout, g.out_h, g.out_w});
  std::size_t ph = 0, pw = 0;
  const std::vector<double> padded = pad_planes(x, static_cast<std::size_t>(g.pad), ph, pw);
  correlate({padded.data(), p.weights.data().data(), p.bias.data().data(), out.data().data(), g.batch,
             g.cin, g.cout, ph, pw, g.out_h, g.out_w, g.kernel});
  return out;
}

LayerGrad conv2d_backward(const Tensor& x, const ConvParams& p, const Tensor& d_out) {
  const ConvGeometry g = conv_geometry(x, p);
  if (d_out.shape() != Shape{g.batch, g.cout, g.out_h, g.out_w}) {
    throw Error(ErrorKind::shape_mismatch,
                "conv2d_backward: d_out shape " + shape_string(d_out.shape()) + " does not match output");
  }
  LayerGrad grad{Tensor::zeros_like(p.weights), Tensor::zeros_like(p.bias), Tensor::zeros_like(x)};
  const std::size_t k = g.kernel;

  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t co = 0; co < g.cout; ++co) {
      const auto d = d_out.plane(n, co);
      grad.d_bias[co] += std::accumulate(d.begin(), d.end(), 0.0);
    }
  }

  std::size_t ph = 0, pw = 0;
  const std::vector<double> padded = pad_planes(x, static_cast<std::size_t>(g.pad), ph, pw);
  if (k == 3) {
    weight_grad_kernel<3>(padded.data(), d_out.data().data(), grad.d_weights.data().data(), g.batch, g.cin,
                          g.cout, ph, pw, g.out_h, g.out_w);
  } else if (k == 1) {
    weight_grad_kernel<1>(padded.data(), d_out.data().data(), grad.d_weights.data().data(), g.batch, g.cin,
                          g.cout, ph, pw, g.out_h, g.out_w);
  } else {
    throw Error(ErrorKind::invalid_argument, "conv2d: unsupported kernel extent " + std::to_string(k));
  }

  // d_input is the full correlation of d_out with the flipped, transposed kernel.
  std::vector<double> flipped(p.weights.size());
  for (std::size_t co = 0; co < g.cout; ++co) {
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      for (std::size_t kh = 0; kh < k; ++kh) {
        for (std::size_t kw = 0; kw < k; ++kw) {
          flipped[((ci * g.cout + co) * k + (k - 1 - kh)) * k + (k - 1 - kw)] =
              p.weights[((co * g.cin + ci) * k + kh) * k + kw];
        }
      }
    }
  }
  const std::size_t back_pad = k - 1 - static_cast<std::size_t>(g.pad);
  std::size_t dph = 0, dpw = 0;
  const std::vector<double> d_padded = pad_planes(d_out, back_pad, dph, dpw);
  correlate({d_padded.data(), flipped.data(), nullptr, grad.d_input.data().data(), g.batch, g.cout, g.cin,
             dph, dpw, g.in_h, g.in_w, k});
  return grad;
}

PoolResult maxpool2(const Tensor& x) {
  require_nchw(x, "maxpool2");
  const std::size_t h = x.extent(2), w = x.extent(3);
  if (h % 2 != 0) throw Error(ErrorKind::shape_mismatch, "maxpool2: odd extent on H (" + std::to_string(h) + ")");
  if (w % 2 != 0) throw Error(ErrorKind::shape_mismatch, "maxpool2: odd extent on W (" + std::to_string(w) + ")");
  const std::size_t oh = h / 2, ow = w / 2;
  PoolResult r{Tensor({x.extent(0), x.extent(1), oh, ow}), PoolIndices{x.shape(), {}}};
  r.indices.argmax.resize(r.output.size());
  std::size_t k = 0;
  for (std::size_t n = 0; n < x.extent(0); ++n) {
    for (std::size_t c = 0; c < x.extent(1); ++c) {
      const double* in = x.plane(n, c).data();
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j, ++k) {
          const std::size_t base = 2 * i * w + 2 * j;
          const std::size_t cand[4] = {base, base + 1, base + w, base + w + 1};
          std::size_t best = cand[0];
          for (std::size_t t = 1; t < 4; ++t) {
            if (in[cand[t]] > in[best]) best = cand[t];
          }
          r.output[k] = in[best];
          r.indices.argmax[k] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return r;
}

Tensor maxpool2_backward(const PoolIndices& indices, const Tensor& d_out) {
  if (d_out.size() != indices.argmax.size()) {
    throw Error(ErrorKind::shape_mismatch, "maxpool2_backward: gradient does not match pool record");
  }
  Tensor d_in(indices.input_shape);
  const std::size_t in_plane = indices.input_shape[2] * indices.input_shape[3];
  const std::size_t out_plane = d_out.extent(2) * d_out.extent(3);
  for (std::size_t k = 0; k < d_out.size(); ++k) {
    const std::size_t plane = k / out_plane;
    d_in[plane * in_plane + indices.argmax[k]] += d_out[k];
  }
  return d_in;
}

Tensor upsample2_nearest(const Tensor& x) {
  require_nchw(x, "upsample2_nearest");
  const std::size_t h = x.extent(2), w = x.extent(3);
  Tensor out({x.extent(0), x.extent(1), 2 * h, 2 * w});
  for (std::size_t n = 0; n < x.extent(0); ++n) {
    for (std::size_t c = 0; c < x.extent(1); ++c) {
      const double* in = x.plane(n, c).data();
      double* o = out.plane(n, c).data();
      for (std::size_t i = 0; i < 2 * h; ++i) {
        for (std::size_t j = 0; j < 2 * w; ++j) o[i * 2 * w + j] = in[(i / 2) * w + j / 2];
      }
    }
  }
  return out;
}

Tensor upsample2_backward(const Tensor& d_out) {
  require_nchw(d_out, "upsample2_backward");
  const std::size_t h = d_out.extent(2), w = d_out.extent(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw Error(ErrorKind::shape_mismatch, "upsample2_backward: odd gradient extent");
  }
  Tensor d_in({d_out.extent(0), d_out.extent(1), h / 2, w / 2});
  for (std::size_t n = 0; n < d_out.extent(0); ++n) {
    for (std::size_t c = 0; c < d_out.extent(1); ++c) {
      const double* d = d_out.plane(n, c).data();
      double* di = d_in.plane(n, c).data();
      for (std::size_t i = 0; i < h / 2; ++i) {
        for (std::size_t j = 0; j < w / 2; ++j) {
          const std::size_t base = 2 * i * w + 2 * j;
          di[i * (w / 2) + j] = d[base] + d[base + 1] + d[base + w] + d[base + w + 1];
        }
      }
    }
  }
  return d_in;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& d_out) {
  if (x.shape() != d_out.shape()) throw Error(ErrorKind::shape_mismatch, "relu_backward: shape mismatch");
  Tensor d = d_out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(x[i] > 0.0)) d[i] = 0.0;
  }
  return d;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) {
    // Branch on sign so exp never overflows.
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& d_out) {
  if (y.shape() != d_out.shape()) throw Error(ErrorKind::shape_mismatch, "sigmoid_backward: shape mismatch");
  Tensor d = d_out;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= y[i] * (1.0 - y[i]);
  return d;
}

Tensor softmax_channels(const Tensor& x) {
  require_nchw(x, "softmax_channels");
  const std::size_t channels = x.extent(1);
  const std::size_t plane = x.extent(2) * x.extent(3);
  Tensor y = Tensor::zeros_like(x);
  for (std::size_t n = 0; n < x.extent(0); ++n) {
    for (std::size_t p = 0; p < plane; ++p) {
      const std::size_t base = n * channels * plane + p;
      double peak = x[base];
      for (std::size_t c = 1; c < channels; ++c) peak = std::max(peak, x[base + c * plane]);
      double total = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        const double e = std::exp(x[base + c * plane] - peak);
        y[base + c * plane] = e;
        total += e;
      }
      for (std::size_t c = 0; c < channels; ++c) y[base + c * plane] /= total;
    }
  }
  return y;
}

Tensor softmax_channels_backward(const Tensor& y, const Tensor& d_out) {
  require_nchw(y, "softmax_channels_backward");
  if (y.shape() != d_out.shape()) {
    throw Error(ErrorKind::shape_mismatch, "softmax_channels_backward: shape mismatch");
  }
  const std::size_t channels = y.extent(1);
  const std::size_t plane = y.extent(2) * y.extent(3);
  Tensor d = Tensor::zeros_like(y);
  for (std::size_t n = 0; n < y.extent(0); ++n) {
    for (std::size_t p = 0; p < plane; ++p) {
      const std::size_t base = n * channels * plane + p;
      double dot = 0.0;
      for (std::size_t c = 0; c < channels; ++c) dot += y[base + c * plane] * d_out[base + c * plane];
      for (std::size_t c = 0; c < channels; ++c) {
        d[base + c * plane] = y[base + c * plane] * (d_out[base + c * plane] - dot);
      }
    }
  }
  return d;
}

}  // namespace locaug
