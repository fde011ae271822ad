#include "rirforge/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "rirforge/error.hpp"

namespace rirforge::nn {
namespace {

void require(bool ok, const char* message) {
  if (!ok) throw Error(ErrorKind::kShapeMismatch, message);
}

// Range of output positions l whose input tap l * stride + offset is inside
// [0, in_length).
struct TapRange {
  std::ptrdiff_t begin;
  std::ptrdiff_t end;
};

TapRange tap_range(std::ptrdiff_t offset, std::ptrdiff_t stride, std::ptrdiff_t in_length,
                   std::ptrdiff_t out_length) {
  std::ptrdiff_t begin = 0;
  if (offset < 0) begin = (-offset + stride - 1) / stride;
  std::ptrdiff_t end = 0;
  if (in_length - 1 - offset >= 0) end = (in_length - 1 - offset) / stride + 1;
  return {begin, std::min(end, out_length)};
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

NodeId conv1d(Graph& g, NodeId x, NodeId weight, NodeId bias, int stride, int dilation,
              int padding) {
  const Tensor& in = g.value(x);
  const Tensor& w = g.value(weight);
  const Tensor& b = g.value(bias);
  require(in.rank() == 3 && w.rank() == 3 && b.rank() == 1, "conv1d rank mismatch");
  require(in.dim(1) == w.dim(1), "conv1d input channels differ from weight");
  require(b.dim(0) == w.dim(0), "conv1d bias size differs from output channels");

  const auto batch = static_cast<std::ptrdiff_t>(in.dim(0));
  const auto cin = static_cast<std::ptrdiff_t>(in.dim(1));
  const auto lin = static_cast<std::ptrdiff_t>(in.dim(2));
  const auto cout = static_cast<std::ptrdiff_t>(w.dim(0));
  const auto kernel = static_cast<std::ptrdiff_t>(w.dim(2));
  const std::ptrdiff_t lout = (lin + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1;
  require(lout > 0, "conv1d output would be empty");

  Tensor out({static_cast<std::size_t>(batch), static_cast<std::size_t>(cout),
              static_cast<std::size_t>(lout)});
  for (std::ptrdiff_t bi = 0; bi < batch; ++bi) {
    for (std::ptrdiff_t co = 0; co < cout; ++co) {
      double* y = out.data.data() + (bi * cout + co) * lout;
      std::fill(y, y + lout, b.data[co]);
      for (std::ptrdiff_t ci = 0; ci < cin; ++ci) {
        const double* xr = in.data.data() + (bi * cin + ci) * lin;
        const double* wr = w.data.data() + (co * cin + ci) * kernel;
        for (std::ptrdiff_t k = 0; k < kernel; ++k) {
          const double wk = wr[k];
          const std::ptrdiff_t offset = k * dilation - padding;
          const TapRange r = tap_range(offset, stride, lin, lout);
          if (stride == 1) {
            for (std::ptrdiff_t l = r.begin; l < r.end; ++l) y[l] += wk * xr[l + offset];
          } else {
            for (std::ptrdiff_t l = r.begin; l < r.end; ++l) y[l] += wk * xr[l * stride + offset];
          }
        }
      }
    }
  }

  return g.add_node(
      std::move(out), {x, weight, bias},
      [=](Graph& graph, NodeId self) {
        const Tensor& dy = graph.grad(self);
        const Tensor& xin = graph.value(x);
        const Tensor& wv = graph.value(weight);
        const bool want_x = graph.needs_grad(x);
        const bool want_w = graph.needs_grad(weight);
        const bool want_b = graph.needs_grad(bias);
        double* dx = want_x ? graph.grad(x).data.data() : nullptr;
        double* dw = want_w ? graph.grad(weight).data.data() : nullptr;
        double* db = want_b ? graph.grad(bias).data.data() : nullptr;
        for (std::ptrdiff_t bi = 0; bi < batch; ++bi) {
          for (std::ptrdiff_t co = 0; co < cout; ++co) {
            const double* gy = dy.data.data() + (bi * cout + co) * lout;
            if (db != nullptr) {
              double acc = 0.0;
              for (std::ptrdiff_t l = 0; l < lout; ++l) acc += gy[l];
              db[co] += acc;
            }
            for (std::ptrdiff_t ci = 0; ci < cin; ++ci) {
              const double* xr = xin.data.data() + (bi * cin + ci) * lin;
              double* gx = dx != nullptr ? dx + (bi * cin + ci) * lin : nullptr;
              const double* wr = wv.data.data() + (co * cin + ci) * kernel;
              for (std::ptrdiff_t k = 0; k < kernel; ++k) {
                const std::ptrdiff_t offset = k * dilation - padding;
                const TapRange r = tap_range(offset, stride, lin, lout);
                if (dw != nullptr) {
                  double acc = 0.0;
                  if (stride == 1) {
                    for (std::ptrdiff_t l = r.begin; l < r.end; ++l) acc += gy[l] * xr[l + offset];
                  } else {
                    for (std::ptrdiff_t l = r.begin; l < r.end; ++l) {
                      acc += gy[l] * xr[l * stride + offset];
                    }
                  }
                  dw[(co * cin + ci) * kernel + k] += acc;
                }
                if (gx != nullptr) {
                  const double wk = wr[k];
                  if (stride == 1) {
                    for (std::ptrdiff_t l = r.begin; l < r.end; ++l) gx[l + offset] += wk * gy[l];
                  } else {
                    for (std::ptrdiff_t l = r.begin; l < r.end; ++l) {
                      gx[l * stride + offset] += wk * gy[l];
                    }
                  }
                }
              }
            }
          }
        }
      });
}

NodeId group_norm(Graph& g, NodeId x, NodeId gamma, NodeId beta, int groups,
                  double epsilon) {
  const Tensor& in = g.value(x);
  const Tensor& ga = g.value(gamma);
  const Tensor& be = g.value(beta);
  require(in.rank() == 3, "group_norm expects (B, C, L)");
  const std::size_t batch = in.dim(0);
  const std::size_t channels = in.dim(1);
  const std::size_t length = in.dim(2);
  require(groups > 0 && channels % static_cast<std::size_t>(groups) == 0,
          "group_norm channels not divisible by groups");
  require(ga.numel() == channels && be.numel() == channels, "group_norm affine size");

  const std::size_t per_group = channels / static_cast<std::size_t>(groups);
  const std::size_t count = per_group * length;
  auto normalized = std::make_shared<Tensor>(in.shape);
  auto inv_std = std::make_shared<std::vector<double>>(batch * groups);
  Tensor out(in.shape);

  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t gi = 0; gi < static_cast<std::size_t>(groups); ++gi) {
      const std::size_t base = (b * channels + gi * per_group) * length;
      const double* xs = in.data.data() + base;
      double mean = 0.0;
      for (std::size_t i = 0; i < count; ++i) mean += xs[i];
      mean /= static_cast<double>(count);
      double var = 0.0;
      for (std::size_t i = 0; i < count; ++i) var += (xs[i] - mean) * (xs[i] - mean);
      var /= static_cast<double>(count);
      const double rstd = 1.0 / std::sqrt(var + epsilon);
      (*inv_std)[b * groups + gi] = rstd;
      double* xh = normalized->data.data() + base;
      double* y = out.data.data() + base;
      for (std::size_t c = 0; c < per_group; ++c) {
        const std::size_t ch = gi * per_group + c;
        for (std::size_t l = 0; l < length; ++l) {
          const std::size_t i = c * length + l;
          xh[i] = (xs[i] - mean) * rstd;
          y[i] = ga.data[ch] * xh[i] + be.data[ch];
        }
      }
    }
  }

  return g.add_node(
      std::move(out), {x, gamma, beta},
      [=](Graph& graph, NodeId self) {
        const Tensor& dy = graph.grad(self);
        const Tensor& gv = graph.value(gamma);
        double* dgamma = graph.needs_grad(gamma) ? graph.grad(gamma).data.data() : nullptr;
        double* dbeta = graph.needs_grad(beta) ? graph.grad(beta).data.data() : nullptr;
        double* dx = graph.needs_grad(x) ? graph.grad(x).data.data() : nullptr;
        std::vector<double> dxhat(count);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t gi = 0; gi < static_cast<std::size_t>(groups); ++gi) {
            const std::size_t base = (b * channels + gi * per_group) * length;
            const double* gy = dy.data.data() + base;
            const double* xh = normalized->data.data() + base;
            double sum_dxhat = 0.0;
            double sum_dxhat_xhat = 0.0;
            for (std::size_t c = 0; c < per_group; ++c) {
              const std::size_t ch = gi * per_group + c;
              double acc_gamma = 0.0;
              double acc_beta = 0.0;
              for (std::size_t l = 0; l < length; ++l) {
                const std::size_t i = c * length + l;
                acc_gamma += gy[i] * xh[i];
                acc_beta += gy[i];
                dxhat[i] = gy[i] * gv.data[ch];
                sum_dxhat += dxhat[i];
                sum_dxhat_xhat += dxhat[i] * xh[i];
              }
              if (dgamma != nullptr) dgamma[ch] += acc_gamma;
              if (dbeta != nullptr) dbeta[ch] += acc_beta;
            }
            if (dx != nullptr) {
              const double rstd = (*inv_std)[b * groups + gi];
              const double n = static_cast<double>(count);
              double* gx = dx + base;
              for (std::size_t i = 0; i < count; ++i) {
                gx[i] += rstd / n * (n * dxhat[i] - sum_dxhat - xh[i] * sum_dxhat_xhat);
              }
            }
          }
        }
      });
}

NodeId silu(Graph& g, NodeId x) {
  const Tensor& in = g.value(x);
  Tensor out(in.shape);
  for (std::size_t i = 0; i < in.numel(); ++i) out.data[i] = in.data[i] * sigmoid(in.data[i]);
  return g.add_node(std::move(out), {x}, [=](Graph& graph, NodeId self) {
    const Tensor& dy = graph.grad(self);
    const Tensor& xin = graph.value(x);
    Tensor& dx = graph.grad(x);
    for (std::size_t i = 0; i < xin.numel(); ++i) {
      const double s = sigmoid(xin.data[i]);
      dx.data[i] += dy.data[i] * s * (1.0 + xin.data[i] * (1.0 - s));
    }
  });
}

NodeId add(Graph& g, NodeId a, NodeId b) {
  const Tensor& va = g.value(a);
  const Tensor& vb = g.value(b);
  require(va.shape == vb.shape, "add operands differ in shape");
  Tensor out = va;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += vb.data[i];
  return g.add_node(std::move(out), {a, b}, [=](Graph& graph, NodeId self) {
    const Tensor& dy = graph.grad(self);
    for (NodeId in : {a, b}) {
      if (!graph.needs_grad(in)) continue;
      Tensor& dx = graph.grad(in);
      for (std::size_t i = 0; i < dy.numel(); ++i) dx.data[i] += dy.data[i];
    }
  });
}

NodeId add_channel_offset(Graph& g, NodeId x, NodeId v) {
  const Tensor& in = g.value(x);
  const Tensor& off = g.value(v);
  require(in.rank() == 3 && off.rank() == 2, "add_channel_offset rank mismatch");
  require(in.dim(0) == off.dim(0) && in.dim(1) == off.dim(1),
          "add_channel_offset shape mismatch");
  const std::size_t rows = in.dim(0) * in.dim(1);
  const std::size_t length = in.dim(2);
  Tensor out = in;
  for (std::size_t r = 0; r < rows; ++r) {
    double* y = out.data.data() + r * length;
    for (std::size_t l = 0; l < length; ++l) y[l] += off.data[r];
  }
  return g.add_node(std::move(out), {x, v}, [=](Graph& graph, NodeId self) {
    const Tensor& dy = graph.grad(self);
    if (graph.needs_grad(x)) {
      Tensor& dx = graph.grad(x);
      for (std::size_t i = 0; i < dy.numel(); ++i) dx.data[i] += dy.data[i];
    }
    if (graph.needs_grad(v)) {
      Tensor& dv = graph.grad(v);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* gy = dy.data.data() + r * length;
        double acc = 0.0;
        for (std::size_t l = 0; l < length; ++l) acc += gy[l];
        dv.data[r] += acc;
      }
    }
  });
}

NodeId linear(Graph& g, NodeId x, NodeId weight, NodeId bias) {
  const Tensor& in = g.value(x);
  const Tensor& w = g.value(weight);
  const Tensor& b = g.value(bias);
  require(in.rank() == 2 && w.rank() == 2 && b.rank() == 1, "linear rank mismatch");
  require(in.dim(1) == w.dim(1) && b.dim(0) == w.dim(0), "linear shape mismatch");
  const std::size_t batch = in.dim(0);
  const std::size_t nin = w.dim(1);
  const std::size_t nout = w.dim(0);
  Tensor out({batch, nout});
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t o = 0; o < nout; ++o) {
      double acc = b.data[o];
      for (std::size_t i = 0; i < nin; ++i) acc += w.data[o * nin + i] * in.data[bi * nin + i];
      out.data[bi * nout + o] = acc;
    }
  }
  return g.add_node(std::move(out), {x, weight, bias}, [=](Graph& graph, NodeId self) {
    const Tensor& dy = graph.grad(self);
    const Tensor& xin = graph.value(x);
    const Tensor& wv = graph.value(weight);
    double* dx = graph.needs_grad(x) ? graph.grad(x).data.data() : nullptr;
    double* dw = graph.needs_grad(weight) ? graph.grad(weight).data.data() : nullptr;
    double* db = graph.needs_grad(bias) ? graph.grad(bias).data.data() : nullptr;
    for (std::size_t bi = 0; bi < batch; ++bi) {
      for (std::size_t o = 0; o < nout; ++o) {
        const double gy = dy.data[bi * nout + o];
        if (db != nullptr) db[o] += gy;
        for (std::size_t i = 0; i < nin; ++i) {
          if (dw != nullptr) dw[o * nin + i] += gy * xin.data[bi * nin + i];
          if (dx != nullptr) dx[bi * nin + i] += gy * wv.data[o * nin + i];
        }
      }
    }
  });
}

NodeId concat_channels(Graph& g, NodeId a, NodeId b) {
  const Tensor& va = g.value(a);
  const Tensor& vb = g.value(b);
  require(va.rank() == 3 && vb.rank() == 3, "concat expects (B, C, L)");
  require(va.dim(0) == vb.dim(0) && va.dim(2) == vb.dim(2), "concat shape mismatch");
  const std::size_t batch = va.dim(0);
  const std::size_t ca = va.dim(1);
  const std::size_t cb = vb.dim(1);
  const std::size_t length = va.dim(2);
  Tensor out({batch, ca + cb, length});
  for (std::size_t bi = 0; bi < batch; ++bi) {
    std::copy_n(va.data.data() + bi * ca * length, ca * length,
                out.data.data() + bi * (ca + cb) * length);
    std::copy_n(vb.data.data() + bi * cb * length, cb * length,
                out.data.data() + (bi * (ca + cb) + ca) * length);
  }
  return g.add_node(std::move(out), {a, b}, [=](Graph& graph, NodeId self) {
    const Tensor& dy = graph.grad(self);
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* src = dy.data.data() + bi * (ca + cb) * length;
      if (graph.needs_grad(a)) {
        double* dst = graph.grad(a).data.data() + bi * ca * length;
        for (std::size_t i = 0; i < ca * length; ++i) dst[i] += src[i];
      }
      if (graph.needs_grad(b)) {
        double* dst = graph.grad(b).data.data() + bi * cb * length;
        for (std::size_t i = 0; i < cb * length; ++i) dst[i] += src[ca * length + i];
      }
    }
  });
}

NodeId upsample2(Graph& g, NodeId x) {
  const Tensor& in = g.value(x);
  require(in.rank() == 3, "upsample2 expects (B, C, L)");
  const std::size_t rows = in.dim(0) * in.dim(1);
  const std::size_t length = in.dim(2);
  Tensor out({in.dim(0), in.dim(1), 2 * length});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xs = in.data.data() + r * length;
    double* y = out.data.data() + r * 2 * length;
    for (std::size_t l = 0; l < length; ++l) y[2 * l] = y[2 * l + 1] = xs[l];
  }
  return g.add_node(std::move(out), {x}, [=](Graph& graph, NodeId self) {
    const Tensor& dy = graph.grad(self);
    Tensor& dx = graph.grad(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gy = dy.data.data() + r * 2 * length;
      double* gx = dx.data.data() + r * length;
      for (std::size_t l = 0; l < length; ++l) gx[l] += gy[2 * l] + gy[2 * l + 1];
    }
  });
}

NodeId sum(Graph& g, NodeId x) {
  const Tensor& in = g.value(x);
  double acc = 0.0;
  for (double v : in.data) acc += v;
  return g.add_node(Tensor({1}, acc), {x}, [=](Graph& graph, NodeId self) {
    const double gy = graph.grad(self).data[0];
    Tensor& dx = graph.grad(x);
    for (double& v : dx.data) v += gy;
  });
}

NodeId scale(Graph& g, NodeId x, double factor) {
  Tensor out = g.value(x);
  for (double& v : out.data) v *= factor;
  return g.add_node(std::move(out), {x}, [=](Graph& graph, NodeId self) {
    const Tensor& dy = graph.grad(self);
    Tensor& dx = graph.grad(x);
    for (std::size_t i = 0; i < dy.numel(); ++i) dx.data[i] += factor * dy.data[i];
  });
}

NodeId custom_loss(Graph& g, NodeId prediction,
                   const std::function<LossValue(const Tensor& prediction)>& fn) {
  LossValue loss = fn(g.value(prediction));
  if (g.recording()) {
    require(loss.grad.shape == g.value(prediction).shape, "loss gradient shape mismatch");
  }
  auto grad = std::make_shared<Tensor>(std::move(loss.grad));
  return g.add_node(Tensor({1}, loss.value), {prediction},
                    [=](Graph& graph, NodeId self) {
                      const double gy = graph.grad(self).data[0];
                      Tensor& dx = graph.grad(prediction);
                      for (std::size_t i = 0; i < dx.numel(); ++i) {
                        dx.data[i] += gy * grad->data[i];
                      }
                    });
}

}  // namespace rirforge::nn
