// Copyright 2026 The cxnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cxnet/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "cxnet/error.hpp"

namespace cxnet::nn {

namespace {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_string(t.shape()));
  }
}

struct ConvGeometry {
  int n, c, h, w;
  int o, kh, kw;
  int stride, pad;
  int oh, ow;

  int k() const { return c * kh * kw; }
  int p() const { return oh * ow; }
  bool direct() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

void im2col(const double* x, const ConvGeometry& g, double* cols) {
  for (int c = 0; c < g.c; ++c) {
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        double* row = cols + static_cast<std::size_t>((c * g.kh + ky) * g.kw + kx) * g.p();
        for (int oy = 0; oy < g.oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* dst = row + static_cast<std::size_t>(oy) * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.ow, 0.0);
            continue;
          }
          const double* src = x + (static_cast<std::size_t>(c) * g.h + iy) * g.w;
          for (int ox = 0; ox < g.ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, const ConvGeometry& g, double* dx) {
  for (int c = 0; c < g.c; ++c) {
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const double* row = cols + static_cast<std::size_t>((c * g.kh + ky) * g.kw + kx) * g.p();
        for (int oy = 0; oy < g.oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const double* src = row + static_cast<std::size_t>(oy) * g.ow;
          double* dst = dx + (static_cast<std::size_t>(c) * g.h + iy) * g.w;
          for (int ox = 0; ox < g.ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

bool wants_grad(const Node& self, std::size_t i) {
  return i < self.inputs.size() && self.inputs[i] && self.inputs[i]->requires_grad;
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias, Conv2dOptions opts) {
  const Tensor& X = x.value();
  const Tensor& W = weight.value();
  require_rank(X, 4, "conv2d input");
  require_rank(W, 4, "conv2d weight");
  ConvGeometry g{X.dim(0), X.dim(1), X.dim(2), X.dim(3), W.dim(0), W.dim(2), W.dim(3), opts.stride, opts.padding, 0, 0};
  if (W.dim(1) != g.c) {
    throw ShapeError("conv2d: weight expects " + std::to_string(W.dim(1)) + " input channels, got " + std::to_string(g.c));
  }
  if (opts.stride < 1 || opts.padding < 0) throw ShapeError("conv2d: bad stride/padding");
  g.oh = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.ow = (g.w + 2 * g.pad - g.kw) / g.stride + 1;
  if (g.oh <= 0 || g.ow <= 0) throw ShapeError("conv2d: kernel larger than padded input " + shape_string(X.shape()));
  if (bias.defined() && bias.value().numel() != static_cast<std::size_t>(g.o)) throw ShapeError("conv2d: bias size");

  Tensor out({g.n, g.o, g.oh, g.ow});
  std::vector<double> cols(g.direct() ? 0 : static_cast<std::size_t>(g.k()) * g.p());
  CMapR Wm(W.data(), g.o, g.k());
  for (int n = 0; n < g.n; ++n) {
    const double* xn = X.data() + static_cast<std::size_t>(n) * g.c * g.h * g.w;
    const double* colp = xn;
    if (!g.direct()) {
      im2col(xn, g, cols.data());
      colp = cols.data();
    }
    MapR Om(out.data() + static_cast<std::size_t>(n) * g.o * g.p(), g.o, g.p());
    Om.noalias() = Wm * CMapR(colp, g.k(), g.p());
    if (bias.defined()) Om.colwise() += CMapV(bias.value().data(), g.o);
  }

  return Var::from_op(std::move(out), {x, weight, bias}, [g](Node& self) {
    const Tensor& X = self.inputs[0]->value;
    const Tensor& W = self.inputs[1]->value;
    const Tensor& dOut = self.grad;
    const bool gx = wants_grad(self, 0);
    const bool gw = wants_grad(self, 1);
    const bool gb = wants_grad(self, 2);
    std::vector<double> cols(g.direct() ? 0 : static_cast<std::size_t>(g.k()) * g.p());
    std::vector<double> dcols(gx && !g.direct() ? static_cast<std::size_t>(g.k()) * g.p() : 0);
    CMapR Wm(W.data(), g.o, g.k());
    for (int n = 0; n < g.n; ++n) {
      CMapR dO(dOut.data() + static_cast<std::size_t>(n) * g.o * g.p(), g.o, g.p());
      const double* xn = X.data() + static_cast<std::size_t>(n) * g.c * g.h * g.w;
      if (gw) {
        const double* colp = xn;
        if (!g.direct()) {
          im2col(xn, g, cols.data());
          colp = cols.data();
        }
        MapR dW(self.inputs[1]->grad_buffer().data(), g.o, g.k());
        dW.noalias() += dO * CMapR(colp, g.k(), g.p()).transpose();
      }
      if (gb) {
        Eigen::Map<Eigen::VectorXd> db(self.inputs[2]->grad_buffer().data(), g.o);
        db += dO.rowwise().sum();
      }
      if (gx) {
        double* dxn = self.inputs[0]->grad_buffer().data() + static_cast<std::size_t>(n) * g.c * g.h * g.w;
        if (g.direct()) {
          MapR(dxn, g.k(), g.p()).noalias() += Wm.transpose() * dO;
        } else {
          MapR(dcols.data(), g.k(), g.p()).noalias() = Wm.transpose() * dO;
          col2im(dcols.data(), g, dxn);
        }
      }
    }
  });
}

Var conv_transpose2x2(const Var& x, const Var& weight, const Var& bias) {
  const Tensor& X = x.value();
  const Tensor& W = weight.value();
  require_rank(X, 4, "conv_transpose2x2 input");
  require_rank(W, 4, "conv_transpose2x2 weight");
  const int n = X.dim(0), c = X.dim(1), h = X.dim(2), w = X.dim(3);
  const int o = W.dim(1);
  if (W.dim(0) != c || W.dim(2) != 2 || W.dim(3) != 2) throw ShapeError("conv_transpose2x2: weight must be (C, O, 2, 2)");
  const int hw = h * w;
  Tensor out({n, o, 2 * h, 2 * w});
  MatR Y(o * 4, hw);
  CMapR Wm(W.data(), c, o * 4);
  for (int s = 0; s < n; ++s) {
    Y.noalias() = Wm.transpose() * CMapR(X.data() + static_cast<std::size_t>(s) * c * hw, c, hw);
    for (int oc = 0; oc < o; ++oc) {
      const double b = bias.defined() ? bias.value()[oc] : 0.0;
      for (int a = 0; a < 2; ++a) {
        for (int bb = 0; bb < 2; ++bb) {
          const double* yrow = Y.data() + static_cast<std::size_t>(oc * 4 + a * 2 + bb) * hw;
          for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) out.at(s, oc, 2 * i + a, 2 * j + bb) = yrow[i * w + j] + b;
          }
        }
      }
    }
  }
  return Var::from_op(std::move(out), {x, weight, bias}, [n, c, h, w, o](Node& self) {
    const int hw = h * w;
    const Tensor& X = self.inputs[0]->value;
    const Tensor& W = self.inputs[1]->value;
    const Tensor& dOut = self.grad;
    MatR dY(o * 4, hw);
    CMapR Wm(W.data(), c, o * 4);
    for (int s = 0; s < n; ++s) {
      for (int oc = 0; oc < o; ++oc) {
        for (int a = 0; a < 2; ++a) {
          for (int bb = 0; bb < 2; ++bb) {
            double* row = dY.data() + static_cast<std::size_t>(oc * 4 + a * 2 + bb) * hw;
            for (int i = 0; i < h; ++i) {
              for (int j = 0; j < w; ++j) row[i * w + j] = dOut.at(s, oc, 2 * i + a, 2 * j + bb);
            }
          }
        }
      }
      if (wants_grad(self, 1)) {
        MapR dW(self.inputs[1]->grad_buffer().data(), c, o * 4);
        dW.noalias() += CMapR(X.data() + static_cast<std::size_t>(s) * c * hw, c, hw) * dY.transpose();
      }
      if (wants_grad(self, 2)) {
        double* db = self.inputs[2]->grad_buffer().data();
        for (int oc = 0; oc < o; ++oc) db[oc] += dY.middleRows(oc * 4, 4).sum();
      }
      if (wants_grad(self, 0)) {
        MapR dX(self.inputs[0]->grad_buffer().data() + static_cast<std::size_t>(s) * c * hw, c, hw);
        dX.noalias() += Wm * dY;
      }
    }
  });
}

Var max_pool2d(const Var& x, int kernel, int stride, int padding) {
  const Tensor& X = x.value();
  require_rank(X, 4, "max_pool2d");
  const int n = X.dim(0), c = X.dim(1), h = X.dim(2), w = X.dim(3);
  const int oh = (h + 2 * padding - kernel) / stride + 1;
  const int ow = (w + 2 * padding - kernel) / stride + 1;
  if (oh <= 0 || ow <= 0) throw ShapeError("max_pool2d: window larger than input");
  Tensor out({n, c, oh, ow});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.numel());
  std::size_t k = 0;
  for (int s = 0; s < n; ++s) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t base = (static_cast<std::size_t>(s) * c + ch) * h * w;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++k) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_i = base;
          for (int ky = 0; ky < kernel; ++ky) {
            const int iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int ix = ox * stride - padding + kx;
              if (ix < 0 || ix >= w) continue;
              const std::size_t idx = base + static_cast<std::size_t>(iy) * w + ix;
              if (X[idx] > best) {
                best = X[idx];
                best_i = idx;
              }
            }
          }
          out[k] = best;
          (*argmax)[k] = best_i;
        }
      }
    }
  }
  return Var::from_op(std::move(out), {x}, [argmax](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < argmax->size(); ++i) dx[(*argmax)[i]] += self.grad[i];
  });
}

Var avg_pool2d(const Var& x, int kernel, int stride) {
  const Tensor& X = x.value();
  require_rank(X, 4, "avg_pool2d");
  const int n = X.dim(0), c = X.dim(1), h = X.dim(2), w = X.dim(3);
  const int oh = (h - kernel) / stride + 1;
  const int ow = (w - kernel) / stride + 1;
  if (oh <= 0 || ow <= 0) throw ShapeError("avg_pool2d: window larger than input " + shape_string(X.shape()));
  const double inv = 1.0 / (kernel * kernel);
  Tensor out({n, c, oh, ow});
  for (int s = 0; s < n; ++s) {
    for (int ch = 0; ch < c; ++ch) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) acc += X.at(s, ch, oy * stride + ky, ox * stride + kx);
          }
          out.at(s, ch, oy, ox) = acc * inv;
        }
      }
    }
  }
  return Var::from_op(std::move(out), {x}, [=](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (int s = 0; s < n; ++s) {
      for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            const double g = self.grad.at(s, ch, oy, ox) * inv;
            for (int ky = 0; ky < kernel; ++ky) {
              for (int kx = 0; kx < kernel; ++kx) dx.at(s, ch, oy * stride + ky, ox * stride + kx) += g;
            }
          }
        }
      }
    }
  });
}

Var global_avg_pool(const Var& x) {
  const Tensor& X = x.value();
  require_rank(X, 4, "global_avg_pool");
  const int n = X.dim(0), c = X.dim(1);
  const std::size_t hw = static_cast<std::size_t>(X.dim(2)) * X.dim(3);
  Tensor out({n, c});
  for (std::size_t i = 0; i < out.numel(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < hw; ++j) acc += X[i * hw + j];
    out[i] = acc / static_cast<double>(hw);
  }
  return Var::from_op(std::move(out), {x}, [hw](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    const double inv = 1.0 / static_cast<double>(hw);
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      const double g = self.grad[i] * inv;
      for (std::size_t j = 0; j < hw; ++j) dx[i * hw + j] += g;
    }
  });
}

namespace {

Var batch_norm_impl(const Var& x, const Var& gamma, const Var& beta, const BatchNormState& stats,
                    BatchNormState* update) {
  const bool training = update != nullptr;
  const Tensor& X = x.value();
  if (X.rank() != 4 && X.rank() != 2) throw ShapeError("batch_norm: expected rank 2 or 4");
  const int n = X.dim(0), c = X.dim(1);
  const std::size_t hw = X.rank() == 4 ? static_cast<std::size_t>(X.dim(2)) * X.dim(3) : 1;
  if (gamma.value().numel() != static_cast<std::size_t>(c) || stats.mean.numel() != static_cast<std::size_t>(c)) {
    throw ShapeError("batch_norm: parameter size does not match channels");
  }
  const double m = static_cast<double>(n) * static_cast<double>(hw);
  std::vector<double> mean(c), invstd(c);
  for (int ch = 0; ch < c; ++ch) {
    if (training) {
      double sum = 0.0;
      for (int s = 0; s < n; ++s) {
        const double* p = X.data() + (static_cast<std::size_t>(s) * c + ch) * hw;
        for (std::size_t j = 0; j < hw; ++j) sum += p[j];
      }
      const double mu = sum / m;
      double sq = 0.0;
      for (int s = 0; s < n; ++s) {
        const double* p = X.data() + (static_cast<std::size_t>(s) * c + ch) * hw;
        for (std::size_t j = 0; j < hw; ++j) sq += (p[j] - mu) * (p[j] - mu);
      }
      const double var = sq / m;
      mean[ch] = mu;
      invstd[ch] = 1.0 / std::sqrt(var + stats.eps);
      const double unbiased = m > 1 ? sq / (m - 1) : var;
      update->mean[ch] = (1 - update->momentum) * update->mean[ch] + update->momentum * mu;
      update->var[ch] = (1 - update->momentum) * update->var[ch] + update->momentum * unbiased;
    } else {
      mean[ch] = stats.mean[ch];
      invstd[ch] = 1.0 / std::sqrt(stats.var[ch] + stats.eps);
    }
  }
  Tensor out(X.shape());
  const Tensor& G = gamma.value();
  const Tensor& B = beta.value();
  for (int s = 0; s < n; ++s) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t off = (static_cast<std::size_t>(s) * c + ch) * hw;
      const double a = G[ch] * invstd[ch];
      const double b = B[ch] - a * mean[ch];
      for (std::size_t j = 0; j < hw; ++j) out[off + j] = a * X[off + j] + b;
    }
  }
  return Var::from_op(std::move(out), {x, gamma, beta}, [=](Node& self) {
    const Tensor& X = self.inputs[0]->value;
    const Tensor& G = self.inputs[1]->value;
    const Tensor& dy = self.grad;
    std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
    for (int s = 0; s < n; ++s) {
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t off = (static_cast<std::size_t>(s) * c + ch) * hw;
        for (std::size_t j = 0; j < hw; ++j) {
          const double xhat = (X[off + j] - mean[ch]) * invstd[ch];
          sum_dy[ch] += dy[off + j];
          sum_dy_xhat[ch] += dy[off + j] * xhat;
        }
      }
    }
    if (wants_grad(self, 1)) {
      Tensor& dg = self.inputs[1]->grad_buffer();
      for (int ch = 0; ch < c; ++ch) dg[ch] += sum_dy_xhat[ch];
    }
    if (wants_grad(self, 2)) {
      Tensor& db = self.inputs[2]->grad_buffer();
      for (int ch = 0; ch < c; ++ch) db[ch] += sum_dy[ch];
    }
    if (!wants_grad(self, 0)) return;
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (int s = 0; s < n; ++s) {
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t off = (static_cast<std::size_t>(s) * c + ch) * hw;
        const double a = G[ch] * invstd[ch];
        if (training) {
          for (std::size_t j = 0; j < hw; ++j) {
            const double xhat = (X[off + j] - mean[ch]) * invstd[ch];
            dx[off + j] += a * (dy[off + j] - sum_dy[ch] / m - xhat * sum_dy_xhat[ch] / m);
          }
        } else {
          for (std::size_t j = 0; j < hw; ++j) dx[off + j] += a * dy[off + j];
        }
      }
    }
  });
}

}  // namespace

Var batch_norm_train(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state) {
  return batch_norm_impl(x, gamma, beta, state, &state);
}

Var batch_norm_eval(const Var& x, const Var& gamma, const Var& beta, const BatchNormState& state) {
  return batch_norm_impl(x, gamma, beta, state, nullptr);
}

Var relu(const Var& x) {
  Tensor out(x.shape());
  const Tensor& X = x.value();
  for (std::size_t i = 0; i < X.numel(); ++i) out[i] = X[i] > 0.0 ? X[i] : 0.0;
  return Var::from_op(std::move(out), {x}, [](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) {
      if (self.value[i] > 0.0) dx[i] += self.grad[i];
    }
  });
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double v = x[i];
    out[i] = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  require_rank(x, 2, "softmax_rows");
  const int n = x.dim(0), k = x.dim(1);
  Tensor out(x.shape());
  for (int i = 0; i < n; ++i) {
    const double* row = x.data() + static_cast<std::size_t>(i) * k;
    double* dst = out.data() + static_cast<std::size_t>(i) * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += (dst[j] = std::exp(row[j] - mx));
    for (int j = 0; j < k; ++j) dst[j] /= z;
  }
  return out;
}

Var sigmoid(const Var& x) {
  return Var::from_op(sigmoid(x.value()), {x}, [](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) {
      const double y = self.value[i];
      dx[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Var dropout(const Var& x, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return x;
  if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
  auto mask = std::make_shared<std::vector<double>>(x.value().numel());
  const double keep = 1.0 - rate;
  Tensor out(x.shape());
  for (std::size_t i = 0; i < mask->size(); ++i) {
    (*mask)[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
    out[i] = x.value()[i] * (*mask)[i];
  }
  return Var::from_op(std::move(out), {x}, [mask](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += self.grad[i] * (*mask)[i];
  });
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: nothing to concatenate");
  const Tensor& first = parts[0].value();
  require_rank(first, 4, "concat_channels");
  const int n = first.dim(0), h = first.dim(2), w = first.dim(3);
  std::vector<int> channels;
  int total = 0;
  for (const auto& p : parts) {
    const Tensor& t = p.value();
    require_rank(t, 4, "concat_channels");
    if (t.dim(0) != n || t.dim(2) != h || t.dim(3) != w) throw ShapeError("concat_channels: spatial shape mismatch");
    channels.push_back(t.dim(1));
    total += t.dim(1);
  }
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  Tensor out({n, total, h, w});
  for (int s = 0; s < n; ++s) {
    double* dst = out.data() + static_cast<std::size_t>(s) * total * hw;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const std::size_t len = channels[i] * hw;
      const double* src = parts[i].value().data() + static_cast<std::size_t>(s) * len;
      std::copy(src, src + len, dst);
      dst += len;
    }
  }
  return Var::from_op(std::move(out), parts, [n, total, hw, channels](Node& self) {
    for (int s = 0; s < n; ++s) {
      const double* src = self.grad.data() + static_cast<std::size_t>(s) * total * hw;
      for (std::size_t i = 0; i < channels.size(); ++i) {
        const std::size_t len = channels[i] * hw;
        if (wants_grad(self, i)) {
          double* dst = self.inputs[i]->grad_buffer().data() + static_cast<std::size_t>(s) * len;
          for (std::size_t j = 0; j < len; ++j) dst[j] += src[j];
        }
        src += len;
      }
    }
  });
}

Var flatten(const Var& x) {
  const Tensor& X = x.value();
  if (X.rank() < 2) throw ShapeError("flatten: needs a batch axis");
  const int n = X.dim(0);
  const int f = static_cast<int>(X.numel() / std::max(1, n));
  return Var::from_op(X.reshaped({n, f}), {x}, [](Node& self) {
    self.inputs[0]->grad_buffer().add_(self.grad);
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  const Tensor& X = x.value();
  const Tensor& W = weight.value();
  require_rank(X, 2, "linear input");
  require_rank(W, 2, "linear weight");
  const int n = X.dim(0), f = X.dim(1), o = W.dim(0);
  if (W.dim(1) != f) {
    throw ShapeError("linear: weight expects " + std::to_string(W.dim(1)) + " features, got " + std::to_string(f));
  }
  Tensor out({n, o});
  MapR Y(out.data(), n, o);
  Y.noalias() = CMapR(X.data(), n, f) * CMapR(W.data(), o, f).transpose();
  if (bias.defined()) Y.rowwise() += CMapV(bias.value().data(), o).transpose();
  return Var::from_op(std::move(out), {x, weight, bias}, [n, f, o](Node& self) {
    CMapR dY(self.grad.data(), n, o);
    if (wants_grad(self, 0)) {
      MapR(self.inputs[0]->grad_buffer().data(), n, f).noalias() += dY * CMapR(self.inputs[1]->value.data(), o, f);
    }
    if (wants_grad(self, 1)) {
      MapR(self.inputs[1]->grad_buffer().data(), o, f).noalias() +=
          dY.transpose() * CMapR(self.inputs[0]->value.data(), n, f);
    }
    if (wants_grad(self, 2)) {
      Eigen::Map<Eigen::RowVectorXd>(self.inputs[2]->grad_buffer().data(), o) += dY.colwise().sum();
    }
  });
}

Var add(const Var& a, const Var& b) {
  if (a.value().numel() != b.value().numel()) throw ShapeError("add: size mismatch");
  Tensor out = a.value();
  out.add_(b.value());
  return Var::from_op(std::move(out), {a, b}, [](Node& self) {
    if (wants_grad(self, 0)) self.inputs[0]->grad_buffer().add_(self.grad);
    if (wants_grad(self, 1)) self.inputs[1]->grad_buffer().add_(self.grad);
  });
}

Var scale(const Var& x, double s) {
  Tensor out = x.value();
  out.scale_(s);
  return Var::from_op(std::move(out), {x}, [s](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += s * self.grad[i];
  });
}

Var weighted_sum(const Var& x, const Tensor& coeffs) {
  if (coeffs.numel() != x.value().numel()) throw ShapeError("weighted_sum: coefficient size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < coeffs.numel(); ++i) acc += coeffs[i] * x.value()[i];
  return Var::from_op(Tensor({1}, acc), {x}, [coeffs](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += g * coeffs[i];
  });
}

Var bce_with_logits(const Var& logits, const std::vector<double>& targets, const std::vector<double>& weights) {
  const Tensor& Z = logits.value();
  const std::size_t n = Z.numel();
  if (Z.rank() != 2 || Z.dim(1) != 1) throw ShapeError("bce_with_logits: logits must be (N, 1)");
  if (targets.size() != n || weights.size() != n) throw ShapeError("bce_with_logits: target/weight count mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = Z[i];
    loss += weights[i] * (std::max(z, 0.0) - z * targets[i] + std::log1p(std::exp(-std::abs(z))));
  }
  loss /= static_cast<double>(n);
  return Var::from_op(Tensor({1}, loss), {logits}, [targets, weights](Node& self) {
    Tensor& dz = self.inputs[0]->grad_buffer();
    const Tensor p = sigmoid(self.inputs[0]->value);
    const double g = self.grad[0] / static_cast<double>(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) dz[i] += g * weights[i] * (p[i] - targets[i]);
  });
}

Var softmax_cross_entropy(const Var& logits, const std::vector<double>& targets, const std::vector<double>& weights) {
  const Tensor& Z = logits.value();
  require_rank(Z, 2, "softmax_cross_entropy");
  const int n = Z.dim(0), k = Z.dim(1);
  if (targets.size() != Z.numel() || weights.size() != static_cast<std::size_t>(n)) {
    throw ShapeError("softmax_cross_entropy: target/weight count mismatch");
  }
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* row = Z.data() + static_cast<std::size_t>(i) * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    double li = 0.0;
    for (int j = 0; j < k; ++j) li -= targets[static_cast<std::size_t>(i) * k + j] * (row[j] - lse);
    loss += weights[i] * li;
  }
  loss /= n;
  return Var::from_op(Tensor({1}, loss), {logits}, [targets, weights, n, k](Node& self) {
    Tensor& dz = self.inputs[0]->grad_buffer();
    const Tensor p = softmax_rows(self.inputs[0]->value);
    const double g = self.grad[0] / n;
    for (int i = 0; i < n; ++i) {
      double tsum = 0.0;
      for (int j = 0; j < k; ++j) tsum += targets[static_cast<std::size_t>(i) * k + j];
      for (int j = 0; j < k; ++j) {
        const std::size_t idx = static_cast<std::size_t>(i) * k + j;
        dz[idx] += g * weights[i] * (tsum * p[idx] - targets[idx]);
      }
    }
  });
}

Var dice_bce_loss(const Var& logits, const Tensor& masks, double bce_weight) {
  const Tensor& Z = logits.value();
  if (Z.numel() != masks.numel()) throw ShapeError("dice_bce_loss: mask shape mismatch");
  constexpr double kSmooth = 1.0;
  const Tensor p = sigmoid(Z);
  const double count = static_cast<double>(Z.numel());
  double bce = 0.0, inter = 0.0, uni = 0.0;
  for (std::size_t i = 0; i < Z.numel(); ++i) {
    const double z = Z[i];
    bce += std::max(z, 0.0) - z * masks[i] + std::log1p(std::exp(-std::abs(z)));
    inter += p[i] * masks[i];
    uni += p[i] + masks[i];
  }
  const double dice = (2.0 * inter + kSmooth) / (uni + kSmooth);
  const double loss = bce_weight * bce / count + 1.0 - dice;
  return Var::from_op(Tensor({1}, loss), {logits}, [p, masks, count, inter, uni, bce_weight](Node& self) {
    Tensor& dz = self.inputs[0]->grad_buffer();
    const double g = self.grad[0];
    const double denom = uni + kSmooth;
    const double numer = 2.0 * inter + kSmooth;
    for (std::size_t i = 0; i < dz.numel(); ++i) {
      const double ddice_dp = (2.0 * masks[i] * denom - numer) / (denom * denom);
      const double dp_dz = p[i] * (1.0 - p[i]);
      dz[i] += g * (bce_weight * (p[i] - masks[i]) / count - ddice_dp * dp_dz);
    }
  });
}

}  // namespace cxnet::nn
