#include "adadecay/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adadecay {

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().rank() != 2 || b.shape().rank() != 2)
    throw std::invalid_argument("matmul: expected rank-2 tensors");
  const std::size_t r = a.shape()[0], k = a.shape()[1];
  const std::size_t k2 = b.shape()[0], c = b.shape()[1];
  if (k != k2)
    throw std::invalid_argument("matmul: inner dimensions disagree (" + std::to_string(k) +
                                " vs " + std::to_string(k2) + ")");
  Tensor out(Shape{r, c});
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  // i-p-j loop order: each out[i][j] still accumulates over p ascending, so
  // the result is bitwise equal to the naive i-j-p triple loop.
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * c;
      double* orow = po + i * c;
      for (std::size_t j = 0; j < c; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.shape().rank() != 2) throw std::invalid_argument("transpose: expected rank-2 tensor");
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  Tensor out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
  return out;
}

ReluResult relu_forward(const Tensor& x) {
  ReluResult res{Tensor(x.shape()), Tensor(x.shape())};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool on = x[i] > 0.0;
    res.y[i] = on ? x[i] : 0.0;
    res.mask[i] = on ? 1.0 : 0.0;
  }
  return res;
}

Tensor relu_backward(const Tensor& upstream, const Tensor& mask) {
  if (!(upstream.shape() == mask.shape()))
    throw std::invalid_argument("relu_backward: shape mismatch");
  Tensor dx(upstream.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = upstream[i] * mask[i];
  return dx;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
  if (x.shape().rank() != 3) throw std::invalid_argument("conv2d: input must be C x H x W");
  if (kernels.shape().rank() != 4)
    throw std::invalid_argument("conv2d: kernels must be C_out x C_in x k x k");
  const std::size_t c_in = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const std::size_t c_out = kernels.shape()[0];
  const std::size_t k = kernels.shape()[2];
  if (kernels.shape()[1] != c_in)
    throw std::invalid_argument("conv2d: kernel input channels disagree with input");
  if (kernels.shape()[3] != k) throw std::invalid_argument("conv2d: kernels must be square");
  if (k > h || k > w)
    throw std::invalid_argument("conv2d: kernel size " + std::to_string(k) +
                                " exceeds input " + std::to_string(h) + "x" + std::to_string(w));
  if (bias.size() != c_out) throw std::invalid_argument("conv2d: bias length mismatch");
  const std::size_t oh = h - k + 1, ow = w - k + 1;
  Tensor out(Shape{c_out, oh, ow});
  for (std::size_t co = 0; co < c_out; ++co) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (std::size_t ci = 0; ci < c_in; ++ci)
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx)
              acc += x[(ci * h + oy + ky) * w + ox + kx] *
                     kernels[((co * c_in + ci) * k + ky) * k + kx];
        out[(co * oh + oy) * ow + ox] = acc + bias[co];
      }
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& kernels, const Tensor& upstream) {
  const std::size_t c_in = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const std::size_t c_out = kernels.shape()[0];
  const std::size_t k = kernels.shape()[2];
  const std::size_t oh = h - k + 1, ow = w - k + 1;
  if (!(upstream.shape() == Shape{c_out, oh, ow}))
    throw std::invalid_argument("conv2d_backward: upstream shape mismatch");
  Conv2dGrads g{Tensor(x.shape()), Tensor(kernels.shape()), Tensor(Shape{c_out})};
  for (std::size_t co = 0; co < c_out; ++co) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double up = upstream[(co * oh + oy) * ow + ox];
        g.dbias[co] += up;
        for (std::size_t ci = 0; ci < c_in; ++ci) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::size_t xi = (ci * h + oy + ky) * w + ox + kx;
              const std::size_t wi = ((co * c_in + ci) * k + ky) * k + kx;
              g.dkernels[wi] += up * x[xi];
              g.dx[xi] += up * kernels[wi];
            }
          }
        }
      }
    }
  }
  return g;
}

MaxPoolResult maxpool2x2_forward(const Tensor& x) {
  if (x.shape().rank() != 3) throw std::invalid_argument("maxpool2x2: input must be C x H x W");
  const std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  if (h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument("maxpool2x2: spatial dims must be even, got " +
                                std::to_string(h) + "x" + std::to_string(w));
  const std::size_t oh = h / 2, ow = w / 2;
  MaxPoolResult res{Tensor(Shape{c, oh, ow}), std::vector<std::size_t>(c * oh * ow)};
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (ci * h + 2 * oy) * w + 2 * ox;
        double best_v = x[best];
        // Row-major scan over the window; strict > keeps the first maximum.
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (ci * h + 2 * oy + dy) * w + 2 * ox + dx;
            if (x[idx] > best_v) {
              best_v = x[idx];
              best = idx;
            }
          }
        }
        res.y[(ci * oh + oy) * ow + ox] = best_v;
        res.argmax[(ci * oh + oy) * ow + ox] = best;
      }
    }
  }
  return res;
}

Tensor maxpool2x2_backward(const Tensor& upstream, const std::vector<std::size_t>& argmax,
                           const Shape& input_shape) {
  if (upstream.size() != argmax.size())
    throw std::invalid_argument("maxpool2x2_backward: upstream/argmax length mismatch");
  Tensor dx(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += upstream[i];
  return dx;
}

Tensor softmax_rows(const Tensor& logits) {
  if (logits.shape().rank() != 2) throw std::invalid_argument("softmax: expected B x K");
  const std::size_t b = logits.shape()[0], kk = logits.shape()[1];
  Tensor probs(logits.shape());
  for (std::size_t i = 0; i < b; ++i) {
    const double* row = logits.data() + i * kk;
    double m = row[0];
    for (std::size_t j = 1; j < kk; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < kk; ++j) {
      probs[i * kk + j] = std::exp(row[j] - m);
      sum += probs[i * kk + j];
    }
    for (std::size_t j = 0; j < kk; ++j) probs[i * kk + j] /= sum;
  }
  return probs;
}

SoftmaxXentResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.shape().rank() != 2)
    throw std::invalid_argument("softmax_cross_entropy: logits must be B x K");
  const std::size_t b = logits.shape()[0], kk = logits.shape()[1];
  if (labels.size() != b)
    throw std::invalid_argument("softmax_cross_entropy: labels length mismatch");
  for (int lab : labels)
    if (lab < 0 || static_cast<std::size_t>(lab) >= kk)
      throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(lab) +
                                  " out of range [0," + std::to_string(kk) + ")");
  SoftmaxXentResult res{0.0, Tensor(logits.shape())};
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double* row = logits.data() + i * kk;
    double m = row[0];
    for (std::size_t j = 1; j < kk; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < kk; ++j) sum += std::exp(row[j] - m);
    const double lse = m + std::log(sum);
    loss_sum += lse - row[labels[i]];
    for (std::size_t j = 0; j < kk; ++j) {
      const double p = std::exp(row[j] - lse);
      res.dlogits[i * kk + j] = (p - (static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0)) /
                                static_cast<double>(b);
    }
  }
  res.loss = loss_sum / static_cast<double>(b);
  return res;
}

DropoutResult dropout_forward(const Tensor& x, double p, RngState& rng) {
  if (p < 0.0 || p >= 1.0)
    throw std::invalid_argument("dropout: p must lie in [0,1), got " + std::to_string(p));
  DropoutResult res{Tensor(x.shape()), Tensor(x.shape())};
  if (p == 0.0) {
    res.y = x;
    res.mask.fill(1.0);
    return res;
  }
  const double scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = rng.next_uniform() < p ? 0.0 : scale;
    res.mask[i] = keep;
    res.y[i] = x[i] * keep;
  }
  return res;
}

Tensor dropout_backward(const Tensor& upstream, const Tensor& mask) {
  if (!(upstream.shape() == mask.shape()))
    throw std::invalid_argument("dropout_backward: shape mismatch");
  Tensor dx(upstream.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = upstream[i] * mask[i];
  return dx;
}

}  // namespace adadecay
