#pragma once

#include <cstddef>
#include <vector>

#include "adadecay/rng.hpp"
#include "adadecay/tensor.hpp"

namespace adadecay {

// Layer kernels. All reductions accumulate in a fixed serial order so results
// are bit-reproducible and match naive-loop oracles exactly.

// a: r x k, b: k x c -> r x c. Each output element accumulates over the inner
// axis in ascending order.
Tensor matmul(const Tensor& a, const Tensor& b);

// rows x cols -> cols x rows.
Tensor transpose(const Tensor& a);

struct ReluResult {
  Tensor y;     // max(x, 0)
  Tensor mask;  // 1 where x > 0, else 0
};
ReluResult relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& upstream, const Tensor& mask);

// x: C_in x H x W, kernels: C_out x C_in x k x k, bias: C_out.
// Valid cross-correlation, stride 1, plus per-channel bias.
Tensor conv2d_forward(const Tensor& x, const Tensor& kernels, const Tensor& bias);

struct Conv2dGrads {
  Tensor dx;
  Tensor dkernels;
  Tensor dbias;
};
Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& kernels, const Tensor& upstream);

// x: C x H x W with even H and W. 2x2 non-overlapping max; argmax stores for
// every output element the flat input index of its maximum, ties resolved to
// the first element in row-major scan order.
struct MaxPoolResult {
  Tensor y;
  std::vector<std::size_t> argmax;
};
MaxPoolResult maxpool2x2_forward(const Tensor& x);
// Routes upstream gradient to the stored argmax positions only.
Tensor maxpool2x2_backward(const Tensor& upstream, const std::vector<std::size_t>& argmax,
                           const Shape& input_shape);

// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& logits);

// logits: B x K, one label per row in [0,K).
// loss = mean over rows of -log softmax(logits)[label]
// dlogits = (softmax - onehot) / B
struct SoftmaxXentResult {
  double loss;
  Tensor dlogits;
};
SoftmaxXentResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Inverted dropout. mask holds 0 for dropped activations and 1/(1-p) for
// survivors, so train-time expectation matches the undropped activation.
struct DropoutResult {
  Tensor y;
  Tensor mask;
};
DropoutResult dropout_forward(const Tensor& x, double p, RngState& rng);
Tensor dropout_backward(const Tensor& upstream, const Tensor& mask);

}  // namespace adadecay
