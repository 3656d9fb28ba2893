#include "adadecay/model.hpp"

#include <cmath>
#include <stdexcept>

namespace adadecay {

Tensor& Param::state_buffer(std::size_t slot) {
  while (state.size() <= slot) state.emplace_back(value.shape());
  return state[slot];
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  LayerSpec s;
  s.kind = Kind::Dense;
  s.in = in;
  s.out = out;
  return s;
}
LayerSpec LayerSpec::conv2d(std::size_t c_in, std::size_t c_out, std::size_t k) {
  LayerSpec s;
  s.kind = Kind::Conv2d;
  s.c_in = c_in;
  s.c_out = c_out;
  s.k = k;
  return s;
}
LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = Kind::ReLU;
  return s;
}
LayerSpec LayerSpec::maxpool2x2() {
  LayerSpec s;
  s.kind = Kind::MaxPool2x2;
  return s;
}
LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = Kind::Flatten;
  return s;
}
LayerSpec LayerSpec::dropout(double p) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout p must lie in [0,1)");
  LayerSpec s;
  s.kind = Kind::Dropout;
  s.p = p;
  return s;
}

namespace {

class DenseLayer : public Layer {
 public:
  DenseLayer(std::size_t in, std::size_t out, RngState& rng)
      : Layer(LayerSpec::dense(in, out)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(in * out);
    for (double& v : w) v = (2.0 * rng.next_uniform() - 1.0) * bound;
    weight_.value = Tensor(Shape{in, out}, std::move(w));
    weight_.grad = Tensor(Shape{in, out});
    bias_.value = Tensor(Shape{out});
    bias_.grad = Tensor(Shape{out});
  }

  Tensor forward(const Tensor& x, bool, RngState&) override {
    if (x.shape().rank() != 2 || x.shape()[1] != spec_.in)
      throw std::invalid_argument("dense: expected B x " + std::to_string(spec_.in));
    input_ = x;
    Tensor y = matmul(x, weight_.value);
    const std::size_t b = y.shape()[0], out = y.shape()[1];
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < out; ++j) y[i * out + j] += bias_.value[j];
    return y;
  }

  Tensor backward(const Tensor& upstream) override {
    weight_.grad = matmul(transpose(input_), upstream);
    const std::size_t b = upstream.shape()[0], out = upstream.shape()[1];
    bias_.grad.fill(0.0);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < out; ++j) bias_.grad[j] += upstream[i * out + j];
    return matmul(upstream, transpose(weight_.value));
  }

  std::vector<Param*> params() override { return {&weight_, &bias_}; }

 private:
  Param weight_, bias_;
  Tensor input_;
};

class Conv2dLayer : public Layer {
 public:
  Conv2dLayer(std::size_t c_in, std::size_t c_out, std::size_t k, RngState& rng)
      : Layer(LayerSpec::conv2d(c_in, c_out, k)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(c_in * k * k));
    std::vector<double> w(c_out * c_in * k * k);
    for (double& v : w) v = (2.0 * rng.next_uniform() - 1.0) * bound;
    kernels_.value = Tensor(Shape{c_out, c_in, k, k}, std::move(w));
    kernels_.grad = Tensor(Shape{c_out, c_in, k, k});
    bias_.value = Tensor(Shape{c_out});
    bias_.grad = Tensor(Shape{c_out});
  }

  Tensor forward(const Tensor& x, bool, RngState&) override {
    if (x.shape().rank() != 4)
      throw std::invalid_argument("conv2d: expected B x C x H x W input");
    input_ = x;
    const std::size_t b = x.shape()[0];
    const Shape sample{x.shape()[1], x.shape()[2], x.shape()[3]};
    const std::size_t stride = sample.count();
    Tensor first = conv2d_forward(slice(x, 0, sample, stride), kernels_.value, bias_.value);
    const Shape& os = first.shape();
    Tensor out(Shape{b, os[0], os[1], os[2]});
    std::copy(first.data(), first.data() + first.size(), out.data());
    for (std::size_t i = 1; i < b; ++i) {
      Tensor yi = conv2d_forward(slice(x, i, sample, stride), kernels_.value, bias_.value);
      std::copy(yi.data(), yi.data() + yi.size(), out.data() + i * yi.size());
    }
    return out;
  }

  Tensor backward(const Tensor& upstream) override {
    const std::size_t b = input_.shape()[0];
    const Shape sample{input_.shape()[1], input_.shape()[2], input_.shape()[3]};
    const Shape up_sample{upstream.shape()[1], upstream.shape()[2], upstream.shape()[3]};
    const std::size_t stride = sample.count();
    const std::size_t up_stride = up_sample.count();
    kernels_.grad.fill(0.0);
    bias_.grad.fill(0.0);
    Tensor dx(input_.shape());
    for (std::size_t i = 0; i < b; ++i) {
      Conv2dGrads g = conv2d_backward(slice(input_, i, sample, stride), kernels_.value,
                                      slice(upstream, i, up_sample, up_stride));
      for (std::size_t j = 0; j < g.dkernels.size(); ++j) kernels_.grad[j] += g.dkernels[j];
      for (std::size_t j = 0; j < g.dbias.size(); ++j) bias_.grad[j] += g.dbias[j];
      std::copy(g.dx.data(), g.dx.data() + g.dx.size(), dx.data() + i * stride);
    }
    return dx;
  }

  std::vector<Param*> params() override { return {&kernels_, &bias_}; }

 private:
  static Tensor slice(const Tensor& batch, std::size_t i, const Shape& sample,
                      std::size_t stride) {
    std::vector<double> v(batch.data() + i * stride, batch.data() + (i + 1) * stride);
    return Tensor(sample, std::move(v));
  }

  Param kernels_, bias_;
  Tensor input_;
};

class ReluLayer : public Layer {
 public:
  ReluLayer() : Layer(LayerSpec::relu()) {}

  Tensor forward(const Tensor& x, bool, RngState&) override {
    ReluResult r = relu_forward(x);
    mask_ = std::move(r.mask);
    return std::move(r.y);
  }

  Tensor backward(const Tensor& upstream) override { return relu_backward(upstream, mask_); }

 private:
  Tensor mask_;
};

class MaxPoolLayer : public Layer {
 public:
  MaxPoolLayer() : Layer(LayerSpec::maxpool2x2()) {}

  Tensor forward(const Tensor& x, bool, RngState&) override {
    if (x.shape().rank() != 4)
      throw std::invalid_argument("maxpool2x2: expected B x C x H x W input");
    input_shape_ = x.shape();
    const std::size_t b = x.shape()[0];
    const Shape sample{x.shape()[1], x.shape()[2], x.shape()[3]};
    const std::size_t stride = sample.count();
    argmax_.assign(b, {});
    Tensor out;
    for (std::size_t i = 0; i < b; ++i) {
      std::vector<double> v(x.data() + i * stride, x.data() + (i + 1) * stride);
      MaxPoolResult r = maxpool2x2_forward(Tensor(sample, std::move(v)));
      if (i == 0) out = Tensor(Shape{b, r.y.shape()[0], r.y.shape()[1], r.y.shape()[2]});
      std::copy(r.y.data(), r.y.data() + r.y.size(), out.data() + i * r.y.size());
      argmax_[i] = std::move(r.argmax);
    }
    return out;
  }

  Tensor backward(const Tensor& upstream) override {
    const std::size_t b = input_shape_[0];
    const Shape sample{input_shape_[1], input_shape_[2], input_shape_[3]};
    const std::size_t up_stride = upstream.size() / b;
    Tensor dx(input_shape_);
    for (std::size_t i = 0; i < b; ++i) {
      std::vector<double> up(upstream.data() + i * up_stride,
                             upstream.data() + (i + 1) * up_stride);
      Tensor dxi = maxpool2x2_backward(
          Tensor(Shape{up_stride}, std::move(up)), argmax_[i], sample);
      std::copy(dxi.data(), dxi.data() + dxi.size(), dx.data() + i * sample.count());
    }
    return dx;
  }

 private:
  Shape input_shape_;
  std::vector<std::vector<std::size_t>> argmax_;
};

class FlattenLayer : public Layer {
 public:
  FlattenLayer() : Layer(LayerSpec::flatten()) {}

  Tensor forward(const Tensor& x, bool, RngState&) override {
    input_shape_ = x.shape();
    return x.reshaped(Shape{x.shape()[0], x.size() / x.shape()[0]});
  }

  Tensor backward(const Tensor& upstream) override { return upstream.reshaped(input_shape_); }

 private:
  Shape input_shape_;
};

class DropoutLayer : public Layer {
 public:
  explicit DropoutLayer(double p) : Layer(LayerSpec::dropout(p)) {}

  Tensor forward(const Tensor& x, bool train, RngState& dropout_rng) override {
    if (!train) {
      active_ = false;
      return x;
    }
    active_ = true;
    DropoutResult r = dropout_forward(x, spec_.p, dropout_rng);
    mask_ = std::move(r.mask);
    return std::move(r.y);
  }

  Tensor backward(const Tensor& upstream) override {
    if (!active_) return upstream;
    return dropout_backward(upstream, mask_);
  }

 private:
  bool active_ = false;
  Tensor mask_;
};

}  // namespace

void Network::add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

Tensor Network::forward(const Tensor& batch) {
  Tensor x = batch;
  const bool train = mode_ == Mode::Train;
  for (auto& layer : layers_) x = layer->forward(x, train, dropout_rng_);
  return x;
}

void Network::backward(const Tensor& dlogits) {
  Tensor g = dlogits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

std::vector<Param*> Network::params() {
  std::vector<Param*> out;
  for (auto& layer : layers_)
    for (Param* p : layer->params()) out.push_back(p);
  return out;
}

std::size_t Network::num_scalar_params() {
  std::size_t n = 0;
  for (Param* p : params()) n += p->value.size();
  return n;
}

namespace {

// Assigns group ids walking the freshly built stack: by default one group per
// trainable layer covering weight and bias, or one per tensor when requested.
void assign_groups(Network& net, bool per_tensor) {
  int next = 0;
  std::size_t i = 0;
  std::vector<Param*> ps = net.params();
  while (i < ps.size()) {
    if (per_tensor) {
      ps[i]->group_id = next++;
      ++i;
    } else {
      // params() yields weight then bias per trainable layer
      ps[i]->group_id = next;
      ps[i + 1]->group_id = next;
      ++next;
      i += 2;
    }
  }
}

}  // namespace

Network build_model(const std::string& name, const Shape& input_shape, std::size_t num_classes,
                    const ModelSizes& sizes, RngState& rng) {
  if (input_shape.rank() != 3)
    throw std::invalid_argument("build_model: input shape must be C x H x W");
  if (num_classes < 2) throw std::invalid_argument("build_model: need at least 2 classes");
  if (sizes.hidden_width < 1) throw std::invalid_argument("build_model: hidden width must be >= 1");
  Network net;
  const std::size_t flat = input_shape.count();
  if (name == "nn2" || name == "nn3") {
    const std::size_t hw = sizes.hidden_width;
    net.add(std::make_unique<FlattenLayer>());
    net.add(std::make_unique<DenseLayer>(flat, hw, rng));
    net.add(std::make_unique<ReluLayer>());
    net.add(std::make_unique<DenseLayer>(hw, hw, rng));
    net.add(std::make_unique<ReluLayer>());
    if (name == "nn3") {
      net.add(std::make_unique<DenseLayer>(hw, hw, rng));
      net.add(std::make_unique<ReluLayer>());
    }
    net.add(std::make_unique<DenseLayer>(hw, num_classes, rng));
  } else if (name == "lenet4") {
    const std::size_t c = input_shape[0], h = input_shape[1], w = input_shape[2];
    const std::size_t k = 5;
    auto shrink = [](std::size_t d, std::size_t k) { return d - k + 1; };
    std::size_t h1 = 0, w1 = 0, h2 = 0, w2 = 0;
    if (h < k || w < k || (h1 = shrink(h, k)) % 2 != 0 || (w1 = shrink(w, k)) % 2 != 0 ||
        h1 / 2 < k || w1 / 2 < k || (h2 = shrink(h1 / 2, k)) % 2 != 0 ||
        (w2 = shrink(w1 / 2, k)) % 2 != 0)
      throw std::invalid_argument("build_model: input " + std::to_string(h) + "x" +
                                  std::to_string(w) + " incompatible with lenet4");
    net.add(std::make_unique<Conv2dLayer>(c, sizes.conv1, k, rng));
    net.add(std::make_unique<ReluLayer>());
    net.add(std::make_unique<MaxPoolLayer>());
    net.add(std::make_unique<Conv2dLayer>(sizes.conv1, sizes.conv2, k, rng));
    net.add(std::make_unique<ReluLayer>());
    net.add(std::make_unique<MaxPoolLayer>());
    net.add(std::make_unique<FlattenLayer>());
    net.add(std::make_unique<DenseLayer>(sizes.conv2 * (h2 / 2) * (w2 / 2), sizes.fc, rng));
    net.add(std::make_unique<ReluLayer>());
    if (sizes.dropout_p > 0.0) net.add(std::make_unique<DropoutLayer>(sizes.dropout_p));
    net.add(std::make_unique<DenseLayer>(sizes.fc, num_classes, rng));
  } else {
    throw std::invalid_argument("build_model: unknown model name '" + name + "'");
  }
  assign_groups(net, sizes.per_tensor_groups);
  return net;
}

double evaluate_accuracy(Network& net, const Dataset& dataset) {
  if (dataset.size() == 0) throw std::invalid_argument("evaluate_accuracy: empty dataset");
  const std::size_t chunk = 256;
  const Shape s = dataset.sample_shape();
  const std::size_t stride = s.count();
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < dataset.size(); begin += chunk) {
    const std::size_t end = std::min(begin + chunk, dataset.size());
    const std::size_t b = end - begin;
    std::vector<double> v(dataset.images.data() + begin * stride,
                          dataset.images.data() + end * stride);
    Tensor logits = net.forward(Tensor(Shape{b, s[0], s[1], s[2]}, std::move(v)));
    const std::size_t kk = logits.shape()[1];
    for (std::size_t i = 0; i < b; ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < kk; ++j)
        if (logits[i * kk + j] > logits[i * kk + best]) best = j;
      if (static_cast<int>(best) == dataset.labels[begin + i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace adadecay
