#pragma once

#include <memory>
#include <string>
#include <vector>

#include "adadecay/data.hpp"
#include "adadecay/ops.hpp"
#include "adadecay/rng.hpp"
#include "adadecay/tensor.hpp"

namespace adadecay {

// One trainable tensor with its gradient, lazily created optimizer state, and
// its normalization-group id. Weight-decay applies when decay_eligible.
struct Param {
  Tensor value;
  Tensor grad;
  std::vector<Tensor> state;
  int group_id = 0;
  bool decay_eligible = true;

  // state[slot] zero-initialized to the value shape on first use.
  Tensor& state_buffer(std::size_t slot);
};

struct LayerSpec {
  enum class Kind { Dense, Conv2d, ReLU, MaxPool2x2, Flatten, Dropout };
  Kind kind = Kind::ReLU;
  std::size_t in = 0, out = 0;             // Dense
  std::size_t c_in = 0, c_out = 0, k = 0;  // Conv2d
  double p = 0.0;                          // Dropout

  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec conv2d(std::size_t c_in, std::size_t c_out, std::size_t k);
  static LayerSpec relu();
  static LayerSpec maxpool2x2();
  static LayerSpec flatten();
  static LayerSpec dropout(double p);
};

class Layer {
 public:
  virtual ~Layer() = default;
  // x is batch-major: B x (sample dims). train enables dropout.
  virtual Tensor forward(const Tensor& x, bool train, RngState& dropout_rng) = 0;
  virtual Tensor backward(const Tensor& upstream) = 0;
  virtual std::vector<Param*> params() { return {}; }
  const LayerSpec& spec() const { return spec_; }

 protected:
  explicit Layer(LayerSpec spec) : spec_(spec) {}
  LayerSpec spec_;
};

enum class Mode { Train, Eval };

// An ordered layer stack with one owner per trial. Forward in eval mode is
// deterministic; dropout draws come from the dedicated stream set by
// seed_dropout so that policies sharing a seed see identical masks.
class Network {
 public:
  Network() : dropout_rng_(0) {}

  void add(std::unique_ptr<Layer> layer);

  void set_mode(Mode mode) { mode_ = mode; }
  Mode mode() const { return mode_; }
  void seed_dropout(RngState rng) { dropout_rng_ = rng; }

  Tensor forward(const Tensor& batch);
  // Fills every Param::grad with the exact partials of the scalar loss whose
  // gradient w.r.t. the logits is dlogits. Call after a matching forward.
  void backward(const Tensor& dlogits);

  std::vector<Param*> params();
  std::size_t num_scalar_params();

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  Mode mode_ = Mode::Train;
  RngState dropout_rng_;
};

struct ModelSizes {
  std::size_t hidden_width = 256;  // NN-2 / NN-3
  std::size_t conv1 = 20;          // LeNet-4 first conv channels
  std::size_t conv2 = 50;          // LeNet-4 second conv channels
  std::size_t fc = 500;            // LeNet-4 dense width
  double dropout_p = 0.0;          // LeNet-4 only, after the first dense layer
  bool per_tensor_groups = false;  // one group per tensor instead of per layer

  bool operator==(const ModelSizes&) const = default;
};

// name: nn2 | nn3 | lenet4. input_shape is C x H x W. Weights use fan-in
// scaled uniform init drawn from rng in layer order; biases start at zero.
Network build_model(const std::string& name, const Shape& input_shape, std::size_t num_classes,
                    const ModelSizes& sizes, RngState& rng);

// Argmax-vs-label accuracy over the whole dataset, ties to the lowest class
// index. Runs the net in its current mode; set Mode::Eval first for a
// deterministic result.
double evaluate_accuracy(Network& net, const Dataset& dataset);

}  // namespace adadecay
