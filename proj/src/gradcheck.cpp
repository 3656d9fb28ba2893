#include "adadecay/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adadecay/data.hpp"
#include "adadecay/ops.hpp"

namespace adadecay {
namespace {

double batch_loss(Network& net, const Tensor& batch, const std::vector<int>& labels) {
  Tensor logits = net.forward(batch);
  return softmax_cross_entropy(logits, labels).loss;
}

}  // namespace

double finite_difference_max_rel_err(Network& net, const Tensor& batch,
                                     const std::vector<int>& labels, std::size_t samples,
                                     double h, RngState& pick, double denom_floor) {
  if (samples == 0) throw std::invalid_argument("finite_difference: samples must be >= 1");
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference: h must be positive");

  const std::vector<Param*> params = net.params();
  std::size_t total = 0;
  for (const Param* p : params) total += p->value.size();
  if (total == 0) throw std::invalid_argument("finite_difference: model has no parameters");

  Tensor logits = net.forward(batch);
  SoftmaxXentResult sx = softmax_cross_entropy(logits, labels);
  net.backward(sx.dlogits);

  double max_rel = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    std::size_t flat = pick.next_below(total);
    std::size_t pi = 0;
    while (flat >= params[pi]->value.size()) {
      flat -= params[pi]->value.size();
      ++pi;
    }
    double& w = params[pi]->value[flat];
    const double saved = w;
    const double wp = saved + h;
    const double wm = saved - h;

    w = wp;
    const double loss_plus = batch_loss(net, batch, labels);
    w = wm;
    const double loss_minus = batch_loss(net, batch, labels);
    w = saved;

    const double numeric = (loss_plus - loss_minus) / (wp - wm);
    const double analytic = params[pi]->grad[flat];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), denom_floor});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
  }
  return max_rel;
}

GradCheckReport gradcheck_model(const std::string& model_name, std::size_t samples, double h,
                                std::uint64_t seed) {
  const bool conv = model_name == "lenet4";
  RngState data_rng = derive_stream(seed, 100);
  Dataset data = conv ? make_blobs(data_rng, 1, 10, 256, 0.15, 16)
                      : make_blobs(data_rng, 1, 10, 64, 0.15);

  ModelSizes sizes;
  sizes.hidden_width = 16;
  sizes.conv1 = 4;
  sizes.conv2 = 8;
  sizes.fc = 32;

  RngState init_rng = derive_stream(seed, 0);
  Network net = build_model(model_name, data.sample_shape(), data.num_classes, sizes, init_rng);
  net.set_mode(Mode::Train);

  RngState pick = derive_stream(seed, 101);
  GradCheckReport report;
  report.model = model_name;
  report.checked = samples;
  report.max_rel_err =
      finite_difference_max_rel_err(net, data.images, data.labels, samples, h, pick);
  return report;
}

std::vector<GradCheckReport> run_gradcheck(std::size_t samples, double h, std::uint64_t seed) {
  std::vector<GradCheckReport> reports;
  for (const char* name : {"nn2", "nn3", "lenet4"}) {
    reports.push_back(gradcheck_model(name, samples, h, seed));
  }
  return reports;
}

}  // namespace adadecay
