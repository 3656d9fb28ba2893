#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adadecay/rng.hpp"
#include "adadecay/tensor.hpp"

namespace adadecay {

struct Dataset {
  Tensor images;            // N x C x H x W, values in [0,1]
  std::vector<int> labels;  // one class per example, in [0, num_classes)
  std::string name;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  // C x H x W of one example.
  Shape sample_shape() const;
  // Copy of one example as C x H x W.
  Tensor example(std::size_t i) const;
  // First n examples (n = 0 keeps everything).
  Dataset subset(std::size_t n) const;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// IDX container: big-endian magic, big-endian 32-bit extents, unsigned-byte
// payload. Magic 0x00000801 carries labels (1 extent), 0x00000803 carries
// images (3 extents, N x H x W). Image bytes are scaled to [0,1] by /255.
struct IdxContent {
  bool is_labels = false;
  Tensor images;  // N x 1 x H x W, valid when !is_labels
  std::vector<int> labels;
};
IdxContent parse_idx(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> serialize_idx_images(const Tensor& images);
std::vector<std::uint8_t> serialize_idx_labels(const std::vector<int>& labels);

// Whole file as bytes; gzip files (magic 1f 8b) are inflated before return,
// so parse_idx itself only ever sees raw IDX bytes.
std::vector<std::uint8_t> read_file_bytes(const std::string& path);

Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path,
                         const std::string& name, std::size_t subset = 0);

// Gaussian class clusters with fixed per-class centers; points clamped to
// [0,1]. image_hw > 0 arranges the features as a 1 x hw x hw image (dim must
// equal hw*hw), otherwise shape is 1 x 1 x dim. Labels come out class-major,
// exactly n_per_class per class.
Dataset make_blobs(RngState& rng, std::size_t n_per_class, std::size_t num_classes,
                   std::size_t dim, double spread, std::size_t image_hw = 0);

struct Batch {
  Tensor images;  // B x C x H x W
  std::vector<int> labels;
};

// Epoch-wise shuffle-and-partition sampler. Each epoch draws a fresh
// permutation from the supplied rng and yields ceil(N/B) batches covering
// every index exactly once; the final short batch is kept.
class BatchPlan {
 public:
  BatchPlan(std::size_t n, std::size_t batch_size);

  std::size_t batches_per_epoch() const { return batches_per_epoch_; }

  // Next batch of the current epoch; a fresh permutation is drawn whenever a
  // new epoch begins.
  Batch next_batch(const Dataset& dataset, RngState& rng);

 private:
  std::size_t n_;
  std::size_t batch_size_;
  std::size_t batches_per_epoch_;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> perm_;
};

}  // namespace adadecay
