#include "adadecay/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace adadecay {

Shape Dataset::sample_shape() const {
  const auto& d = images.shape().dims();
  return Shape{d[1], d[2], d[3]};
}

Tensor Dataset::example(std::size_t i) const {
  const Shape s = sample_shape();
  const std::size_t stride = s.count();
  std::vector<double> v(images.data() + i * stride, images.data() + (i + 1) * stride);
  return Tensor(s, std::move(v));
}

Dataset Dataset::subset(std::size_t n) const {
  if (n == 0 || n >= size()) return *this;
  const auto& d = images.shape().dims();
  const std::size_t stride = d[1] * d[2] * d[3];
  std::vector<double> v(images.data(), images.data() + n * stride);
  Dataset out;
  out.images = Tensor(Shape{n, d[1], d[2], d[3]}, std::move(v));
  out.labels.assign(labels.begin(), labels.begin() + n);
  out.name = name;
  out.num_classes = num_classes;
  return out;
}

namespace {

constexpr std::uint32_t kMagicLabels = 0x00000801u;
constexpr std::uint32_t kMagicImages = 0x00000803u;

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  if (offset + 4 > bytes.size())
    throw ParseError("idx: truncated header at byte offset " + std::to_string(offset));
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

IdxContent parse_idx(const std::vector<std::uint8_t>& bytes) {
  const std::uint32_t magic = read_be32(bytes, 0);
  IdxContent content;
  if (magic == kMagicLabels) {
    content.is_labels = true;
    const std::size_t n = read_be32(bytes, 4);
    const std::size_t expected = n;
    const std::size_t actual = bytes.size() - 8;
    if (actual != expected)
      throw ParseError("idx: payload length mismatch at byte offset 8: expected " +
                       std::to_string(expected) + " bytes, got " + std::to_string(actual));
    content.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) content.labels.push_back(bytes[8 + i]);
    return content;
  }
  if (magic == kMagicImages) {
    const std::size_t n = read_be32(bytes, 4);
    const std::size_t h = read_be32(bytes, 8);
    const std::size_t w = read_be32(bytes, 12);
    if (n == 0 || h == 0 || w == 0)
      throw ParseError("idx: zero extent in header at byte offset 4");
    if (h > std::numeric_limits<std::size_t>::max() / w ||
        n > std::numeric_limits<std::size_t>::max() / (h * w))
      throw ParseError("idx: dimension overflow at byte offset 4");
    const std::size_t expected = n * h * w;
    const std::size_t actual = bytes.size() - 16;
    if (actual != expected)
      throw ParseError("idx: payload length mismatch at byte offset 16: expected " +
                       std::to_string(expected) + " bytes, got " + std::to_string(actual));
    std::vector<double> values(expected);
    for (std::size_t i = 0; i < expected; ++i)
      values[i] = static_cast<double>(bytes[16 + i]) / 255.0;
    content.images = Tensor(Shape{n, 1, h, w}, std::move(values));
    return content;
  }
  throw ParseError("idx: bad magic 0x" + [magic] {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", magic);
    return std::string(buf);
  }() + " at byte offset 0");
}

std::vector<std::uint8_t> serialize_idx_images(const Tensor& images) {
  if (images.shape().rank() != 4 || images.shape()[1] != 1)
    throw std::invalid_argument("serialize_idx_images: expected N x 1 x H x W");
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.size());
  write_be32(out, kMagicImages);
  write_be32(out, static_cast<std::uint32_t>(images.shape()[0]));
  write_be32(out, static_cast<std::uint32_t>(images.shape()[2]));
  write_be32(out, static_cast<std::uint32_t>(images.shape()[3]));
  for (std::size_t i = 0; i < images.size(); ++i)
    out.push_back(static_cast<std::uint8_t>(std::lround(images[i] * 255.0)));
  return out;
}

std::vector<std::uint8_t> serialize_idx_labels(const std::vector<int>& labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  write_be32(out, kMagicLabels);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int lab : labels) out.push_back(static_cast<std::uint8_t>(lab));
  return out;
}

namespace {

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& bytes) {
  z_stream zs;
  std::memset(&zs, 0, sizeof zs);
  // 16+MAX_WBITS: accept the gzip wrapper.
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw ParseError("gzip: inflateInit failed");
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> buf(1 << 16);
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  int ret = Z_OK;
  do {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    ret = inflate(&zs, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&zs);
      throw ParseError("gzip: corrupt stream (zlib code " + std::to_string(ret) + ")");
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
  } while (ret != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return gunzip(bytes);
  return bytes;
}

Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path,
                         const std::string& name, std::size_t subset) {
  IdxContent images = parse_idx(read_file_bytes(images_path));
  IdxContent labels = parse_idx(read_file_bytes(labels_path));
  if (images.is_labels || !labels.is_labels)
    throw ParseError("idx dataset: expected an image file and a label file");
  if (images.images.shape()[0] != labels.labels.size())
    throw ParseError("idx dataset: image count " + std::to_string(images.images.shape()[0]) +
                     " does not match label count " + std::to_string(labels.labels.size()));
  Dataset ds;
  ds.images = std::move(images.images);
  ds.labels = std::move(labels.labels);
  ds.name = name;
  int max_label = 0;
  for (int lab : ds.labels) max_label = std::max(max_label, lab);
  ds.num_classes = static_cast<std::size_t>(max_label) + 1;
  return ds.subset(subset);
}

Dataset make_blobs(RngState& rng, std::size_t n_per_class, std::size_t num_classes,
                   std::size_t dim, double spread, std::size_t image_hw) {
  if (n_per_class == 0 || num_classes == 0 || dim == 0)
    throw std::invalid_argument("make_blobs: counts must be positive");
  if (image_hw != 0 && image_hw * image_hw != dim)
    throw std::invalid_argument("make_blobs: image_hw^2 must equal dim");
  const std::size_t n = n_per_class * num_classes;
  std::vector<double> values(n * dim);
  std::vector<int> labels(n);
  for (std::size_t c = 0; c < num_classes; ++c) {
    // Centers are a fixed function of the class index alone, kept inside
    // [0.25, 0.75] so noisy points mostly stay in range before clamping.
    RngState center_rng = derive_stream(0xB10B5ULL, c);
    std::vector<double> center(dim);
    for (std::size_t d = 0; d < dim; ++d) center[d] = 0.25 + 0.5 * center_rng.next_uniform();
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const std::size_t row = c * n_per_class + i;
      labels[row] = static_cast<int>(c);
      for (std::size_t d = 0; d < dim; ++d) {
        const double v = center[d] + spread * rng.next_normal();
        values[row * dim + d] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  Dataset ds;
  const std::size_t h = image_hw == 0 ? 1 : image_hw;
  const std::size_t w = image_hw == 0 ? dim : image_hw;
  ds.images = Tensor(Shape{n, 1, h, w}, std::move(values));
  ds.labels = std::move(labels);
  ds.name = "blobs";
  ds.num_classes = num_classes;
  return ds;
}

BatchPlan::BatchPlan(std::size_t n, std::size_t batch_size) : n_(n), batch_size_(batch_size) {
  if (n == 0) throw std::invalid_argument("BatchPlan: empty dataset");
  if (batch_size == 0) throw std::invalid_argument("BatchPlan: batch size must be positive");
  batches_per_epoch_ = (n + batch_size - 1) / batch_size;
  perm_.resize(n);
}

Batch BatchPlan::next_batch(const Dataset& dataset, RngState& rng) {
  if (dataset.size() != n_) throw std::invalid_argument("BatchPlan: dataset size changed");
  if (cursor_ == 0) {
    for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;
    // Fisher-Yates driven by the trial's batch stream.
    for (std::size_t i = n_ - 1; i > 0; --i)
      std::swap(perm_[i], perm_[rng.next_below(i + 1)]);
  }
  const std::size_t begin = cursor_;
  const std::size_t end = std::min(begin + batch_size_, n_);
  const Shape s = dataset.sample_shape();
  const std::size_t stride = s.count();
  const std::size_t b = end - begin;
  std::vector<double> values(b * stride);
  std::vector<int> labels(b);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t src = perm_[begin + i];
    std::copy(dataset.images.data() + src * stride, dataset.images.data() + (src + 1) * stride,
              values.begin() + i * stride);
    labels[i] = dataset.labels[src];
  }
  cursor_ = end == n_ ? 0 : end;
  return Batch{Tensor(Shape{b, s[0], s[1], s[2]}, std::move(values)), std::move(labels)};
}

}  // namespace adadecay
