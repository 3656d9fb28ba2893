#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "adadecay/data.hpp"
#include "doctest.h"

using namespace adadecay;

namespace {

std::vector<std::uint8_t> image_fixture() {
  // magic 0x00000803, dims (1,2,2), payload [0,128,255,64]
  return {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 128, 255, 64};
}

std::vector<std::uint8_t> label_fixture() {
  // magic 0x00000801, dim (3), payload [7,2,1]
  return {0, 0, 8, 1, 0, 0, 0, 3, 7, 2, 1};
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("adadecay_test_" + name);
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> gzip_bytes(const std::vector<std::uint8_t>& bytes) {
  z_stream zs;
  std::memset(&zs, 0, sizeof zs);
  REQUIRE(deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8,
                       Z_DEFAULT_STRATEGY) == Z_OK);
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(bytes.size())));
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  REQUIRE(deflate(&zs, Z_FINISH) == Z_STREAM_END);
  out.resize(out.size() - zs.avail_out);
  deflateEnd(&zs);
  return out;
}

}  // namespace

TEST_CASE("parse_idx image fixture") {
  const IdxContent c = parse_idx(image_fixture());
  CHECK_FALSE(c.is_labels);
  CHECK(c.images.shape() == Shape{1, 1, 2, 2});
  CHECK(c.images[0] == 0.0);
  CHECK(c.images[1] == 128.0 / 255.0);
  CHECK(c.images[2] == 1.0);
  CHECK(c.images[3] == 64.0 / 255.0);
}

TEST_CASE("parse_idx label fixture") {
  const IdxContent c = parse_idx(label_fixture());
  CHECK(c.is_labels);
  CHECK(c.labels == std::vector<int>{7, 2, 1});
}

TEST_CASE("parse_idx error paths") {
  auto truncated = image_fixture();
  truncated.pop_back();
  CHECK_THROWS_WITH_AS(parse_idx(truncated),
                       "idx: payload length mismatch at byte offset 16: expected 4 bytes, got 3",
                       ParseError);

  auto bad_magic = image_fixture();
  bad_magic[3] = 9;
  CHECK_THROWS_WITH_AS(parse_idx(bad_magic), "idx: bad magic 0x00000809 at byte offset 0",
                       ParseError);

  CHECK_THROWS_AS(parse_idx({0, 0, 8}), ParseError);

  auto short_labels = label_fixture();
  short_labels.push_back(9);
  CHECK_THROWS_WITH_AS(parse_idx(short_labels),
                       "idx: payload length mismatch at byte offset 8: expected 3 bytes, got 4",
                       ParseError);
}

TEST_CASE("idx round-trip is the identity") {
  const IdxContent img = parse_idx(image_fixture());
  CHECK(serialize_idx_images(img.images) == image_fixture());
  const IdxContent lab = parse_idx(label_fixture());
  CHECK(serialize_idx_labels(lab.labels) == label_fixture());
}

TEST_CASE("load_idx_dataset reads plain and gzip files") {
  const auto img_path = temp_file("imgs.idx");
  const auto lab_path = temp_file("labs.idx");
  const auto img_gz = temp_file("imgs.idx.gz");
  write_bytes(img_path, image_fixture());
  // Pad labels to one per image.
  const std::vector<std::uint8_t> one_label = {0, 0, 8, 1, 0, 0, 0, 1, 7};
  write_bytes(lab_path, one_label);
  write_bytes(img_gz, gzip_bytes(image_fixture()));

  const Dataset plain = load_idx_dataset(img_path.string(), lab_path.string(), "t");
  CHECK(plain.size() == 1);
  CHECK(plain.labels == std::vector<int>{7});
  CHECK(plain.num_classes == 8);
  CHECK(plain.sample_shape() == Shape{1, 2, 2});

  const Dataset zipped = load_idx_dataset(img_gz.string(), lab_path.string(), "t");
  CHECK(zipped.images.values() == plain.images.values());

  CHECK_THROWS(load_idx_dataset("missing_file_xyz", lab_path.string(), "t"));
  std::filesystem::remove(img_path);
  std::filesystem::remove(lab_path);
  std::filesystem::remove(img_gz);
}

TEST_CASE("dataset subset keeps a prefix") {
  RngState rng(1);
  const Dataset d = make_blobs(rng, 4, 3, 5, 0.1);
  const Dataset s = d.subset(7);
  CHECK(s.size() == 7);
  CHECK(s.num_classes == 3);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(s.labels[i] == d.labels[i]);
    CHECK(s.example(i).values() == d.example(i).values());
  }
  CHECK(d.subset(0).size() == d.size());
  CHECK(d.subset(100).size() == d.size());
}

TEST_CASE("make_blobs degenerate spread and exact histogram") {
  RngState rng(2);
  const Dataset d = make_blobs(rng, 5, 4, 6, 0.0);
  CHECK(d.size() == 20);
  std::vector<int> counts(4, 0);
  for (int lab : d.labels) ++counts[lab];
  CHECK(counts == std::vector<int>{5, 5, 5, 5});
  // spread 0: every point of a class collapses onto its centre.
  for (std::size_t c = 0; c < 4; ++c) {
    const Tensor first = d.example(c * 5);
    for (std::size_t i = 1; i < 5; ++i) {
      CHECK(d.example(c * 5 + i).values() == first.values());
    }
  }
  for (std::size_t i = 0; i < d.images.size(); ++i) {
    CHECK(d.images[i] >= 0.0);
    CHECK(d.images[i] <= 1.0);
  }
}

TEST_CASE("make_blobs is deterministic in the seed") {
  RngState a(9), b(9), c(10);
  const Dataset da = make_blobs(a, 3, 2, 4, 0.2);
  const Dataset db = make_blobs(b, 3, 2, 4, 0.2);
  const Dataset dc = make_blobs(c, 3, 2, 4, 0.2);
  CHECK(da.images.values() == db.images.values());
  CHECK(da.images.values() != dc.images.values());
}

TEST_CASE("make_blobs image layout") {
  RngState rng(3);
  const Dataset d = make_blobs(rng, 2, 2, 16, 0.1, 4);
  CHECK(d.sample_shape() == Shape{1, 4, 4});
  RngState rng2(3);
  CHECK_THROWS(make_blobs(rng2, 2, 2, 15, 0.1, 4));
}

TEST_CASE("batch plan partitions each epoch") {
  RngState data_rng(5);
  const Dataset d = make_blobs(data_rng, 5, 1, 3, 0.1);
  BatchPlan plan(5, 2);
  CHECK(plan.batches_per_epoch() == 3);

  RngState rng(77);
  std::vector<std::size_t> sizes;
  std::vector<double> seen;
  for (int b = 0; b < 3; ++b) {
    const Batch batch = plan.next_batch(d, rng);
    sizes.push_back(batch.labels.size());
    for (std::size_t i = 0; i < batch.labels.size(); ++i) {
      seen.push_back(batch.images[i * 3]);  // first feature identifies the example
    }
  }
  CHECK(sizes == std::vector<std::size_t>{2, 2, 1});
  std::vector<double> want;
  for (std::size_t i = 0; i < 5; ++i) want.push_back(d.example(i)[0]);
  std::sort(seen.begin(), seen.end());
  std::sort(want.begin(), want.end());
  CHECK(seen == want);
}

TEST_CASE("batch plan shuffles between epochs but reproduces across runs") {
  RngState data_rng(6);
  const Dataset d = make_blobs(data_rng, 16, 1, 2, 0.3);

  auto epoch_order = [&](BatchPlan& plan, RngState& rng) {
    std::vector<double> order;
    for (std::size_t b = 0; b < plan.batches_per_epoch(); ++b) {
      const Batch batch = plan.next_batch(d, rng);
      for (std::size_t i = 0; i < batch.labels.size(); ++i) order.push_back(batch.images[i * 2]);
    }
    return order;
  };

  BatchPlan plan(16, 4);
  RngState rng(123);
  const auto e1 = epoch_order(plan, rng);
  const auto e2 = epoch_order(plan, rng);
  CHECK(e1 != e2);

  BatchPlan plan2(16, 4);
  RngState rng2(123);
  CHECK(epoch_order(plan2, rng2) == e1);
  CHECK(epoch_order(plan2, rng2) == e2);
}

TEST_CASE("batch plan rejects degenerate arguments") {
  CHECK_THROWS(BatchPlan(0, 4));
  CHECK_THROWS(BatchPlan(4, 0));
}
