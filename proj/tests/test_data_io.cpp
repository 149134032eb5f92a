// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "ffsim/data_io.hpp"
#include "ffsim/rng.hpp"

using namespace ffsim;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  const fs::path p =
      fs::temp_directory_path() / ("ffsim_test_" + std::to_string(::getpid()) + "_" +
                                   std::to_string(counter++));
  fs::create_directories(p);
  return p;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Image gradient_image(int w, int h) {
  Image img;
  img.width = w;
  img.height = h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.pixels.push_back(static_cast<std::uint8_t>((x * 7 + y * 13) % 256));
    }
  }
  return img;
}

}  // namespace

TEST_CASE("pgm round trip preserves pixels exactly") {
  const fs::path dir = temp_dir();
  const Image img = gradient_image(9, 5);
  write_pgm(dir / "a.pgm", img);
  const Image back = load_pgm(dir / "a.pgm");
  CHECK(back.width == 9);
  CHECK(back.height == 5);
  CHECK(back.pixels == img.pixels);
  fs::remove_all(dir);
}

TEST_CASE("hand-written 2x2 pgm parses to known pixels") {
  const fs::path dir = temp_dir();
  std::string payload = "P5\n# a comment\n2 2\n255\n";
  payload.push_back('\x00');
  payload.push_back('\x40');
  payload.push_back('\x80');
  payload.push_back('\xff');
  write_bytes(dir / "b.pgm", payload);
  const Image img = load_pgm(dir / "b.pgm");
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.pixels == std::vector<std::uint8_t>{0x00, 0x40, 0x80, 0xff});
  fs::remove_all(dir);
}

TEST_CASE("pgm error taxonomy") {
  const fs::path dir = temp_dir();

  write_bytes(dir / "magic.pgm", "P2\n2 2\n255\n0 0 0 0\n");
  CHECK_THROWS_AS((void)load_pgm(dir / "magic.pgm"), PgmMagicError);

  write_bytes(dir / "header.pgm", "P5\nwide 2\n255\nxxxx");
  CHECK_THROWS_AS((void)load_pgm(dir / "header.pgm"), PgmHeaderError);

  write_bytes(dir / "maxval.pgm", "P5\n2 2\n65535\nxxxxxxxx");
  CHECK_THROWS_AS((void)load_pgm(dir / "maxval.pgm"), PgmMaxvalError);

  write_bytes(dir / "short.pgm", "P5\n2 2\n255\nxy");
  CHECK_THROWS_AS((void)load_pgm(dir / "short.pgm"), PgmTruncatedError);

  CHECK_THROWS_AS((void)load_pgm(dir / "absent.pgm"), PgmError);
  fs::remove_all(dir);
}

TEST_CASE("resize to the source size is the identity") {
  const Image img = gradient_image(8, 8);
  const Image out = resize_bilinear(img, 8);
  CHECK(out.pixels == img.pixels);
}

TEST_CASE("resizing a 2x2 image to one pixel samples the source center") {
  Image img;
  img.width = img.height = 2;
  img.pixels = {0, 100, 100, 200};
  const Image out = resize_bilinear(img, 1);
  REQUIRE(out.pixels.size() == 1u);
  CHECK(static_cast<int>(out.pixels[0]) == 100);  // bilinear at (0.5, 0.5)
}

TEST_CASE("resizing a constant image stays constant") {
  Image img;
  img.width = 7;
  img.height = 3;
  img.pixels.assign(21, 137);
  for (int side : {1, 2, 5, 16}) {
    const Image out = resize_bilinear(img, side);
    for (std::uint8_t p : out.pixels) CHECK(static_cast<int>(p) == 137);
  }
}

TEST_CASE("resize preserves the value range of the source") {
  const Image img = gradient_image(11, 17);
  const Image out = resize_bilinear(img, 6);
  const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  for (std::uint8_t p : out.pixels) {
    CHECK(p >= *lo);
    CHECK(p <= *hi);
  }
}

TEST_CASE("normalize standardizes to zero mean and unit variance") {
  const Image img = gradient_image(6, 6);
  const std::vector<double> row = normalize(img);
  REQUIRE(row.size() == 36u);
  double mean = 0.0;
  for (double v : row) mean += v;
  mean /= 36.0;
  double var = 0.0;
  for (double v : row) var += (v - mean) * (v - mean);
  var /= 36.0;
  CHECK(std::abs(mean) < 1e-12);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalize of a constant image is all zeros, not NaN") {
  Image img;
  img.width = img.height = 4;
  img.pixels.assign(16, 42);
  const std::vector<double> row = normalize(img);
  for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("normalize is invariant to affine pixel rescaling up to sign") {
  // Doubling contrast leaves the standardized features unchanged.
  Image a;
  a.width = a.height = 2;
  a.pixels = {10, 30, 50, 70};
  Image b;
  b.width = b.height = 2;
  b.pixels = {20, 60, 100, 140};
  const std::vector<double> ra = normalize(a);
  const std::vector<double> rb = normalize(b);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i] == doctest::Approx(rb[i]).epsilon(1e-12));
  }
}

TEST_CASE("synthetic data is deterministic per seed and shaped as requested") {
  SyntheticSpec spec;
  spec.num_classes = 3;
  spec.examples_per_class = 7;
  spec.resolution = 8;
  spec.num_modalities = 2;
  spec.seed = 11;
  const LabeledDataset a = generate_synthetic(spec);
  const LabeledDataset b = generate_synthetic(spec);
  REQUIRE(a.examples.size() == 21u);
  CHECK(a.input_dim == 64);
  for (std::size_t i = 0; i < a.examples.size(); ++i) {
    CHECK(a.examples[i].input == b.examples[i].input);
    CHECK(a.examples[i].label == b.examples[i].label);
    REQUIRE(a.examples[i].tags.size() == 2u);
    CHECK(a.examples[i].tags[1] == "class" + std::to_string(a.examples[i].label));
  }
  // Modality tags alternate round-robin within each class.
  CHECK(a.examples[0].tags[0] == "mod0");
  CHECK(a.examples[1].tags[0] == "mod1");
  CHECK(a.examples[2].tags[0] == "mod0");

  spec.seed = 12;
  const LabeledDataset c = generate_synthetic(spec);
  CHECK(a.examples[0].input != c.examples[0].input);
}

TEST_CASE("noise-free synthetic classes are separated by a template matcher") {
  SyntheticSpec spec;
  spec.num_classes = 2;
  spec.examples_per_class = 20;
  spec.resolution = 12;
  spec.noise_level = 0.0;
  spec.seed = 3;
  const LabeledDataset ds = generate_synthetic(spec);

  // Class templates = first example of each class; nearest template wins.
  const std::vector<double>& t0 = ds.examples[0].input;
  const std::vector<double>& t1 = ds.examples[20].input;
  int correct = 0;
  for (const Example& e : ds.examples) {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < e.input.size(); ++i) {
      d0 += (e.input[i] - t0[i]) * (e.input[i] - t0[i]);
      d1 += (e.input[i] - t1[i]) * (e.input[i] - t1[i]);
    }
    if ((d0 <= d1 ? 0 : 1) == e.label) ++correct;
  }
  CHECK(correct == 40);
}

TEST_CASE("heavy synthetic noise destroys template separability") {
  SyntheticSpec spec;
  spec.num_classes = 2;
  spec.examples_per_class = 100;
  spec.resolution = 12;
  spec.noise_level = 25.0;
  spec.seed = 4;
  const LabeledDataset ds = generate_synthetic(spec);

  SyntheticSpec clean = spec;
  clean.noise_level = 0.0;
  const LabeledDataset templates = generate_synthetic(clean);
  const std::vector<double>& t0 = templates.examples[0].input;
  const std::vector<double>& t1 = templates.examples[100].input;
  int correct = 0;
  for (const Example& e : ds.examples) {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < e.input.size(); ++i) {
      d0 += (e.input[i] - t0[i]) * (e.input[i] - t0[i]);
      d1 += (e.input[i] - t1[i]) * (e.input[i] - t1[i]);
    }
    if ((d0 <= d1 ? 0 : 1) == e.label) ++correct;
  }
  CHECK(correct < 150);  // far from separable (200); chance is 100
}

TEST_CASE("the labeled dataset is the normalization of the generated images") {
  SyntheticSpec spec;
  spec.resolution = 8;
  spec.examples_per_class = 3;
  spec.seed = 21;
  const LabeledDataset ds = generate_synthetic(spec);
  const auto images = generate_synthetic_images(spec);
  REQUIRE(ds.examples.size() == images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    CHECK(ds.examples[i].input == normalize(images[i].first));
  }
}

TEST_CASE("partition_clients: 10 per class at equal ratios gives 5/5") {
  SyntheticSpec spec;
  spec.num_classes = 2;
  spec.examples_per_class = 10;
  spec.resolution = 4;
  const LabeledDataset ds = generate_synthetic(spec);
  Rng rng(1);
  const std::vector<LabeledDataset> parts = partition_clients(ds, {1.0, 1.0}, rng);
  REQUIRE(parts.size() == 2u);
  for (const LabeledDataset& p : parts) {
    CHECK(p.indices_of(0).size() == 5u);
    CHECK(p.indices_of(1).size() == 5u);
  }
}

TEST_CASE("partition_clients: largest remainder on 3616 with ratios 1:2:3:4") {
  LabeledDataset ds;
  ds.input_dim = 1;
  for (int i = 0; i < 3616; ++i) {
    Example e;
    e.input = {static_cast<double>(i)};
    e.label = 0;
    ds.examples.push_back(std::move(e));
  }
  Rng rng(2);
  const std::vector<LabeledDataset> parts = partition_clients(ds, {1, 2, 3, 4}, rng);
  // Quotas 361.6, 723.2, 1084.8, 1446.4 -> 362, 723, 1085, 1446.
  CHECK(parts[0].examples.size() == 362u);
  CHECK(parts[1].examples.size() == 723u);
  CHECK(parts[2].examples.size() == 1085u);
  CHECK(parts[3].examples.size() == 1446u);
}

TEST_CASE("partitions are disjoint and exhaustive") {
  SyntheticSpec spec;
  spec.num_classes = 3;
  spec.examples_per_class = 17;
  spec.resolution = 4;
  spec.noise_level = 1.0;  // make inputs unique with high probability
  const LabeledDataset ds = generate_synthetic(spec);
  Rng rng(5);
  const std::vector<LabeledDataset> parts = partition_clients(ds, {2.0, 1.0, 1.0}, rng);

  std::multiset<double> all, expect;
  for (const LabeledDataset& p : parts) {
    CHECK(p.input_dim == ds.input_dim);
    for (const Example& e : p.examples) all.insert(e.input[0] + 1000.0 * e.input[1]);
  }
  for (const Example& e : ds.examples) expect.insert(e.input[0] + 1000.0 * e.input[1]);
  CHECK(all == expect);
}

TEST_CASE("partition ratios are scale invariant") {
  SyntheticSpec spec;
  spec.examples_per_class = 25;
  spec.resolution = 4;
  const LabeledDataset ds = generate_synthetic(spec);
  Rng r1(9), r2(9);
  const auto a = partition_clients(ds, {1.0, 3.0}, r1);
  const auto b = partition_clients(ds, {0.25, 0.75}, r2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].examples.size() == b[i].examples.size());
  }
}

TEST_CASE("an empty partition is an error") {
  LabeledDataset ds;
  ds.input_dim = 1;
  for (int i = 0; i < 2; ++i) {
    Example e;
    e.input = {static_cast<double>(i)};
    e.label = 0;
    ds.examples.push_back(std::move(e));
  }
  Rng rng(3);
  CHECK_THROWS_AS((void)partition_clients(ds, {1.0, 1.0, 1.0}, rng),
                  std::invalid_argument);
}

TEST_CASE("partition_by_tag groups by tag value, round-robins untagged rows") {
  LabeledDataset ds;
  ds.input_dim = 1;
  auto add = [&](double v, std::vector<std::string> tags) {
    Example e;
    e.input = {v};
    e.label = 0;
    e.tags = std::move(tags);
    ds.examples.push_back(std::move(e));
  };
  add(0, {"ct"});
  add(1, {"xray"});
  add(2, {"ct"});
  add(3, {});        // untagged
  add(4, {""});      // empty tag counts as untagged
  add(5, {"xray"});

  const std::vector<LabeledDataset> parts = partition_by_tag(ds, 0);
  REQUIRE(parts.size() == 2u);  // groups sorted: ct, xray
  // ct group: rows 0, 2 plus the first untagged (3).
  std::multiset<double> g0, g1;
  for (const Example& e : parts[0].examples) g0.insert(e.input[0]);
  for (const Example& e : parts[1].examples) g1.insert(e.input[0]);
  CHECK(g0 == std::multiset<double>{0, 2, 3});
  CHECK(g1 == std::multiset<double>{1, 4, 5});

  LabeledDataset bare;
  bare.input_dim = 1;
  Example untagged;
  untagged.input = {0.0};
  bare.examples.push_back(std::move(untagged));
  CHECK_THROWS_AS((void)partition_by_tag(bare, 0), std::invalid_argument);
}

TEST_CASE("manifest round trip and parsing") {
  const fs::path dir = temp_dir();
  DatasetManifest m;
  m.entries.push_back({"img/a.pgm", "covid", "ct", 0});
  m.entries.push_back({"img/b.pgm", "normal", "xray", std::nullopt});
  write_manifest(dir / "m.tsv", m);
  const DatasetManifest back = read_manifest(dir / "m.tsv");
  REQUIRE(back.entries.size() == 2u);
  CHECK(back.entries[0].path == "img/a.pgm");
  CHECK(back.entries[0].label == "covid");
  CHECK(back.entries[0].modality == "ct");
  CHECK(back.entries[0].client == 0);
  CHECK(!back.entries[1].client.has_value());

  write_bytes(dir / "bad.tsv", "only_one_field\n");
  CHECK_THROWS_AS((void)read_manifest(dir / "bad.tsv"), std::runtime_error);
  write_bytes(dir / "badclient.tsv", "a.pgm\tx\tct\tnope\n");
  CHECK_THROWS_AS((void)read_manifest(dir / "badclient.tsv"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("load_manifest_dataset resolves paths, labels and tags") {
  const fs::path dir = temp_dir();
  fs::create_directories(dir / "img");
  SyntheticSpec spec;
  spec.resolution = 8;
  spec.examples_per_class = 2;
  spec.seed = 31;
  const auto images = generate_synthetic_images(spec);

  DatasetManifest m;
  const std::vector<std::string> names = {"pneumonia", "normal", "pneumonia", "normal"};
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string rel = "img/" + std::to_string(i) + ".pgm";
    write_pgm(dir / rel, images[i].first);
    m.entries.push_back({rel, names[i], "ct", i < 2 ? std::optional<int>(1) : std::nullopt});
  }
  write_manifest(dir / "m.tsv", m);

  const LabeledDataset ds = load_manifest_dataset(dir / "m.tsv", 8);
  REQUIRE(ds.examples.size() == 4u);
  CHECK(ds.input_dim == 64);
  // Lexicographic label ids: normal = 0, pneumonia = 1.
  CHECK(ds.examples[0].label == 1);
  CHECK(ds.examples[1].label == 0);
  CHECK(ds.examples[0].tags == std::vector<std::string>{"ct", "pneumonia", "1"});
  CHECK(ds.examples[2].tags == std::vector<std::string>{"ct", "pneumonia", ""});
  // Same side, per-image mode: features equal normalize() of the pixels.
  CHECK(ds.examples[0].input == normalize(images[0].first));

  // Per-dataset normalization pools statistics: rows differ from per-image.
  const LabeledDataset pooled =
      load_manifest_dataset(dir / "m.tsv", 8, NormalizationMode::kPerDataset);
  CHECK(pooled.examples[0].input != ds.examples[0].input);
  double sum = 0.0;
  std::size_t n = 0;
  for (const Example& e : pooled.examples) {
    for (double v : e.input) {
      sum += v;
      ++n;
    }
  }
  CHECK(std::abs(sum / static_cast<double>(n)) < 1e-10);
  fs::remove_all(dir);
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec s;
  s.num_classes = 1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SyntheticSpec{};
  s.resolution = 2;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SyntheticSpec{};
  s.noise_level = -0.1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK_NOTHROW(SyntheticSpec{}.validate());
}
