// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffsim/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

namespace ffsim {

namespace {

constexpr double kVarianceFloor = 1e-8;
constexpr double kGratingAmplitude = 0.35;

// Skips PGM whitespace and '#' comment lines, then reads one ASCII token.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) break;
  }
  if (c == EOF) return tok;
  tok.push_back(static_cast<char>(c));
  while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(c));
  return tok;
}

int parse_dim(const std::string& tok, const char* what) {
  int v = 0;
  try {
    std::size_t pos = 0;
    v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
  } catch (const std::exception&) {
    throw PgmHeaderError(std::string("pgm: malformed ") + what + " '" + tok + "'");
  }
  if (v <= 0) throw PgmHeaderError(std::string("pgm: non-positive ") + what);
  return v;
}

}  // namespace

Image load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PgmError("pgm: cannot open " + path.string());

  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (!in || m0 != 'P' || m1 != '5') {
    throw PgmMagicError("pgm: not a binary PGM (P5): " + path.string());
  }

  Image img;
  img.width = parse_dim(next_token(in), "width");
  img.height = parse_dim(next_token(in), "height");
  const std::string maxval_tok = next_token(in);
  const int maxval = parse_dim(maxval_tok, "maxval");
  if (maxval > 255) {
    throw PgmMaxvalError("pgm: unsupported maxval " + maxval_tok + " (> 255)");
  }

  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.pixels.resize(n);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw PgmTruncatedError("pgm: truncated payload in " + path.string());
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PgmError("pgm: cannot write " + path.string());
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

Image resize_bilinear(const Image& image, int target_side) {
  if (target_side <= 0) throw std::invalid_argument("resize: target side must be positive");
  if (image.width < 1 || image.height < 1) {
    throw std::invalid_argument("resize: empty source image");
  }
  Image out;
  out.width = out.height = target_side;
  out.pixels.resize(static_cast<std::size_t>(target_side) * target_side);

  auto src_coord = [](int i, int dst, int src) {
    if (dst == 1) return (static_cast<double>(src) - 1.0) / 2.0;
    return static_cast<double>(i) * (static_cast<double>(src) - 1.0) /
           (static_cast<double>(dst) - 1.0);
  };

  for (int y = 0; y < target_side; ++y) {
    const double sy = src_coord(y, target_side, image.height);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < target_side; ++x) {
      const double sx = src_coord(x, target_side, image.width);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double fx = sx - x0;
      auto at = [&](int yy, int xx) {
        return static_cast<double>(image.pixels[static_cast<std::size_t>(yy) * image.width + xx]);
      };
      const double v = (1.0 - fy) * ((1.0 - fx) * at(y0, x0) + fx * at(y0, x1)) +
                       fy * ((1.0 - fx) * at(y1, x0) + fx * at(y1, x1));
      out.pixels[static_cast<std::size_t>(y) * target_side + x] =
          static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return out;
}

std::vector<double> normalize(const Image& image) {
  const std::size_t n = image.pixels.size();
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) row[i] = static_cast<double>(image.pixels[i]) / 255.0;
  double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : row) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv_std = 1.0 / std::sqrt(std::max(var, kVarianceFloor));
  for (double& v : row) v = (v - mean) * inv_std;
  return row;
}

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw std::invalid_argument("SyntheticSpec: need at least 2 classes");
  if (examples_per_class < 1) throw std::invalid_argument("SyntheticSpec: examples_per_class >= 1");
  if (resolution < 4) throw std::invalid_argument("SyntheticSpec: resolution must be >= 4");
  if (noise_level < 0.0) throw std::invalid_argument("SyntheticSpec: noise level >= 0");
  if (num_modalities < 1) throw std::invalid_argument("SyntheticSpec: num_modalities >= 1");
}

std::vector<std::pair<Image, Example>> generate_synthetic_images(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(derive_stream({spec.seed, 0x73796e7468ULL}));
  const int res = spec.resolution;
  std::vector<std::pair<Image, Example>> out;
  out.reserve(static_cast<std::size_t>(spec.num_classes) * spec.examples_per_class);

  for (int c = 0; c < spec.num_classes; ++c) {
    const double freq = 2.0 + static_cast<double>(c);
    const double base_angle = std::numbers::pi * static_cast<double>(c) /
                              static_cast<double>(spec.num_classes);
    for (int e = 0; e < spec.examples_per_class; ++e) {
      const int modality = e % spec.num_modalities;
      // Each modality sees the class grating at a slightly rotated angle, a
      // stand-in for acquisition differences between imaging modalities.
      const double angle = base_angle + std::numbers::pi * static_cast<double>(modality) /
                                            (4.0 * static_cast<double>(spec.num_modalities) *
                                             static_cast<double>(spec.num_classes));
      Image img;
      img.width = img.height = res;
      img.pixels.resize(static_cast<std::size_t>(res) * res);
      for (int y = 0; y < res; ++y) {
        for (int x = 0; x < res; ++x) {
          const double u = (static_cast<double>(x) * std::cos(angle) +
                            static_cast<double>(y) * std::sin(angle)) /
                           static_cast<double>(res);
          double signal = std::sin(2.0 * std::numbers::pi * freq * u);
          double pix = 0.5 + kGratingAmplitude * (signal + spec.noise_level * rng.normal());
          pix = std::clamp(pix, 0.0, 1.0);
          img.pixels[static_cast<std::size_t>(y) * res + x] =
              static_cast<std::uint8_t>(std::lround(255.0 * pix));
        }
      }
      Example ex;
      ex.label = c;
      ex.tags = {"mod" + std::to_string(modality), "class" + std::to_string(c)};
      out.emplace_back(std::move(img), std::move(ex));
    }
  }
  return out;
}

LabeledDataset generate_synthetic(const SyntheticSpec& spec) {
  LabeledDataset ds;
  ds.input_dim = spec.resolution * spec.resolution;
  for (auto& [img, ex] : generate_synthetic_images(spec)) {
    ex.input = normalize(img);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

std::vector<LabeledDataset> partition_clients(const LabeledDataset& dataset,
                                              const std::vector<double>& ratios,
                                              Rng& rng) {
  if (ratios.empty()) throw std::invalid_argument("partition_clients: no ratios");
  double ratio_sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw std::invalid_argument("partition_clients: ratios must be positive");
    ratio_sum += r;
  }

  const std::size_t k = ratios.size();
  std::vector<LabeledDataset> parts(k);
  for (auto& p : parts) p.input_dim = dataset.input_dim;

  for (int label : dataset.labels()) {
    std::vector<std::size_t> idx = dataset.indices_of(label);
    const std::size_t n = idx.size();
    // Shuffle, then hand out consecutive blocks sized by largest remainder.
    for (std::size_t i = 0; i + 1 < n; ++i) {
      std::size_t j = i + rng.uniform_int(n - i);
      std::swap(idx[i], idx[j]);
    }
    std::vector<std::size_t> counts(k);
    std::vector<std::pair<double, std::size_t>> remainders;  // (fraction, client)
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double quota = static_cast<double>(n) * ratios[i] / ratio_sum;
      counts[i] = static_cast<std::size_t>(std::floor(quota));
      assigned += counts[i];
      remainders.emplace_back(quota - std::floor(quota), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) counts[remainders[i % k].second]++;

    std::size_t pos = 0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < counts[i]; ++j) {
        parts[i].examples.push_back(dataset.examples[idx[pos++]]);
      }
    }
  }

  for (std::size_t i = 0; i < k; ++i) {
    if (parts[i].examples.empty()) {
      throw std::invalid_argument("partition_clients: empty partition for client " +
                                  std::to_string(i));
    }
  }
  return parts;
}

std::vector<LabeledDataset> partition_by_tag(const LabeledDataset& dataset,
                                             std::size_t tag_index) {
  std::vector<std::string> values;
  for (const Example& e : dataset.examples) {
    if (tag_index < e.tags.size() && !e.tags[tag_index].empty()) {
      if (std::find(values.begin(), values.end(), e.tags[tag_index]) == values.end()) {
        values.push_back(e.tags[tag_index]);
      }
    }
  }
  std::sort(values.begin(), values.end());
  if (values.empty()) throw std::invalid_argument("partition_by_tag: no examples carry the tag");

  std::vector<LabeledDataset> parts(values.size());
  for (auto& p : parts) p.input_dim = dataset.input_dim;
  std::size_t untagged = 0;
  for (const Example& e : dataset.examples) {
    if (tag_index < e.tags.size() && !e.tags[tag_index].empty()) {
      const auto it = std::find(values.begin(), values.end(), e.tags[tag_index]);
      parts[static_cast<std::size_t>(it - values.begin())].examples.push_back(e);
    } else {
      parts[untagged++ % parts.size()].examples.push_back(e);
    }
  }
  return parts;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot open " + path.string());
  DatasetManifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() < 3 || fields.size() > 4) {
      throw std::runtime_error("manifest: line " + std::to_string(lineno) +
                               ": expected 3 or 4 tab-separated fields");
    }
    ManifestEntry e;
    e.path = fields[0];
    e.label = fields[1];
    e.modality = fields[2];
    if (e.path.empty() || e.label.empty()) {
      throw std::runtime_error("manifest: line " + std::to_string(lineno) +
                               ": empty path or label");
    }
    if (fields.size() == 4 && !fields[3].empty()) {
      try {
        e.client = std::stoi(fields[3]);
      } catch (const std::exception&) {
        throw std::runtime_error("manifest: line " + std::to_string(lineno) +
                                 ": bad client id '" + fields[3] + "'");
      }
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("manifest: cannot write " + path.string());
  out << "# path\tlabel\tmodality\tclient\n";
  for (const ManifestEntry& e : manifest.entries) {
    out << e.path << '\t' << e.label << '\t' << e.modality << '\t';
    if (e.client) out << *e.client;
    out << '\n';
  }
}

LabeledDataset load_manifest_dataset(const std::filesystem::path& manifest_path,
                                     int target_side, NormalizationMode mode) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  if (manifest.entries.empty()) throw std::runtime_error("manifest: no entries");
  const std::filesystem::path base = manifest_path.parent_path();

  std::vector<std::string> label_names;
  for (const ManifestEntry& e : manifest.entries) label_names.push_back(e.label);
  std::sort(label_names.begin(), label_names.end());
  label_names.erase(std::unique(label_names.begin(), label_names.end()), label_names.end());
  std::map<std::string, int> label_ids;
  for (std::size_t i = 0; i < label_names.size(); ++i) {
    label_ids[label_names[i]] = static_cast<int>(i);
  }

  LabeledDataset ds;
  ds.input_dim = target_side * target_side;
  std::vector<Image> resized;
  for (const ManifestEntry& e : manifest.entries) {
    std::filesystem::path p(e.path);
    if (p.is_relative()) p = base / p;
    resized.push_back(resize_bilinear(load_pgm(p), target_side));
    Example ex;
    ex.label = label_ids[e.label];
    ex.tags = {e.modality, e.label, e.client ? std::to_string(*e.client) : std::string()};
    ds.examples.push_back(std::move(ex));
  }

  if (mode == NormalizationMode::kPerImage) {
    for (std::size_t i = 0; i < resized.size(); ++i) ds.examples[i].input = normalize(resized[i]);
  } else {
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (const Image& img : resized) {
      for (std::uint8_t px : img.pixels) {
        const double v = static_cast<double>(px) / 255.0;
        sum += v;
        sumsq += v * v;
        ++n;
      }
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(sumsq / static_cast<double>(n) - mean * mean, kVarianceFloor);
    const double inv_std = 1.0 / std::sqrt(var);
    for (std::size_t i = 0; i < resized.size(); ++i) {
      std::vector<double> row(resized[i].pixels.size());
      for (std::size_t j = 0; j < row.size(); ++j) {
        row[j] = (static_cast<double>(resized[i].pixels[j]) / 255.0 - mean) * inv_std;
      }
      ds.examples[i].input = std::move(row);
    }
  }
  return ds;
}

}  // namespace ffsim
