// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset ingestion (binary PGM), preprocessing, synthetic grating data, and
// client partitioning.

#ifndef FFSIM_DATA_IO_HPP
#define FFSIM_DATA_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffsim/episodes.hpp"
#include "ffsim/rng.hpp"

namespace ffsim {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

struct PgmError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PgmMagicError : PgmError {
  using PgmError::PgmError;
};
struct PgmHeaderError : PgmError {
  using PgmError::PgmError;
};
struct PgmMaxvalError : PgmError {
  using PgmError::PgmError;
};
struct PgmTruncatedError : PgmError {
  using PgmError::PgmError;
};

// Binary PGM ("P5"), maxval <= 255.
Image load_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Image& image);

// Bilinear resize with corner-aligned sampling; a one-pixel target samples
// the source center.
Image resize_bilinear(const Image& image, int target_side);

enum class NormalizationMode { kPerImage, kPerDataset };

// Scale to [0,1] by /255, standardize to zero mean / unit variance (variance
// floor 1e-8), flatten row-major.
std::vector<double> normalize(const Image& image);

struct SyntheticSpec {
  int num_classes = 2;
  int examples_per_class = 40;
  int resolution = 16;           // square side
  double noise_level = 0.3;      // pixel noise stddev relative to signal
  int num_modalities = 1;        // examples are tagged round-robin
  std::uint64_t seed = 0;

  void validate() const;
};

// Each class is a distinct sinusoidal grating (frequency, orientation) plus
// i.i.d. pixel noise; linearly separable at zero noise. Examples carry tags
// {modality, class name}. Deterministic per seed.
LabeledDataset generate_synthetic(const SyntheticSpec& spec);

// Same generator, but materialized as 8-bit images (the dataset above is the
// normalization of exactly these pixels).
std::vector<std::pair<Image, Example>> generate_synthetic_images(const SyntheticSpec& spec);

// Stratified per class by the ratios with largest-remainder rounding;
// partitions are disjoint and exhaustive. Class examples are shuffled by the
// seed before block assignment.
std::vector<LabeledDataset> partition_clients(const LabeledDataset& dataset,
                                              const std::vector<double>& ratios,
                                              Rng& rng);

// Group examples by the tag at tag_index (modality = 0, disease = 1);
// examples missing that tag are spread round-robin across groups.
std::vector<LabeledDataset> partition_by_tag(const LabeledDataset& dataset,
                                             std::size_t tag_index);

struct ManifestEntry {
  std::string path;
  std::string label;
  std::string modality;
  std::optional<int> client;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

// One record per line: path, label, modality, optional client id,
// tab-separated, '#' comments.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// Load every manifest entry, resize to target_side and normalize. Labels are
// assigned contiguous ids in lexicographic order of the label strings; tags
// are {modality, label, client-or-empty}. Paths resolve relative to the
// manifest location. Per-dataset normalization standardizes with statistics
// pooled over all images instead of per image.
LabeledDataset load_manifest_dataset(const std::filesystem::path& manifest_path,
                                     int target_side,
                                     NormalizationMode mode = NormalizationMode::kPerImage);

}  // namespace ffsim

#endif  // FFSIM_DATA_IO_HPP
