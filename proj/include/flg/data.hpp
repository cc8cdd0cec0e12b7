#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flg {

/// Raised for malformed cube files, shape disagreements and invalid inputs
/// in the data layer.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PixelCoord {
  int row = 0;
  int col = 0;
  bool operator==(const PixelCoord&) const = default;
};

/// Hyperspectral cube. Spectra are stored column-per-pixel (bands x pixels),
/// pixel index = row * width + col. Label 0 is background.
class HsiCube {
 public:
  HsiCube() = default;
  HsiCube(int bands, int height, int width);

  int bands() const { return bands_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int pixel_count() const { return height_ * width_; }

  /// Largest label in the raster (number of classes when labels are dense).
  int class_count() const;

  double value(int band, int row, int col) const { return values_(band, pixel_index(row, col)); }
  double& value(int band, int row, int col) { return values_(band, pixel_index(row, col)); }

  int label(int row, int col) const { return labels_[pixel_index(row, col)]; }
  int label_at(int pixel) const { return labels_[pixel]; }
  void set_label(int row, int col, int label) { labels_[pixel_index(row, col)] = label; }

  int pixel_index(int row, int col) const { return row * width_ + col; }
  PixelCoord coord_of(int pixel) const { return {pixel / width_, pixel % width_}; }

  auto spectrum(int pixel) const { return values_.col(pixel); }

  const Eigen::MatrixXd& spectra() const { return values_; }
  Eigen::MatrixXd& spectra() { return values_; }
  const std::vector<int>& labels() const { return labels_; }
  std::vector<int>& labels() { return labels_; }

  /// Pixel indices with a non-background label, ascending.
  std::vector<int> labeled_pixels() const;

 private:
  int bands_ = 0;
  int height_ = 0;
  int width_ = 0;
  Eigen::MatrixXd values_;
  std::vector<int> labels_;
};

struct Sample {
  Eigen::VectorXd spectrum;
  PixelCoord coord;
  std::optional<int> label;
};

Sample sample_at(const HsiCube& cube, int pixel);

struct SplitState {
  std::vector<int> train_idx;
  std::vector<int> pool_idx;
  std::uint64_t seed = 0;
};

struct PatchSample {
  Eigen::MatrixXd matrix;  // bands x (window * window), row-major window order
  PixelCoord center;
};

/// Paths of the four files making up a stored cube, derived from the header
/// path `<stem>.json`.
struct CubeFiles {
  std::filesystem::path header;
  std::filesystem::path payload;
  std::filesystem::path label_header;
  std::filesystem::path label_payload;

  static CubeFiles from_header(const std::filesystem::path& header);
};

HsiCube load_cube(const std::filesystem::path& header_path);
void save_cube(const HsiCube& cube, const std::filesystem::path& header_path);

/// Per-band min-max scaling to [0, 1]; constant bands map to 0.
HsiCube normalize(const HsiCube& cube);

struct SynthSpec {
  int classes = 3;
  int bands = 20;
  int height = 64;
  int width = 64;
  double noise_sigma = 0.10;
  /// Correlation between adjacent bands in the default AR(1) noise model.
  double band_correlation = 0.5;
  /// Side length of the rectangular tiles that carry one label each.
  int tile = 16;
  /// Spread of the default class means around the common base spectrum.
  double separation = 0.10;
  /// Optional explicit class means (classes x bands) and covariances.
  std::optional<Eigen::MatrixXd> means;
  std::optional<std::vector<Eigen::MatrixXd>> covariances;
};

/// Class means actually used by synth_generate for `spec` and `seed`.
Eigen::MatrixXd synth_class_means(const SynthSpec& spec, std::uint64_t seed);
/// Tile label layout used by synth_generate (row-major, 0 = background).
std::vector<int> synth_layout(const SynthSpec& spec);
HsiCube synth_generate(const SynthSpec& spec, std::uint64_t seed);

/// Draws `n` labeled pixels as the initial training set; the remaining
/// labeled pixels form the pool. `stratified` draws equally per class.
SplitState initial_split(const HsiCube& cube, int n, std::uint64_t seed, bool stratified = false);
SplitState initial_split(const std::vector<int>& labeled, const std::vector<int>& labels_of, int n,
                         std::uint64_t seed, bool stratified = false);

/// Spectral-spatial patch around `center`; out-of-range neighbours are
/// mirror-reflected at the raster border.
PatchSample extract_patch(const HsiCube& cube, PixelCoord center, int window);

}  // namespace flg
