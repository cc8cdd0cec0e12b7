#include "flg/data.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

namespace flg {
namespace {

using nlohmann::json;

struct RasterHeader {
  int bands = 0;
  int height = 0;
  int width = 0;
  std::string dtype;
  std::string order;
};

RasterHeader read_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open header: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed header " + path.string() + ": " + e.what());
  }
  RasterHeader h;
  try {
    h.bands = j.at("bands").get<int>();
    h.height = j.at("height").get<int>();
    h.width = j.at("width").get<int>();
    h.dtype = j.at("dtype").get<std::string>();
    h.order = j.value("order", std::string("bip"));
  } catch (const json::exception& e) {
    throw DataError("malformed header " + path.string() + ": " + e.what());
  }
  if (h.bands < 1 || h.height < 1 || h.width < 1) {
    throw DataError("malformed header " + path.string() + ": non-positive dimension");
  }
  if (h.order != "bip") throw DataError("unsupported interleave '" + h.order + "' in " + path.string());
  return h;
}

void write_header(const std::filesystem::path& path, int bands, int height, int width,
                  const std::string& dtype) {
  json j;
  j["bands"] = bands;
  j["height"] = height;
  j["width"] = width;
  j["dtype"] = dtype;
  j["order"] = "bip";
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("cannot write " + path.string());
}

std::vector<char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open payload: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("cannot write " + path.string());
}

// Little-endian 32-bit load/store independent of host byte order.
template <class T>
T load_le(const char* p) {
  std::uint32_t u = 0;
  for (int i = 3; i >= 0; --i) u = (u << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<T>(u);
}

template <class T>
void store_le(std::string& out, T value) {
  auto u = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

HsiCube::HsiCube(int bands, int height, int width)
    : bands_(bands),
      height_(height),
      width_(width),
      values_(Eigen::MatrixXd::Zero(bands, static_cast<Eigen::Index>(height) * width)),
      labels_(static_cast<std::size_t>(height) * width, 0) {
  if (bands < 1 || height < 1 || width < 1) throw DataError("cube dimensions must be positive");
}

int HsiCube::class_count() const {
  return labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
}

std::vector<int> HsiCube::labeled_pixels() const {
  std::vector<int> out;
  for (int p = 0; p < pixel_count(); ++p)
    if (labels_[p] != 0) out.push_back(p);
  return out;
}

Sample sample_at(const HsiCube& cube, int pixel) {
  Sample s{cube.spectrum(pixel), cube.coord_of(pixel), std::nullopt};
  if (cube.label_at(pixel) != 0) s.label = cube.label_at(pixel);
  return s;
}

CubeFiles CubeFiles::from_header(const std::filesystem::path& header) {
  auto stem = header;
  stem.replace_extension();
  auto with = [&](const char* suffix) { return std::filesystem::path(stem.string() + suffix); };
  return {header, with(".bin"), with(".labels.json"), with(".labels.bin")};
}

HsiCube load_cube(const std::filesystem::path& header_path) {
  const auto files = CubeFiles::from_header(header_path);
  const auto h = read_header(files.header);
  if (h.dtype != "f32le") throw DataError("unsupported dtype '" + h.dtype + "'");
  const auto payload = read_bytes(files.payload);
  const std::size_t expected = std::size_t(h.bands) * h.height * h.width * 4;
  if (payload.size() != expected) {
    throw DataError("payload size mismatch: expected " + std::to_string(expected) + " bytes, got " +
                    std::to_string(payload.size()));
  }

  HsiCube cube(h.bands, h.height, h.width);
  const char* p = payload.data();
  for (int px = 0; px < cube.pixel_count(); ++px) {
    for (int b = 0; b < h.bands; ++b, p += 4) {
      const float v = load_le<float>(p);
      if (!std::isfinite(v)) throw DataError("non-finite value in payload");
      cube.spectra()(b, px) = v;
    }
  }

  const auto lh = read_header(files.label_header);
  if (lh.dtype != "i32le") throw DataError("unsupported label dtype '" + lh.dtype + "'");
  if (lh.height != h.height || lh.width != h.width || lh.bands != 1) {
    throw DataError("label raster dimension mismatch");
  }
  const auto lbytes = read_bytes(files.label_payload);
  if (lbytes.size() != std::size_t(h.height) * h.width * 4) {
    throw DataError("label payload size mismatch");
  }
  for (int px = 0; px < cube.pixel_count(); ++px) {
    const int v = load_le<std::int32_t>(lbytes.data() + 4 * px);
    if (v < 0) throw DataError("negative label in raster");
    cube.labels()[px] = v;
  }
  return cube;
}

void save_cube(const HsiCube& cube, const std::filesystem::path& header_path) {
  const auto files = CubeFiles::from_header(header_path);
  write_header(files.header, cube.bands(), cube.height(), cube.width(), "f32le");
  write_header(files.label_header, 1, cube.height(), cube.width(), "i32le");

  std::string buf;
  buf.reserve(std::size_t(cube.bands()) * cube.pixel_count() * 4);
  for (int px = 0; px < cube.pixel_count(); ++px)
    for (int b = 0; b < cube.bands(); ++b) store_le(buf, static_cast<float>(cube.spectra()(b, px)));
  write_bytes(files.payload, buf);

  buf.clear();
  for (int label : cube.labels()) store_le(buf, static_cast<std::int32_t>(label));
  write_bytes(files.label_payload, buf);
}

HsiCube normalize(const HsiCube& cube) {
  if (!cube.spectra().allFinite()) throw DataError("normalize: non-finite input value");
  HsiCube out = cube;
  auto& v = out.spectra();
  for (int b = 0; b < cube.bands(); ++b) {
    const double lo = v.row(b).minCoeff();
    const double range = v.row(b).maxCoeff() - lo;
    if (range > 0) {
      v.row(b) = (v.row(b).array() - lo) / range;
    } else {
      v.row(b).setZero();
    }
  }
  return out;
}

Eigen::MatrixXd synth_class_means(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.means) {
    if (spec.means->rows() != spec.classes || spec.means->cols() != spec.bands)
      throw DataError("synth: means must be classes x bands");
    return *spec.means;
  }
  // Smooth base spectrum shared by all classes plus a smooth per-class offset.
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double phase = 2 * M_PI * unit(rng);
  Eigen::MatrixXd means(spec.classes, spec.bands);
  for (int c = 0; c < spec.classes; ++c) {
    const double a = unit(rng) * 2 - 1, b = unit(rng) * 2 - 1, f = 1 + 2 * unit(rng);
    for (int l = 0; l < spec.bands; ++l) {
      const double t = spec.bands > 1 ? double(l) / (spec.bands - 1) : 0.0;
      const double base = 0.5 + 0.2 * std::sin(2 * M_PI * t + phase);
      means(c, l) = base + spec.separation * (a * std::cos(M_PI * f * t) + b * std::sin(M_PI * f * t + c));
    }
  }
  return means;
}

std::vector<int> synth_layout(const SynthSpec& spec) {
  if (spec.classes < 2) throw DataError("synth: need at least 2 classes");
  if (spec.tile < 1) throw DataError("synth: tile size must be positive");
  const int tiles_per_row = (spec.width + spec.tile - 1) / spec.tile;
  std::vector<int> labels(std::size_t(spec.height) * spec.width);
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      const int tr = r / spec.tile, tc = c / spec.tile;
      labels[std::size_t(r) * spec.width + c] = (tr * tiles_per_row + tc + tr) % (spec.classes + 1);
    }
  }
  return labels;
}

HsiCube synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  const auto labels = synth_layout(spec);
  const Eigen::MatrixXd means = synth_class_means(spec, seed);

  // Per-class noise factor F with F F^T = covariance.
  std::vector<Eigen::MatrixXd> factors;
  for (int c = 0; c < spec.classes; ++c) {
    Eigen::MatrixXd cov;
    if (spec.covariances) {
      if (static_cast<int>(spec.covariances->size()) != spec.classes)
        throw DataError("synth: one covariance per class required");
      cov = (*spec.covariances)[c];
      if (cov.rows() != spec.bands || cov.cols() != spec.bands)
        throw DataError("synth: covariance must be bands x bands");
    } else {
      cov.resize(spec.bands, spec.bands);
      for (int i = 0; i < spec.bands; ++i)
        for (int j = 0; j < spec.bands; ++j)
          cov(i, j) = spec.noise_sigma * spec.noise_sigma * std::pow(spec.band_correlation, std::abs(i - j));
    }
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1 + cov.cwiseAbs().maxCoeff()))
      throw DataError("synth: covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const double tol = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -tol) throw DataError("synth: degenerate covariance (not PSD)");
    factors.push_back(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
  }

  HsiCube cube(spec.bands, spec.height, spec.width);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd z(spec.bands);
  for (int px = 0; px < cube.pixel_count(); ++px) {
    const int label = labels[px];
    cube.labels()[px] = label;
    for (int l = 0; l < spec.bands; ++l) z[l] = gauss(rng);
    if (label == 0) {
      // Background: a flat low-reflectance spectrum with the first class's noise.
      cube.spectra().col(px) = Eigen::VectorXd::Constant(spec.bands, 0.1) + factors[0] * z;
    } else {
      cube.spectra().col(px) = means.row(label - 1).transpose() + factors[label - 1] * z;
    }
  }
  // The payload stores float32; keep the in-memory cube identical to what a
  // reload would produce.
  cube.spectra() = cube.spectra().cast<float>().cast<double>();
  return cube;
}

SplitState initial_split(const std::vector<int>& labeled, const std::vector<int>& labels_of, int n,
                         std::uint64_t seed, bool stratified) {
  if (labeled.size() != labels_of.size()) throw DataError("initial_split: label list length mismatch");
  if (n < 0 || static_cast<std::size_t>(n) > labeled.size())
    throw DataError("initial_split: n exceeds labeled pixel count");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  if (!stratified) {
    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    chosen.assign(order.begin(), order.begin() + n);
  } else {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labeled.size(); ++i) by_class[labels_of[i]].push_back(i);
    for (auto& [cls, members] : by_class) std::shuffle(members.begin(), members.end(), rng);
    // Round-robin over classes so counts differ by at most one.
    std::size_t depth = 0;
    while (static_cast<int>(chosen.size()) < n) {
      for (auto& [cls, members] : by_class) {
        if (static_cast<int>(chosen.size()) == n) break;
        if (depth < members.size()) chosen.push_back(members[depth]);
      }
      ++depth;
    }
  }

  std::vector<bool> in_train(labeled.size(), false);
  for (auto i : chosen) in_train[i] = true;
  SplitState s;
  s.seed = seed;
  for (std::size_t i = 0; i < labeled.size(); ++i) (in_train[i] ? s.train_idx : s.pool_idx).push_back(labeled[i]);
  return s;
}

SplitState initial_split(const HsiCube& cube, int n, std::uint64_t seed, bool stratified) {
  const auto labeled = cube.labeled_pixels();
  std::vector<int> labels_of;
  labels_of.reserve(labeled.size());
  for (int p : labeled) labels_of.push_back(cube.label_at(p));
  return initial_split(labeled, labels_of, n, seed, stratified);
}

PatchSample extract_patch(const HsiCube& cube, PixelCoord center, int window) {
  if (window < 1 || window % 2 == 0) throw DataError("extract_patch: window must be odd and >= 1");
  if (center.row < 0 || center.row >= cube.height() || center.col < 0 || center.col >= cube.width())
    throw DataError("extract_patch: center outside raster");
  const int half = window / 2;
  PatchSample patch{Eigen::MatrixXd(cube.bands(), window * window), center};
  int k = 0;
  for (int dr = -half; dr <= half; ++dr) {
    for (int dc = -half; dc <= half; ++dc, ++k) {
      const int r = reflect(center.row + dr, cube.height());
      const int c = reflect(center.col + dc, cube.width());
      patch.matrix.col(k) = cube.spectrum(cube.pixel_index(r, c));
    }
  }
  return patch;
}

}  // namespace flg
