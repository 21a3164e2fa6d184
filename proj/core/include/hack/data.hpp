#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hack/congeal.hpp"

namespace hack {

/// Instances are columns of `features`; an instance's id is its column index.
struct Dataset {
  std::size_t rows = 1;  // image shape; rows = 1, cols = dim for raw vectors
  std::size_t cols = 0;
  Eigen::MatrixXd features;              // dim x n
  std::vector<int> labels;               // empty when unlabeled
  std::vector<std::uint8_t> congealed;   // 1 = congealed replacement
  std::string source;

  std::size_t size() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.rows()); }
  bool has_labels() const { return !labels.empty(); }

  Image image(std::size_t id) const;
  std::vector<std::size_t> congealed_ids() const;
  /// Copies the listed instances into a new dataset; ids are renumbered 0..k-1
  /// in the order given.
  Dataset subset(std::span<const std::size_t> ids) const;
  /// Rows `ids` of the label vector; throws if unlabeled.
  std::vector<int> labels_of(std::span<const std::size_t> ids) const;

  static Dataset from_images(std::span<const Image> images, std::vector<int> labels, std::string source);
};

// ---------------------------------------------------------------------------
// IDX files
// ---------------------------------------------------------------------------

class IdxError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, truncated, count_mismatch };
  IdxError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Parses big-endian IDX image (and optional label) files; pixels are scaled by 1/255.
Dataset read_idx(const std::filesystem::path& images_path,
                 const std::optional<std::filesystem::path>& labels_path = std::nullopt);
/// Inverse of read_idx: pixels are written as round(255 * x) clamped to [0, 255].
void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::optional<std::filesystem::path>& labels_path = std::nullopt);

/// Parses an in-memory IDX image payload (used by read_idx).
Dataset parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// n isotropic Gaussian samples spread round-robin over the centres; label = centre index.
Dataset synth_clusters(std::size_t n, const std::vector<std::vector<double>>& centers,
                       const std::vector<double>& sigmas, std::uint64_t seed);

/// Each sample is drawn from its centre's core Gaussian, or with probability
/// tail_fraction from the wider tail Gaussian. Optionally clamped to [0, 1].
struct TailedClusterSpec {
  std::vector<std::vector<double>> centers{{0.35, 0.5}, {0.65, 0.5}};
  std::size_t per_class = 1000;
  double core_sigma = 0.05;
  double tail_sigma = 0.15;
  double tail_fraction = 0.1;
  bool clamp_unit = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Instances alternate over the centres as in synth_clusters.
Dataset synth_tailed_clusters(const TailedClusterSpec& spec);

/// Parameters of the stroke-glyph image generator.
struct GlyphSpec {
  std::size_t side = 16;         // images are side x side
  std::vector<int> classes{0};   // glyph classes 0..9
  std::size_t per_class = 200;
  double max_rotation = 20.0;    // degrees; per-sample magnitudes are heavy tailed
  double max_shift = 2.0;        // pixels
  double scale_jitter = 0.12;
  double thickness_jitter = 0.35;
  double noise = 0.03;
  double outlier_fraction = 0.0; // replaced by random strokes, keeping the label
  std::uint64_t seed = 0;
};

/// Renders anti-aliased polyline glyphs under random similarity transforms.
/// Instances are ordered class by class. Ids of the random-stroke outliers are
/// appended to `outliers` when given.
Dataset synth_glyphs(const GlyphSpec& spec, std::vector<std::size_t>* outliers = nullptr);

/// Swaps a seeded random subset of m instances for their entries in
/// `congealed` (a congeal_set result over the same instances) and flags them.
Dataset replace_with_congealed(const Dataset& class_images, const CongealResult& congealed, std::size_t m,
                               std::uint64_t seed);

/// Congeals `class_images`, then swaps a seeded random subset of m of them for
/// their congealed versions and flags those. Throws std::out_of_range when m
/// exceeds the class size.
Dataset make_congealed_dataset(const Dataset& class_images, std::size_t m, const CongealSpec& spec,
                               std::uint64_t seed, std::vector<AffineParams>* chosen = nullptr);

/// Seeded subsample of at most `limit` instances (order preserved).
Dataset subsample(const Dataset& data, std::size_t limit, std::uint64_t seed);

/// Instances carrying `label`, in original order.
Dataset filter_label(const Dataset& data, int label);

}  // namespace hack
