#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hack {

/// Row-major grayscale image with intensities in [0, 1].
struct Image {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), pixels(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
  bool operator==(const Image&) const = default;
};

/// Similarity transform about the image centre: translate (columns, rows),
/// rotate counter-clockwise by `rot` degrees, scale isotropically.
struct AffineParams {
  int tx = 0;
  int ty = 0;
  double rot = 0.0;
  double scale = 1.0;

  static constexpr int kMaxShift = 3;
  static constexpr double kMaxRotation = 12.0;
  static constexpr double kMinScale = 0.88;
  static constexpr double kMaxScale = 1.12;

  bool is_identity() const { return tx == 0 && ty == 0 && rot == 0.0 && scale == 1.0; }
  bool in_search_box() const;
  bool operator==(const AffineParams&) const = default;
};

/// Inverse warp with bilinear sampling and zero padding. Identity parameters
/// return the input unchanged.
Image affine_transform(const Image& image, const AffineParams& p);

struct CongealSpec {
  std::size_t iterations = 3;
  int max_shift = 3;                                        // tx, ty in [-max_shift, max_shift]
  std::vector<double> rotations{-12.0, -6.0, 0.0, 6.0, 12.0};  // degrees
  std::vector<double> scales{0.88, 0.94, 1.0, 1.06, 1.12};
  std::uint64_t seed = 0;  // visiting order within a sweep

  void validate() const;
};

/// Sum over pixels of the variance across the stack.
double stack_variance(std::span<const Image> images);

struct CongealResult {
  std::vector<Image> images;
  std::vector<AffineParams> params;
  std::vector<double> objective;  // before the first sweep, then after each sweep
};

/// Coordinate descent: each image in turn takes the grid transform (applied to
/// its original) that minimises the stack variance given all other images.
CongealResult congeal_set(std::span<const Image> images, const CongealSpec& spec);

/// Mean Euclidean distance of the images to their pixel-wise mean.
double mean_distance_to_mean(std::span<const Image> images);

}  // namespace hack
