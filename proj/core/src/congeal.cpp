#include "hack/congeal.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hack/random.hpp"

namespace hack {

bool AffineParams::in_search_box() const {
  return std::abs(tx) <= kMaxShift && std::abs(ty) <= kMaxShift && std::abs(rot) <= kMaxRotation &&
         scale >= kMinScale - 1e-12 && scale <= kMaxScale + 1e-12;
}

namespace {

double sample_bilinear(const Image& img, double r, double c) {
  const double r0f = std::floor(r);
  const double c0f = std::floor(c);
  const double fr = r - r0f;
  const double fc = c - c0f;
  const auto r0 = static_cast<long>(r0f);
  const auto c0 = static_cast<long>(c0f);
  auto px = [&](long rr, long cc) -> double {
    if (rr < 0 || cc < 0 || rr >= static_cast<long>(img.rows) || cc >= static_cast<long>(img.cols)) return 0.0;
    return img.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
  };
  double v = (1.0 - fr) * (1.0 - fc) * px(r0, c0);
  if (fc != 0.0) v += (1.0 - fr) * fc * px(r0, c0 + 1);
  if (fr != 0.0) v += fr * (1.0 - fc) * px(r0 + 1, c0);
  if (fr != 0.0 && fc != 0.0) v += fr * fc * px(r0 + 1, c0 + 1);
  return v;
}

// Warps `src` by rotation/scale about its centre into a canvas padded by `pad`
// pixels on every side; integer translations are then exact shifts of it.
Image warp_padded(const Image& src, double rot_deg, double scale, int pad) {
  const std::size_t rows = src.rows + 2 * static_cast<std::size_t>(pad);
  const std::size_t cols = src.cols + 2 * static_cast<std::size_t>(pad);
  Image out(rows, cols);
  const double cy = (static_cast<double>(src.rows) - 1.0) / 2.0;
  const double cx = (static_cast<double>(src.cols) - 1.0) / 2.0;
  const double th = rot_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(th);
  const double sn = std::sin(th);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      // Offsets in a y-up frame; apply R(-th) / scale.
      const double x = static_cast<double>(c) - static_cast<double>(pad) - cx;
      const double y = -(static_cast<double>(r) - static_cast<double>(pad) - cy);
      const double sx = (cs * x + sn * y) / scale;
      const double sy = (-sn * x + cs * y) / scale;
      out.at(r, c) = sample_bilinear(src, cy - sy, cx + sx);
    }
  }
  return out;
}

// The tx/ty-shifted crop of a padded warp.
void crop_shifted(const Image& padded, int pad, int tx, int ty, Image& out) {
  for (std::size_t r = 0; r < out.rows; ++r) {
    const auto pr = static_cast<std::size_t>(static_cast<long>(r) + pad - ty);
    const double* row = &padded.pixels[pr * padded.cols];
    for (std::size_t c = 0; c < out.cols; ++c) {
      out.at(r, c) = row[static_cast<long>(c) + pad - tx];
    }
  }
}

}  // namespace

Image affine_transform(const Image& image, const AffineParams& p) {
  if (!p.in_search_box()) throw std::invalid_argument("affine_transform: parameters outside the search box");
  if (p.is_identity()) return image;
  const int pad = AffineParams::kMaxShift;
  const Image padded = (p.rot == 0.0 && p.scale == 1.0) ? [&] {
    Image q(image.rows + 2 * pad, image.cols + 2 * pad);
    for (std::size_t r = 0; r < image.rows; ++r)
      for (std::size_t c = 0; c < image.cols; ++c) q.at(r + pad, c + pad) = image.at(r, c);
    return q;
  }()
                                                        : warp_padded(image, p.rot, p.scale, pad);
  Image out(image.rows, image.cols);
  crop_shifted(padded, pad, p.tx, p.ty, out);
  return out;
}

void CongealSpec::validate() const {
  if (iterations < 1) throw std::invalid_argument("CongealSpec: iterations must be >= 1");
  if (max_shift < 0 || max_shift > AffineParams::kMaxShift) {
    throw std::invalid_argument("CongealSpec: max_shift must lie in [0, 3]");
  }
  if (rotations.empty() || scales.empty()) throw std::invalid_argument("CongealSpec: empty search grid");
  for (double r : rotations) {
    if (std::abs(r) > AffineParams::kMaxRotation) throw std::invalid_argument("CongealSpec: rotation outside +-12 degrees");
  }
  for (double s : scales) {
    if (s < AffineParams::kMinScale - 1e-12 || s > AffineParams::kMaxScale + 1e-12) {
      throw std::invalid_argument("CongealSpec: scale outside [0.88, 1.12]");
    }
  }
}

double stack_variance(std::span<const Image> images) {
  if (images.empty()) return 0.0;
  const std::size_t px = images.front().pixels.size();
  const auto n = static_cast<double>(images.size());
  double total = 0.0;
  for (std::size_t p = 0; p < px; ++p) {
    double s1 = 0.0;
    for (const auto& img : images) s1 += img.pixels[p];
    const double mean = s1 / n;
    double s2 = 0.0;
    for (const auto& img : images) s2 += (img.pixels[p] - mean) * (img.pixels[p] - mean);
    total += s2 / n;
  }
  return total;
}

double mean_distance_to_mean(std::span<const Image> images) {
  if (images.empty()) return 0.0;
  const std::size_t px = images.front().pixels.size();
  std::vector<double> mean(px, 0.0);
  for (const auto& img : images)
    for (std::size_t p = 0; p < px; ++p) mean[p] += img.pixels[p];
  for (double& m : mean) m /= static_cast<double>(images.size());
  double total = 0.0;
  for (const auto& img : images) {
    double sq = 0.0;
    for (std::size_t p = 0; p < px; ++p) sq += (img.pixels[p] - mean[p]) * (img.pixels[p] - mean[p]);
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(images.size());
}

CongealResult congeal_set(std::span<const Image> images, const CongealSpec& spec) {
  spec.validate();
  if (images.size() < 2) throw std::invalid_argument("congeal_set: need at least two images");
  const std::size_t rows = images.front().rows;
  const std::size_t cols = images.front().cols;
  for (const auto& img : images) {
    if (img.rows != rows || img.cols != cols) throw std::invalid_argument("congeal_set: images differ in shape");
  }

  const std::size_t n = images.size();
  const std::size_t px = rows * cols;
  const int pad = spec.max_shift;
  CongealResult res;
  res.images.assign(images.begin(), images.end());
  res.params.assign(n, AffineParams{});
  res.objective.push_back(stack_variance(res.images));

  // Running pixel sums of the current stack.
  std::vector<double> sum(px, 0.0);
  for (const auto& img : res.images)
    for (std::size_t p = 0; p < px; ++p) sum[p] += img.pixels[p];

  // Replacing image i by y changes the objective by a constant plus
  // (1/N^2) * sum_p y_p ((N - 1) y_p - 2 A_p), where A = sum - x_i.
  const auto nn = static_cast<double>(n);
  std::vector<double> others(px);
  auto score = [&](const Image& y) {
    double s = 0.0;
    for (std::size_t p = 0; p < px; ++p) s += y.pixels[p] * ((nn - 1.0) * y.pixels[p] - 2.0 * others[p]);
    return s;
  };

  Rng rng = make_rng(spec.seed);
  Image candidate(rows, cols);
  for (std::size_t sweep = 0; sweep < spec.iterations; ++sweep) {
    const std::vector<std::size_t> order = random_permutation(n, rng);
    for (std::size_t i : order) {
      for (std::size_t p = 0; p < px; ++p) others[p] = sum[p] - res.images[i].pixels[p];
      double best = score(res.images[i]);
      AffineParams best_params = res.params[i];
      Image best_image = res.images[i];
      const double tol = 1e-12 * (1.0 + std::abs(best));
      for (double rot : spec.rotations) {
        for (double sc : spec.scales) {
          const Image padded = warp_padded(images[i], rot, sc, pad);
          for (int ty = -spec.max_shift; ty <= spec.max_shift; ++ty) {
            for (int tx = -spec.max_shift; tx <= spec.max_shift; ++tx) {
              crop_shifted(padded, pad, tx, ty, candidate);
              const double s = score(candidate);
              if (s < best - tol) {
                best = s;
                best_params = AffineParams{tx, ty, rot, sc};
                best_image = candidate;
              }
            }
          }
        }
      }
      if (!(best_params == res.params[i])) {
        for (std::size_t p = 0; p < px; ++p) sum[p] += best_image.pixels[p] - res.images[i].pixels[p];
        res.images[i] = best_params.is_identity() ? images[i] : std::move(best_image);
        res.params[i] = best_params;
      }
    }
    res.objective.push_back(stack_variance(res.images));
  }
  return res;
}

}  // namespace hack
