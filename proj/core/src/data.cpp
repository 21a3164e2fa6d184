#include "hack/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include "hack/random.hpp"

namespace hack {

Image Dataset::image(std::size_t id) const {
  Image img(rows, cols);
  const auto col = features.col(static_cast<Eigen::Index>(id));
  for (std::size_t p = 0; p < img.pixels.size(); ++p) img.pixels[p] = col[static_cast<Eigen::Index>(p)];
  return img;
}

std::vector<std::size_t> Dataset::congealed_ids() const {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < congealed.size(); ++i)
    if (congealed[i]) ids.push_back(i);
  return ids;
}

Dataset Dataset::subset(std::span<const std::size_t> ids) const {
  Dataset out;
  out.rows = rows;
  out.cols = cols;
  out.source = source;
  out.features.resize(features.rows(), static_cast<Eigen::Index>(ids.size()));
  out.congealed.resize(ids.size(), 0);
  if (has_labels()) out.labels.resize(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const std::size_t id = ids[k];
    if (id >= size()) throw std::out_of_range("Dataset::subset: id out of range");
    out.features.col(static_cast<Eigen::Index>(k)) = features.col(static_cast<Eigen::Index>(id));
    if (!congealed.empty()) out.congealed[k] = congealed[id];
    if (has_labels()) out.labels[k] = labels[id];
  }
  return out;
}

std::vector<int> Dataset::labels_of(std::span<const std::size_t> ids) const {
  if (!has_labels()) throw std::invalid_argument("Dataset: instances carry no labels");
  std::vector<int> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(labels.at(id));
  return out;
}

Dataset Dataset::from_images(std::span<const Image> images, std::vector<int> labels, std::string source) {
  Dataset d;
  d.source = std::move(source);
  if (images.empty()) return d;
  d.rows = images.front().rows;
  d.cols = images.front().cols;
  d.features.resize(static_cast<Eigen::Index>(d.rows * d.cols), static_cast<Eigen::Index>(images.size()));
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].rows != d.rows || images[i].cols != d.cols) {
      throw std::invalid_argument("Dataset::from_images: images differ in shape");
    }
    for (std::size_t p = 0; p < images[i].pixels.size(); ++p) {
      d.features(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = images[i].pixels[p];
    }
  }
  d.labels = std::move(labels);
  d.congealed.assign(images.size(), 0);
  return d;
}

// ---------------------------------------------------------------------------
// IDX
// ---------------------------------------------------------------------------

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::io, "cannot open IDX file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IdxError(IdxError::Kind::io, "cannot write IDX file: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

Dataset parse_idx_images(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw IdxError(IdxError::Kind::truncated, "IDX image file: truncated header");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxImageMagic) throw IdxError(IdxError::Kind::bad_magic, "IDX image file: bad magic number");
  if (bytes.size() < 16) throw IdxError(IdxError::Kind::truncated, "IDX image file: truncated header");
  const std::size_t count = read_be32(bytes, 4);
  const std::size_t rows = read_be32(bytes, 8);
  const std::size_t cols = read_be32(bytes, 12);
  const std::size_t payload = count * rows * cols;
  if (bytes.size() - 16 < payload) throw IdxError(IdxError::Kind::truncated, "IDX image file: truncated payload");

  Dataset d;
  d.rows = rows;
  d.cols = cols;
  d.features.resize(static_cast<Eigen::Index>(rows * cols), static_cast<Eigen::Index>(count));
  const std::uint8_t* px = bytes.data() + 16;
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t p = 0; p < rows * cols; ++p)
      d.features(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = px[i * rows * cols + p] / 255.0;
  d.congealed.assign(count, 0);
  d.source = "idx";
  return d;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw IdxError(IdxError::Kind::truncated, "IDX label file: truncated header");
  if (read_be32(bytes, 0) != kIdxLabelMagic) throw IdxError(IdxError::Kind::bad_magic, "IDX label file: bad magic number");
  if (bytes.size() < 8) throw IdxError(IdxError::Kind::truncated, "IDX label file: truncated header");
  const std::size_t count = read_be32(bytes, 4);
  if (bytes.size() - 8 < count) throw IdxError(IdxError::Kind::truncated, "IDX label file: truncated payload");
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

Dataset read_idx(const std::filesystem::path& images_path,
                 const std::optional<std::filesystem::path>& labels_path) {
  Dataset d = parse_idx_images(slurp(images_path));
  d.source = images_path.filename().string();
  if (labels_path) {
    std::vector<int> labels = parse_idx_labels(slurp(*labels_path));
    if (labels.size() != d.size()) {
      throw IdxError(IdxError::Kind::count_mismatch, "IDX: label count " + std::to_string(labels.size()) +
                                                         " differs from image count " + std::to_string(d.size()));
    }
    d.labels = std::move(labels);
  }
  return d;
}

void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::optional<std::filesystem::path>& labels_path) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(16 + data.size() * data.dim());
  put_be32(bytes, kIdxImageMagic);
  put_be32(bytes, static_cast<std::uint32_t>(data.size()));
  put_be32(bytes, static_cast<std::uint32_t>(data.rows));
  put_be32(bytes, static_cast<std::uint32_t>(data.cols));
  for (Eigen::Index i = 0; i < data.features.cols(); ++i) {
    for (Eigen::Index p = 0; p < data.features.rows(); ++p) {
      const double v = std::clamp(std::round(data.features(p, i) * 255.0), 0.0, 255.0);
      bytes.push_back(static_cast<std::uint8_t>(v));
    }
  }
  spit(images_path, bytes);

  if (labels_path) {
    if (!data.has_labels()) throw std::invalid_argument("write_idx: dataset has no labels");
    std::vector<std::uint8_t> lb;
    put_be32(lb, kIdxLabelMagic);
    put_be32(lb, static_cast<std::uint32_t>(data.labels.size()));
    for (int l : data.labels) lb.push_back(static_cast<std::uint8_t>(l));
    spit(*labels_path, lb);
  }
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

Dataset synth_clusters(std::size_t n, const std::vector<std::vector<double>>& centers,
                       const std::vector<double>& sigmas, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synth_clusters: n must be >= 1");
  if (centers.empty() || centers.size() != sigmas.size()) {
    throw std::invalid_argument("synth_clusters: need one sigma per centre");
  }
  const std::size_t dim = centers.front().size();
  for (const auto& c : centers)
    if (c.size() != dim) throw std::invalid_argument("synth_clusters: centres differ in dimension");

  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.rows = 1;
  d.cols = dim;
  d.source = "synth_clusters";
  d.features.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n));
  d.labels.resize(n);
  d.congealed.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % centers.size();
    d.labels[i] = static_cast<int>(k);
    for (std::size_t a = 0; a < dim; ++a) {
      const double z = gauss(rng);
      d.features(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) = centers[k][a] + sigmas[k] * z;
    }
  }
  return d;
}

void TailedClusterSpec::validate() const {
  if (centers.empty()) throw std::invalid_argument("TailedClusterSpec: no centres");
  for (const auto& c : centers)
    if (c.size() != centers.front().size() || c.empty()) throw std::invalid_argument("TailedClusterSpec: centres differ in dimension");
  if (per_class < 1) throw std::invalid_argument("TailedClusterSpec: per_class must be >= 1");
  if (!(core_sigma >= 0.0) || !(tail_sigma >= 0.0)) throw std::invalid_argument("TailedClusterSpec: sigmas must be >= 0");
  if (!(tail_fraction >= 0.0 && tail_fraction <= 1.0)) throw std::invalid_argument("TailedClusterSpec: tail_fraction must be in [0, 1]");
}

Dataset synth_tailed_clusters(const TailedClusterSpec& spec) {
  spec.validate();
  const std::size_t n = spec.per_class * spec.centers.size();
  const std::size_t dim = spec.centers.front().size();
  Rng rng = make_rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.rows = 1;
  d.cols = dim;
  d.source = "synth_tailed_clusters";
  d.features.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n));
  d.labels.resize(n);
  d.congealed.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % spec.centers.size();
    d.labels[i] = static_cast<int>(k);
    const double sigma = uniform01(rng) < spec.tail_fraction ? spec.tail_sigma : spec.core_sigma;
    for (std::size_t a = 0; a < dim; ++a) {
      double v = spec.centers[k][a] + sigma * gauss(rng);
      if (spec.clamp_unit) v = std::clamp(v, 0.0, 1.0);
      d.features(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return d;
}

namespace {

using Point = std::array<double, 2>;
using Stroke = std::vector<Point>;

std::vector<Point> ellipse(double cx, double cy, double rx, double ry, int segments) {
  std::vector<Point> pts;
  for (int s = 0; s <= segments; ++s) {
    const double t = 2.0 * std::numbers::pi * s / segments;
    pts.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return pts;
}

// Digit-like strokes in a y-up [-1, 1] box.
std::vector<Stroke> glyph_strokes(int cls) {
  switch (cls) {
    case 0: return {ellipse(0.0, 0.0, 0.5, 0.85, 16)};
    case 1: return {{{-0.25, 0.6}, {0.05, 0.85}, {0.05, -0.85}}};
    case 2: return {{{-0.5, 0.5}, {-0.2, 0.82}, {0.3, 0.82}, {0.5, 0.5}, {0.4, 0.2}, {-0.5, -0.8}, {0.55, -0.8}}};
    case 3: return {{{-0.5, 0.7}, {0.0, 0.85}, {0.45, 0.55}, {0.1, 0.05}, {0.5, -0.4}, {0.05, -0.85}, {-0.5, -0.7}}};
    case 4: return {{{0.3, -0.85}, {0.3, 0.85}, {-0.5, -0.2}, {0.55, -0.2}}};
    case 5: return {{{0.5, 0.8}, {-0.4, 0.8}, {-0.45, 0.1}, {0.2, 0.15}, {0.5, -0.3}, {0.2, -0.8}, {-0.5, -0.7}}};
    case 6: return {{{0.4, 0.8}, {-0.3, 0.3}, {-0.5, -0.4}, {-0.1, -0.85}, {0.4, -0.5}, {0.2, -0.05}, {-0.45, -0.2}}};
    case 7: return {{{-0.5, 0.8}, {0.5, 0.8}, {-0.1, -0.85}}};
    case 8: return {ellipse(0.0, 0.43, 0.36, 0.38, 12), ellipse(0.0, -0.42, 0.42, 0.42, 12)};
    case 9: return {ellipse(0.0, 0.4, 0.38, 0.4, 12), {{0.38, 0.4}, {0.2, -0.85}}};
    default: throw std::invalid_argument("synth_glyphs: glyph classes are 0..9");
  }
}

double segment_distance(const Point& p, const Point& a, const Point& b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double wx = p[0] - a[0], wy = p[1] - a[1];
  const double len2 = vx * vx + vy * vy;
  const double t = len2 > 0.0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
  const double dx = wx - t * vx, dy = wy - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

struct GlyphPose {
  double rot = 0.0;      // radians
  double scale = 1.0;
  double aspect = 1.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;
  double half_width = 0.14;
};

Image render(const std::vector<Stroke>& strokes, const GlyphPose& pose, std::size_t side) {
  Image img(side, side);
  const double c = (static_cast<double>(side) - 1.0) / 2.0;
  const double box = 0.34 * static_cast<double>(side);  // glyph half-extent in pixels
  const double cs = std::cos(pose.rot), sn = std::sin(pose.rot);
  const double soft = 0.5 / box;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t col = 0; col < side; ++col) {
      const double x = (static_cast<double>(col) - c - pose.shift_x) / box;
      const double y = -(static_cast<double>(r) - c - pose.shift_y) / box;
      // Undo rotation, then anisotropic scale.
      const double ux = (cs * x + sn * y) / (pose.scale * pose.aspect);
      const double uy = (-sn * x + cs * y) / (pose.scale / pose.aspect);
      double best = 1e9;
      for (const auto& s : strokes)
        for (std::size_t k = 0; k + 1 < s.size(); ++k) best = std::min(best, segment_distance({ux, uy}, s[k], s[k + 1]));
      img.at(r, col) = std::clamp((pose.half_width - best) / soft + 0.5, 0.0, 1.0);
    }
  }
  return img;
}

double clipped_normal(Rng& rng, double sd) {
  std::normal_distribution<double> g(0.0, sd);
  return std::clamp(g(rng), -1.0, 1.0);
}

}  // namespace

Dataset synth_glyphs(const GlyphSpec& spec, std::vector<std::size_t>* outliers) {
  if (spec.side < 8) throw std::invalid_argument("synth_glyphs: side must be >= 8");
  Rng rng = make_rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Image> images;
  std::vector<int> labels;
  images.reserve(spec.classes.size() * spec.per_class);
  for (int cls : spec.classes) {
    const auto strokes = glyph_strokes(cls);
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      GlyphPose pose;
      pose.rot = spec.max_rotation * clipped_normal(rng, 0.5) * std::numbers::pi / 180.0;
      pose.scale = 1.0 + spec.scale_jitter * clipped_normal(rng, 0.5);
      pose.aspect = 1.0 + 0.5 * spec.scale_jitter * clipped_normal(rng, 0.5);
      pose.shift_x = spec.max_shift * clipped_normal(rng, 0.5);
      pose.shift_y = spec.max_shift * clipped_normal(rng, 0.5);
      pose.half_width = 0.14 * (1.0 + spec.thickness_jitter * clipped_normal(rng, 0.5));
      const bool outlier = uniform01(rng) < spec.outlier_fraction;
      std::vector<Stroke> drawn = strokes;
      if (outlier) {
        if (outliers) outliers->push_back(images.size());
        drawn.clear();
        for (int s = 0; s < 3; ++s) {
          drawn.push_back({{2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0},
                           {2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0}});
        }
      }
      Image img = render(drawn, pose, spec.side);
      for (double& v : img.pixels) v = std::clamp(v + spec.noise * noise(rng), 0.0, 1.0);
      images.push_back(std::move(img));
      labels.push_back(cls);
    }
  }
  return Dataset::from_images(images, std::move(labels), "synth_glyphs");
}

Dataset replace_with_congealed(const Dataset& class_images, const CongealResult& congealed, std::size_t m,
                               std::uint64_t seed) {
  const std::size_t n = class_images.size();
  if (m > n) throw std::out_of_range("replace_with_congealed: m exceeds the class size");
  if (congealed.images.size() != n) throw std::invalid_argument("replace_with_congealed: congealed set size differs");
  Dataset out = class_images;
  out.congealed.assign(n, 0);
  out.source = class_images.source + "+congealed";
  if (m == 0) return out;

  Rng rng = make_rng(seed);
  std::vector<std::size_t> perm = random_permutation(n, rng);
  perm.resize(m);
  for (std::size_t id : perm) {
    const auto& px = congealed.images[id].pixels;
    for (std::size_t p = 0; p < px.size(); ++p) out.features(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(id)) = px[p];
    out.congealed[id] = 1;
  }
  return out;
}

Dataset make_congealed_dataset(const Dataset& class_images, std::size_t m, const CongealSpec& spec,
                               std::uint64_t seed, std::vector<AffineParams>* chosen) {
  const std::size_t n = class_images.size();
  if (m > n) throw std::out_of_range("make_congealed_dataset: m exceeds the class size");
  if (m == 0) {
    Dataset out = class_images;
    out.congealed.assign(n, 0);
    out.source = class_images.source + "+congealed";
    return out;
  }

  std::vector<Image> images;
  images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) images.push_back(class_images.image(i));
  const CongealResult congealed = congeal_set(images, spec);
  if (chosen) *chosen = congealed.params;
  return replace_with_congealed(class_images, congealed, m, seed);
}

Dataset subsample(const Dataset& data, std::size_t limit, std::uint64_t seed) {
  if (data.size() <= limit) return data;
  Rng rng = make_rng(seed);
  std::vector<std::size_t> perm = random_permutation(data.size(), rng);
  perm.resize(limit);
  std::sort(perm.begin(), perm.end());
  return data.subset(perm);
}

Dataset filter_label(const Dataset& data, int label) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < data.labels.size(); ++i)
    if (data.labels[i] == label) ids.push_back(i);
  return data.subset(ids);
}

}  // namespace hack
