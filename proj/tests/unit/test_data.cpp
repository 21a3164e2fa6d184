#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <gtest/gtest.h>

#include "hack/data.hpp"

using namespace hack;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> fixture_bytes() {
  return {0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02,
          0, 64, 128, 255, 1, 2, 3, 254};
}

std::vector<std::uint8_t> label_bytes(std::uint32_t count) {
  std::vector<std::uint8_t> b{0x00, 0x00, 0x08, 0x01, 0, 0, 0, static_cast<std::uint8_t>(count)};
  for (std::uint32_t i = 0; i < count; ++i) b.push_back(static_cast<std::uint8_t>(i % 10));
  return b;
}

fs::path tmp_dir(const std::string& name) {
  const fs::path dir = fs::path(HACK_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void dump(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Dataset small_class(std::size_t n, std::uint64_t seed) {
  GlyphSpec gs;
  gs.classes = {2};
  gs.per_class = n;
  gs.seed = seed;
  return synth_glyphs(gs);
}

}  // namespace

TEST(Idx, ParsesHeaderExample) {
  const auto bytes = fixture_bytes();
  const Dataset d = parse_idx_images(bytes);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.rows, 2u);
  EXPECT_EQ(d.cols, 2u);
  EXPECT_EQ(d.dim(), 4u);
  EXPECT_EQ(d.features(3, 0), 1.0);
  EXPECT_EQ(d.features(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(d.features(1, 0), 64.0 / 255.0);
  EXPECT_DOUBLE_EQ(d.image(1).at(1, 1), 254.0 / 255.0);
  EXPECT_FALSE(d.has_labels());
}

TEST(Idx, ErrorKinds) {
  auto bad = fixture_bytes();
  bad[3] = 0x01;
  try {
    parse_idx_images(bad);
    FAIL();
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxError::Kind::bad_magic);
  }
  auto cut = fixture_bytes();
  cut.pop_back();
  try {
    parse_idx_images(cut);
    FAIL();
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxError::Kind::truncated);
  }

  const fs::path dir = tmp_dir("idx_errors");
  dump(dir / "img.idx", fixture_bytes());
  dump(dir / "lab.idx", label_bytes(3));
  try {
    read_idx(dir / "img.idx", dir / "lab.idx");
    FAIL();
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxError::Kind::count_mismatch);
  }
  try {
    read_idx(dir / "missing.idx");
    FAIL();
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxError::Kind::io);
  }
}

TEST(Idx, RoundTripIsByteExact) {
  const fs::path dir = tmp_dir("idx_roundtrip");
  dump(dir / "img.idx", fixture_bytes());
  dump(dir / "lab.idx", label_bytes(2));
  const Dataset d = read_idx(dir / "img.idx", dir / "lab.idx");
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1}));
  write_idx(d, dir / "img2.idx", dir / "lab2.idx");
  EXPECT_EQ(slurp(dir / "img2.idx"), fixture_bytes());
  EXPECT_EQ(slurp(dir / "lab2.idx"), label_bytes(2));
}

TEST(Idx, EveryByteValueSurvives) {
  std::vector<std::uint8_t> bytes{0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 16, 0, 0, 0, 16};
  for (int v = 0; v < 256; ++v) bytes.push_back(static_cast<std::uint8_t>(v));
  const fs::path dir = tmp_dir("idx_bytes");
  dump(dir / "a.idx", bytes);
  write_idx(read_idx(dir / "a.idx"), dir / "b.idx");
  EXPECT_EQ(slurp(dir / "b.idx"), bytes);
}

TEST(SynthClusters, ZeroSigmaReproducesCentres) {
  const Dataset d = synth_clusters(10, {{1.0, 2.0}, {-3.0, 0.5}}, {0.0, 0.0}, 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int l = d.labels[i];
    EXPECT_EQ(l, static_cast<int>(i % 2));
    EXPECT_EQ(d.features(0, static_cast<Eigen::Index>(i)), l == 0 ? 1.0 : -3.0);
    EXPECT_EQ(d.features(1, static_cast<Eigen::Index>(i)), l == 0 ? 2.0 : 0.5);
  }
}

TEST(SynthClusters, SeededAndBitIdentical) {
  const Dataset a = synth_clusters(100, {{0.0, 0.0}}, {1.0}, 5);
  const Dataset b = synth_clusters(100, {{0.0, 0.0}}, {1.0}, 5);
  const Dataset c = synth_clusters(100, {{0.0, 0.0}}, {1.0}, 6);
  EXPECT_EQ(a.features, b.features);
  EXPECT_NE(a.features, c.features);
}

TEST(SynthClusters, SampleMeansWithinCltBound) {
  const double sigma = 0.7;
  const Dataset d = synth_clusters(1000, {{2.0, -1.0}, {-4.0, 3.0}}, {sigma, sigma}, 7);
  const std::vector<std::vector<double>> centres{{2.0, -1.0}, {-4.0, 3.0}};
  for (int cls = 0; cls < 2; ++cls) {
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    int count = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d.labels[i] == cls) {
        sum += d.features.col(static_cast<Eigen::Index>(i));
        ++count;
      }
    ASSERT_EQ(count, 500);
    const double bound = 5.0 * sigma / std::sqrt(count);
    EXPECT_LE(std::abs(sum(0) / count - centres[cls][0]), bound);
    EXPECT_LE(std::abs(sum(1) / count - centres[cls][1]), bound);
  }
}

TEST(SynthClusters, Errors) {
  EXPECT_THROW(synth_clusters(0, {{0.0}}, {1.0}, 0), std::invalid_argument);
  EXPECT_THROW(synth_clusters(5, {{0.0}, {1.0}}, {1.0}, 0), std::invalid_argument);
  EXPECT_THROW(synth_clusters(5, {{0.0}, {1.0, 2.0}}, {1.0, 1.0}, 0), std::invalid_argument);
}

TEST(SynthTailed, ShapeLabelsAndRange) {
  TailedClusterSpec spec;
  spec.per_class = 200;
  spec.seed = 3;
  const Dataset d = synth_tailed_clusters(spec);
  ASSERT_EQ(d.size(), 400u);
  EXPECT_EQ(d.dim(), 2u);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d.labels[i], static_cast<int>(i % 2));
  EXPECT_GE(d.features.minCoeff(), 0.0);
  EXPECT_LE(d.features.maxCoeff(), 1.0);
  const Dataset again = synth_tailed_clusters(spec);
  EXPECT_EQ(again.features, d.features);
}

TEST(SynthTailed, TailFractionControlsSpread) {
  TailedClusterSpec spec;
  spec.per_class = 2000;
  spec.tail_fraction = 0.0;
  spec.clamp_unit = false;
  const Dataset core = synth_tailed_clusters(spec);
  spec.tail_fraction = 1.0;
  const Dataset tail = synth_tailed_clusters(spec);
  auto spread = [](const Dataset& d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) acc += std::abs(d.features(1, static_cast<Eigen::Index>(i)) - 0.5);
    return acc / static_cast<double>(d.size());
  };
  // mean absolute deviation of a normal is sigma * sqrt(2 / pi)
  EXPECT_NEAR(spread(core), 0.05 * std::sqrt(2.0 / M_PI), 0.005);
  EXPECT_NEAR(spread(tail), 0.15 * std::sqrt(2.0 / M_PI), 0.01);
  spec.tail_fraction = 1.5;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(SynthGlyphs, ShapeOrderAndDeterminism) {
  GlyphSpec gs;
  gs.classes = {1, 7};
  gs.per_class = 5;
  gs.outlier_fraction = 0.4;
  std::vector<std::size_t> outliers;
  const Dataset d = synth_glyphs(gs, &outliers);
  EXPECT_EQ(d.size(), 10u);
  EXPECT_EQ(d.dim(), 256u);
  EXPECT_EQ(d.labels, (std::vector<int>{1, 1, 1, 1, 1, 7, 7, 7, 7, 7}));
  EXPECT_FALSE(outliers.empty());
  for (auto id : outliers) EXPECT_LT(id, 10u);
  EXPECT_GE(d.features.minCoeff(), 0.0);
  EXPECT_LE(d.features.maxCoeff(), 1.0);
  EXPECT_EQ(synth_glyphs(gs).features, d.features);
  gs.classes = {10};
  EXPECT_THROW(synth_glyphs(gs), std::invalid_argument);
}

TEST(CongealedDataset, ZeroReplacementsIsTheOriginal) {
  const Dataset cls = small_class(12, 1);
  const Dataset d = make_congealed_dataset(cls, 0, CongealSpec{}, 3);
  EXPECT_EQ(d.features, cls.features);
  EXPECT_TRUE(d.congealed_ids().empty());
}

TEST(CongealedDataset, FullReplacementFlagsEverything) {
  const Dataset cls = small_class(12, 1);
  std::vector<AffineParams> chosen;
  const Dataset d = make_congealed_dataset(cls, 12, CongealSpec{}, 3, &chosen);
  EXPECT_EQ(d.congealed_ids().size(), 12u);
  EXPECT_EQ(chosen.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(d.image(i), affine_transform(cls.image(i), chosen[i]));
  EXPECT_THROW(make_congealed_dataset(cls, 13, CongealSpec{}, 3), std::out_of_range);
}

TEST(CongealedDataset, ExactlyMFlaggedOnALargeClass) {
  const Dataset cls = small_class(2000, 2);
  CongealResult fake;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    Image img = cls.image(i);
    for (auto& p : img.pixels) p = 1.0 - p;
    fake.images.push_back(img);
    fake.params.push_back(AffineParams{});
  }
  const Dataset d = replace_with_congealed(cls, fake, 500, 9);
  const auto ids = d.congealed_ids();
  ASSERT_EQ(ids.size(), 500u);
  for (std::size_t i = 0; i < cls.size(); ++i) {
    const bool flagged = d.congealed[i] != 0;
    EXPECT_EQ(d.image(i), flagged ? fake.images[i] : cls.image(i));
  }
  EXPECT_EQ(d.labels, cls.labels);
  EXPECT_EQ(replace_with_congealed(cls, fake, 500, 9).congealed, d.congealed);
  EXPECT_NE(replace_with_congealed(cls, fake, 500, 10).congealed, d.congealed);
}

TEST(DatasetOps, SubsetFilterAndSubsample) {
  const Dataset d = synth_clusters(20, {{0.0}, {5.0}}, {0.1, 0.1}, 1);
  const std::vector<std::size_t> ids{5, 0, 7};
  const Dataset s = d.subset(ids);
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.features(0, 0), d.features(0, 5));
  EXPECT_EQ(s.labels, d.labels_of(ids));
  const std::vector<std::size_t> bad_ids{20};
  EXPECT_THROW(d.subset(bad_ids), std::out_of_range);

  const Dataset ones = filter_label(d, 1);
  EXPECT_EQ(ones.size(), 10u);
  for (int l : ones.labels) EXPECT_EQ(l, 1);

  const Dataset sub = subsample(d, 8, 4);
  EXPECT_EQ(sub.size(), 8u);
  EXPECT_EQ(subsample(d, 8, 4).features, sub.features);
  EXPECT_EQ(subsample(d, 100, 4).size(), 20u);
}
