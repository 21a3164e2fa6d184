#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hack/assignment.hpp"
#include "hack/congeal.hpp"
#include "hack/data.hpp"
#include "hack/density.hpp"
#include "hack/nn.hpp"
#include "hack/packing.hpp"

namespace hack::io {

inline constexpr int kFormatVersion = 1;

/// Malformed or unreadable persisted file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes text exactly; parent directories are created.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// "%.17g" rendering used by every CSV writer.
std::string format_double(double x);

std::string particles_json(const ParticleSet& particles);
void write_particles(const std::filesystem::path& path, const ParticleSet& particles);
ParticleSet read_particles(const std::filesystem::path& path);

void write_assignment(const std::filesystem::path& path, const AssignmentState& state, std::size_t epoch);
AssignmentState read_assignment(const std::filesystem::path& path);

std::string checkpoint_json(const EncoderParams& params);
void write_checkpoint(const std::filesystem::path& path, const EncoderParams& params);
EncoderParams read_checkpoint(const std::filesystem::path& path);

/// epoch,loss with epochs counted from 1.
void write_loss_csv(const std::filesystem::path& path, std::span<const double> losses);

struct FeatureTable {
  std::vector<std::size_t> ids;
  std::vector<BallPoint> points;
  std::vector<std::uint8_t> congealed;

  std::size_t size() const { return ids.size(); }
};

/// instance_id,x,y,norm,angle,is_congealed
void write_snapshot_csv(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable read_snapshot_csv(const std::filesystem::path& path);

/// bin_center,mean_density,variance,count
void write_density_csv(const std::filesystem::path& path, std::span<const ProfileBin> bins);

/// id,norm,angle,rank for the listed ids (rank starts at 1).
void write_selection_csv(const std::filesystem::path& path, const FeatureTable& table,
                         std::span<const std::size_t> rows_in_order);

struct AccuracyRow {
  std::string setting;
  double clean_acc = 0.0;
  double adv_acc = 0.0;
};
/// setting,clean_acc,adv_acc
void write_accuracy_csv(const std::filesystem::path& path, std::span<const AccuracyRow> rows);

/// id,tx,ty,rotation,scale
void write_congeal_params_csv(const std::filesystem::path& path, std::span<const std::size_t> ids,
                              std::span<const AffineParams> params);

/// Scatter of ball points inside the unit circle; flagged points are red, the
/// rest cyan.
std::string scatter_svg(std::span<const BallPoint> points, std::span<const std::uint8_t> flagged);
void write_scatter_svg(const std::filesystem::path& path, std::span<const BallPoint> points,
                       std::span<const std::uint8_t> flagged);

/// Dataset description file plus its payload. Image data goes to IDX files
/// (quantized to 1/255), vector data to a CSV next to the description.
/// Returns every file written.
std::vector<std::filesystem::path> write_dataset(const std::filesystem::path& json_path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& json_path);

}  // namespace hack::io
