#include "hack/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace hack::io {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

json parse_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void check_version(const json& j, const fs::path& path) {
  if (!j.is_object() || !j.contains("version")) throw FormatError("'" + path.string() + "' has no version field");
  if (j.at("version").get<int>() != kFormatVersion) {
    throw FormatError("'" + path.string() + "' has unsupported version " + j.at("version").dump());
  }
}

template <class F>
auto guarded(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError("'" + path.string() + "' is malformed: " + e.what());
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("'" + path.string() + "': bad number '" + s + "'");
  }
}

std::size_t to_index(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw FormatError("'" + path.string() + "': bad integer '" + s + "'");
  }
}

json layers_json(const EncoderParams& params) {
  json layers = json::array();
  for (const auto& l : params.layers) {
    json w = json::array();
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) row.push_back(l.weight(r, c));
      w.push_back(std::move(row));
    }
    json b = json::array();
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) b.push_back(l.bias(r));
    layers.push_back({{"W", std::move(w)}, {"b", std::move(b)}});
  }
  return layers;
}

}  // namespace

// --- particles -------------------------------------------------------------

std::string particles_json(const ParticleSet& p) {
  json j;
  j["version"] = kFormatVersion;
  j["spec"] = {{"n", p.spec.n},         {"r", p.spec.r},   {"k", p.spec.k}, {"margin", p.spec.margin},
               {"lr", p.spec.lr},       {"epochs", p.spec.epochs}, {"seed", p.spec.seed}};
  j["ball"] = {{"c", p.ball.c}, {"s", p.ball.s}};
  j["r_n"] = p.r_n;
  j["initial_repulsion"] = p.initial_repulsion;
  j["final_repulsion"] = p.final_repulsion;
  j["final_loss"] = p.final_loss;
  j["status"] = to_string(p.status);
  json pos = json::array();
  for (const auto& q : p.positions) pos.push_back({q.x(), q.y()});
  j["positions"] = std::move(pos);
  j["loss_history"] = p.loss_history;
  return j.dump(1) + "\n";
}

void write_particles(const fs::path& path, const ParticleSet& particles) {
  write_text(path, particles_json(particles));
}

ParticleSet read_particles(const fs::path& path) {
  const json j = parse_json(path);
  check_version(j, path);
  return guarded(path, [&] {
    ParticleSet p;
    const json& s = j.at("spec");
    p.spec.n = s.at("n").get<std::size_t>();
    p.spec.r = s.at("r").get<double>();
    p.spec.k = s.at("k").get<double>();
    p.spec.margin = s.at("margin").get<double>();
    p.spec.lr = s.at("lr").get<double>();
    p.spec.epochs = s.at("epochs").get<std::size_t>();
    p.spec.seed = s.at("seed").get<std::uint64_t>();
    p.ball.c = j.at("ball").at("c").get<double>();
    p.ball.s = j.at("ball").at("s").get<double>();
    p.r_n = j.at("r_n").get<double>();
    p.initial_repulsion = j.value("initial_repulsion", 0.0);
    p.final_repulsion = j.value("final_repulsion", 0.0);
    p.final_loss = j.at("final_loss").get<double>();
    p.status = j.value("status", std::string("converged")) == "converged" ? PackStatus::converged
                                                                          : PackStatus::not_converged;
    for (const auto& q : j.at("positions")) {
      p.positions.push_back(BallPoint::checked(q.at(0).get<double>(), q.at(1).get<double>()));
    }
    if (j.contains("loss_history")) p.loss_history = j.at("loss_history").get<std::vector<double>>();
    if (p.positions.size() != p.spec.n) throw FormatError("'" + path.string() + "': position count differs from spec.n");
    return p;
  });
}

// --- assignment ------------------------------------------------------------

void write_assignment(const fs::path& path, const AssignmentState& state, std::size_t epoch) {
  json j;
  j["version"] = kFormatVersion;
  j["epoch"] = epoch;
  j["particle_of"] = state.particle_of;
  write_text(path, j.dump() + "\n");
}

AssignmentState read_assignment(const fs::path& path) {
  const json j = parse_json(path);
  check_version(j, path);
  AssignmentState s = guarded(path, [&] { return AssignmentState{j.at("particle_of").get<std::vector<std::size_t>>()}; });
  if (!s.is_bijection()) throw FormatError("'" + path.string() + "' is not a bijection");
  return s;
}

// --- checkpoint ------------------------------------------------------------

std::string checkpoint_json(const EncoderParams& params) {
  json j;
  j["version"] = kFormatVersion;
  j["spec"] = {{"layer_sizes", params.spec.layer_sizes}, {"seed", params.spec.seed}};
  j["layers"] = layers_json(params);
  return j.dump() + "\n";
}

void write_checkpoint(const fs::path& path, const EncoderParams& params) {
  write_text(path, checkpoint_json(params));
}

EncoderParams read_checkpoint(const fs::path& path) {
  const json j = parse_json(path);
  check_version(j, path);
  return guarded(path, [&] {
    MlpSpec spec;
    spec.layer_sizes = j.at("spec").at("layer_sizes").get<std::vector<std::size_t>>();
    spec.seed = j.at("spec").at("seed").get<std::uint64_t>();
    EncoderParams p = EncoderParams::zeros(spec);
    const json& layers = j.at("layers");
    if (layers.size() != p.layers.size()) throw FormatError("'" + path.string() + "': layer count mismatch");
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      auto& L = p.layers[l];
      const json& w = layers[l].at("W");
      const json& b = layers[l].at("b");
      if (w.size() != static_cast<std::size_t>(L.weight.rows()) || b.size() != static_cast<std::size_t>(L.bias.size())) {
        throw FormatError("'" + path.string() + "': layer shape mismatch");
      }
      for (Eigen::Index r = 0; r < L.weight.rows(); ++r) {
        const json& row = w[static_cast<std::size_t>(r)];
        if (row.size() != static_cast<std::size_t>(L.weight.cols())) throw FormatError("'" + path.string() + "': layer shape mismatch");
        for (Eigen::Index c = 0; c < L.weight.cols(); ++c) L.weight(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        L.bias(r) = b[static_cast<std::size_t>(r)].get<double>();
      }
    }
    if (!p.all_finite()) throw FormatError("'" + path.string() + "': non-finite parameters");
    return p;
  });
}

// --- CSV -------------------------------------------------------------------

void write_loss_csv(const fs::path& path, std::span<const double> losses) {
  std::string s = "epoch,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) s += std::to_string(i + 1) + "," + format_double(losses[i]) + "\n";
  write_text(path, s);
}

void write_snapshot_csv(const fs::path& path, const FeatureTable& t) {
  std::string s = "instance_id,x,y,norm,angle,is_congealed\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& p = t.points[i];
    s += std::to_string(t.ids[i]) + "," + format_double(p.x()) + "," + format_double(p.y()) + "," +
         format_double(p.norm()) + "," + format_double(p.angle()) + "," +
         (i < t.congealed.size() && t.congealed[i] ? "1" : "0") + "\n";
  }
  write_text(path, s);
}

FeatureTable read_snapshot_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || split(line, ',').at(0) != "instance_id") {
    throw FormatError("'" + path.string() + "' is missing the instance_id,x,y,... header");
  }
  FeatureTable t;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw FormatError("'" + path.string() + "': expected 6 columns, got " + std::to_string(f.size()));
    t.ids.push_back(to_index(f[0], path));
    try {
      t.points.push_back(BallPoint::checked(to_double(f[1], path), to_double(f[2], path)));
    } catch (const std::domain_error&) {
      throw FormatError("'" + path.string() + "': point outside the unit ball");
    }
    t.congealed.push_back(f[5] == "1" ? 1 : 0);
  }
  return t;
}

void write_density_csv(const fs::path& path, std::span<const ProfileBin> bins) {
  std::string s = "bin_center,mean_density,variance,count\n";
  for (const auto& b : bins) {
    s += format_double(b.center) + "," + format_double(b.mean_density) + "," + format_double(b.variance) + "," +
         std::to_string(b.count) + "\n";
  }
  write_text(path, s);
}

void write_selection_csv(const fs::path& path, const FeatureTable& t, std::span<const std::size_t> rows) {
  std::string s = "id,norm,angle,rank\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    s += std::to_string(t.ids.at(i)) + "," + format_double(t.points[i].norm()) + "," +
         format_double(t.points[i].angle()) + "," + std::to_string(r + 1) + "\n";
  }
  write_text(path, s);
}

void write_accuracy_csv(const fs::path& path, std::span<const AccuracyRow> rows) {
  std::string s = "setting,clean_acc,adv_acc\n";
  for (const auto& r : rows) s += r.setting + "," + format_double(r.clean_acc) + "," + format_double(r.adv_acc) + "\n";
  write_text(path, s);
}

void write_congeal_params_csv(const fs::path& path, std::span<const std::size_t> ids,
                              std::span<const AffineParams> params) {
  if (ids.size() != params.size()) throw std::invalid_argument("write_congeal_params_csv: size mismatch");
  std::string s = "id,tx,ty,rotation,scale\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    s += std::to_string(ids[i]) + "," + std::to_string(params[i].tx) + "," + std::to_string(params[i].ty) + "," +
         format_double(params[i].rot) + "," + format_double(params[i].scale) + "\n";
  }
  write_text(path, s);
}

// --- SVG -------------------------------------------------------------------

std::string scatter_svg(std::span<const BallPoint> points, std::span<const std::uint8_t> flagged) {
  constexpr double size = 512.0, half = size / 2.0, radius = 240.0;
  char buf[160];
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"512\" height=\"512\" viewBox=\"0 0 512 512\">\n";
  s += "<rect width=\"512\" height=\"512\" fill=\"white\"/>\n";
  s += "<circle class=\"ball\" cx=\"256\" cy=\"256\" r=\"240\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  // Unflagged first so red markers stay on top.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const bool red = i < flagged.size() && flagged[i];
      if (red != (pass == 1)) continue;
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"%s\" fill=\"%s\"/>\n",
                    half + radius * points[i].x(), half - radius * points[i].y(), red ? "3" : "2",
                    red ? "red" : "cyan");
      s += buf;
    }
  }
  s += "</svg>\n";
  return s;
}

void write_scatter_svg(const fs::path& path, std::span<const BallPoint> points, std::span<const std::uint8_t> flagged) {
  write_text(path, scatter_svg(points, flagged));
}

// --- datasets --------------------------------------------------------------

std::vector<fs::path> write_dataset(const fs::path& json_path, const Dataset& data) {
  std::vector<fs::path> written;
  const fs::path dir = json_path.parent_path();
  const std::string stem = json_path.stem().string();
  json j;
  j["version"] = kFormatVersion;
  j["source"] = data.source;
  j["n"] = data.size();
  j["shape"] = {data.rows, data.cols};
  j["labeled"] = data.has_labels();
  j["congealed_ids"] = data.congealed_ids();

  if (data.rows > 1) {
    const fs::path img = dir / (stem + "-images.idx");
    std::optional<fs::path> lab;
    if (data.has_labels()) lab = dir / (stem + "-labels.idx");
    if (!dir.empty()) fs::create_directories(dir);
    write_idx(data, img, lab);
    j["format"] = "idx";
    j["images"] = img.filename().string();
    written.push_back(img);
    if (lab) {
      j["labels"] = lab->filename().string();
      written.push_back(*lab);
    }
  } else {
    const fs::path csv = dir / (stem + "-features.csv");
    std::string s = "id,label";
    for (std::size_t d = 0; d < data.dim(); ++d) s += ",x" + std::to_string(d);
    s += "\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      s += std::to_string(i) + "," + (data.has_labels() ? std::to_string(data.labels[i]) : std::string());
      for (std::size_t d = 0; d < data.dim(); ++d) {
        s += "," + format_double(data.features(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i)));
      }
      s += "\n";
    }
    write_text(csv, s);
    j["format"] = "csv";
    j["features"] = csv.filename().string();
    written.push_back(csv);
  }
  write_text(json_path, j.dump(1) + "\n");
  written.insert(written.begin(), json_path);
  return written;
}

Dataset read_dataset(const fs::path& json_path) {
  const json j = parse_json(json_path);
  check_version(j, json_path);
  const fs::path dir = json_path.parent_path();
  return guarded(json_path, [&] {
    Dataset d;
    const std::string format = j.at("format").get<std::string>();
    if (format == "idx") {
      std::optional<fs::path> lab;
      if (j.contains("labels")) lab = dir / j.at("labels").get<std::string>();
      d = read_idx(dir / j.at("images").get<std::string>(), lab);
    } else if (format == "csv") {
      const fs::path csv = dir / j.at("features").get<std::string>();
      std::istringstream in(read_text(csv));
      std::string line;
      std::getline(in, line);
      const std::size_t dim = split(line, ',').size() - 2;
      std::vector<std::vector<double>> cols;
      const bool labeled = j.value("labeled", false);
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != dim + 2) throw FormatError("'" + csv.string() + "': ragged row");
        if (labeled) d.labels.push_back(static_cast<int>(to_double(f[1], csv)));
        std::vector<double> v(dim);
        for (std::size_t k = 0; k < dim; ++k) v[k] = to_double(f[k + 2], csv);
        cols.push_back(std::move(v));
      }
      d.rows = 1;
      d.cols = dim;
      d.features.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t i = 0; i < cols.size(); ++i)
        for (std::size_t k = 0; k < dim; ++k) d.features(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = cols[i][k];
    } else {
      throw FormatError("'" + json_path.string() + "': unknown dataset format '" + format + "'");
    }
    if (d.size() != j.at("n").get<std::size_t>()) throw FormatError("'" + json_path.string() + "': instance count mismatch");
    d.source = j.at("source").get<std::string>();
    d.congealed.assign(d.size(), 0);
    for (std::size_t id : j.at("congealed_ids").get<std::vector<std::size_t>>()) {
      if (id >= d.size()) throw FormatError("'" + json_path.string() + "': congealed id out of range");
      d.congealed[id] = 1;
    }
    return d;
  });
}

}  // namespace hack::io
