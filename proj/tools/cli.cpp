#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hack/congeal.hpp"
#include "hack/data.hpp"
#include "hack/density.hpp"
#include "hack/eval.hpp"
#include "hack/io.hpp"
#include "hack/packing.hpp"
#include "hack/stats.hpp"
#include "hack/trainer.hpp"

namespace hack::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string path_str(const fs::path& p) { return p.generic_string(); }

fs::path default_manifest(const fs::path& out) {
  if (out.has_extension()) return out.parent_path() / (out.stem().string() + ".manifest.json");
  return out / "manifest.json";
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  return out.parent_path() / (out.stem().string() + suffix);
}

// State shared by every subcommand: the resolved config echo and the files written.
struct Run {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_file;
  std::string manifest;
  json config = json::object();
  std::vector<fs::path> outputs;

  void add(const fs::path& p) { outputs.push_back(p); }
  void add(const std::vector<fs::path>& ps) { outputs.insert(outputs.end(), ps.begin(), ps.end()); }
};

void write_manifest(const Run& run, const fs::path& primary) {
  const fs::path path = run.manifest.empty() ? default_manifest(primary) : fs::path(run.manifest);
  json j;
  j["version"] = io::kFormatVersion;
  j["command"] = run.command;
  j["seed"] = run.seed;
  if (!run.config_file.empty()) j["config_file"] = run.config_file;
  j["config"] = run.config;
  json outs = json::array();
  for (const auto& p : run.outputs) outs.push_back(path_str(p));
  j["outputs"] = outs;
  j["manifest"] = path_str(path);
  io::write_text(path, j.dump(1) + "\n");
}

// --- shared loaders ---------------------------------------------------------

/// Concatenates snapshot tables; instance ids must be unique.
io::FeatureTable load_features(const std::vector<std::string>& paths) {
  if (paths.empty()) throw ValidationError("--features: at least one snapshot CSV is required");
  io::FeatureTable all;
  std::set<std::size_t> seen;
  for (const auto& p : paths) {
    io::FeatureTable t = io::read_snapshot_csv(p);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!seen.insert(t.ids[i]).second) {
        throw ValidationError("--features: instance id " + std::to_string(t.ids[i]) + " appears more than once");
      }
      all.ids.push_back(t.ids[i]);
      all.points.push_back(t.points[i]);
      all.congealed.push_back(t.congealed[i]);
    }
  }
  if (all.size() == 0) throw ValidationError("--features: no rows");
  return all;
}

/// Features indexed by dataset id; every id 0..n-1 must be covered exactly once.
std::vector<BallPoint> features_by_id(const io::FeatureTable& t, std::size_t n) {
  if (t.size() != n) {
    throw ValidationError("--features cover " + std::to_string(t.size()) + " instances but the dataset has " +
                          std::to_string(n));
  }
  std::vector<BallPoint> out(n);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.ids[i] >= n) throw ValidationError("--features: instance id " + std::to_string(t.ids[i]) + " is outside the dataset");
    out[t.ids[i]] = t.points[i];
  }
  return out;
}

Dataset load_labeled(const std::string& path, const char* flag) {
  Dataset d = io::read_dataset(path);
  if (!d.has_labels()) throw ValidationError(std::string(flag) + ": dataset '" + path + "' has no labels");
  if (d.size() == 0) throw ValidationError(std::string(flag) + ": dataset '" + path + "' is empty");
  return d;
}

MlpSpec classifier_spec(const Dataset& train, const Dataset* test, const std::vector<std::size_t>& hidden,
                        std::uint64_t seed) {
  int top = *std::max_element(train.labels.begin(), train.labels.end());
  if (test) {
    if (test->dim() != train.dim()) throw ValidationError("--test: input size differs from the training set");
    top = std::max(top, *std::max_element(test->labels.begin(), test->labels.end()));
  }
  MlpSpec spec;
  spec.seed = seed;
  spec.layer_sizes.push_back(train.dim());
  for (std::size_t h : hidden) spec.layer_sizes.push_back(h);
  spec.layer_sizes.push_back(static_cast<std::size_t>(top) + 1);
  return spec;
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("--centers: bad coordinate '" + item + "'");
    }
  }
  return v;
}

std::vector<std::vector<double>> parse_centers(const std::string& text) {
  std::vector<std::vector<double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (!item.empty()) out.push_back(parse_point(item));
  }
  if (out.empty()) throw ValidationError("--centers: expected 'x,y;x,y;...'");
  return out;
}

// --- --config expansion -----------------------------------------------------

const std::map<std::string, std::string>& config_sections() {
  static const std::map<std::string, std::string> m{
      {"pack", "packing"},      {"congeal", "congeal"},        {"make-dataset", "dataset"},
      {"train", "train"},       {"density", "density"},        {"rank", "rank"},
      {"select", "selection"},  {"eval-select", "eval_select"}, {"eval-robust", "eval_robust"},
      {"plot", "plot"}};
  return m;
}

std::string scalar_text(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw ValidationError("config key '" + key + "' must be a scalar or a list of scalars");
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

/// Appends `--key value` for config entries the command line did not set.
void expand_config(std::vector<std::string>& args) {
  auto it = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a == "--config" || a.rfind("--config=", 0) == 0; });
  if (it == args.end() || args.empty()) return;
  std::string path;
  if (*it == "--config") {
    if (std::next(it) == args.end()) return;  // CLI11 reports the missing value
    path = *std::next(it);
  } else {
    path = it->substr(9);
  }
  if (!fs::exists(path)) throw ValidationError("--config: file not found: " + path);
  json cfg;
  try {
    cfg = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw ValidationError("--config: '" + path + "' is not valid JSON: " + e.what());
  }
  if (!cfg.is_object() || !cfg.contains("version")) throw ValidationError("--config: '" + path + "' has no version field");
  if (cfg.at("version") != io::kFormatVersion) throw ValidationError("--config: unsupported version " + cfg.at("version").dump());

  const std::string& command = args.front();
  json entries = json::object();
  if (cfg.contains("seed")) entries["seed"] = cfg.at("seed");
  for (const std::string& name : {config_sections().count(command) ? config_sections().at(command) : command, command}) {
    if (cfg.contains(name)) {
      if (!cfg.at(name).is_object()) throw ValidationError("--config: section '" + name + "' must be an object");
      for (const auto& [k, v] : cfg.at(name).items()) entries[k] = v;
    }
  }
  for (const auto& [key, value] : entries.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (has_flag(args, flag)) continue;
    if (value.is_array()) {
      std::string joined;
      for (std::size_t i = 0; i < value.size(); ++i) joined += (i ? "," : "") + scalar_text(value[i], key);
      if (value.empty()) continue;
      args.push_back(flag);
      args.push_back(joined);
    } else {
      args.push_back(flag);
      args.push_back(scalar_text(value, key));
    }
  }
}

// --- subcommands ------------------------------------------------------------

struct Common {
  Run run;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, bool out_is_dir = false) {
  sub->add_option("--seed", c.run.seed, "RNG seed (every random stage is seeded from it)")->capture_default_str();
  sub->add_option("--config", c.run.config_file, "RunConfig JSON; command-line flags take precedence")
      ->check(CLI::ExistingFile);
  sub->add_option("--manifest", c.run.manifest, "manifest path (default: next to the output)");
  sub->add_option("--out", c.out, out_is_dir ? "output directory" : "output file")->required();
}

struct PackCmd : Common {
  PackingSpec spec;
  double c = 1.0;
  std::string loss_csv;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("pack", "pack n particles uniformly in the Poincare ball");
    add_common(sub, *this);
    sub->add_option("--n", spec.n, "number of particles")->capture_default_str();
    sub->add_option("--r", spec.r, "Euclidean packing radius")->capture_default_str();
    sub->add_option("--k", spec.k, "repulsion exponent")->capture_default_str();
    sub->add_option("--c", c, "curvature")->capture_default_str();
    sub->add_option("--margin", spec.margin, "boundary hinge margin")->capture_default_str();
    sub->add_option("--lr", spec.lr, "learning rate")->capture_default_str();
    sub->add_option("--epochs", spec.epochs, "optimization epochs")->capture_default_str();
    sub->add_option("--loss-csv", loss_csv, "also write the loss history (epoch 0 = initial)");
  }

  fs::path exec(std::ostream& os) {
    spec.seed = run.seed;
    spec.validate();
    if (!(c > 0.0)) throw ValidationError("--c must be positive");
    run.config = {{"n", spec.n},   {"r", spec.r},         {"k", spec.k},           {"c", c},
                  {"margin", spec.margin}, {"lr", spec.lr}, {"epochs", spec.epochs}, {"out", out},
                  {"loss_csv", loss_csv}};
    const ParticleSet p = pack(spec, BallParams::from_curvature(c));
    io::write_particles(out, p);
    run.add(out);
    if (!loss_csv.empty()) {
      std::string s = "epoch,loss\n";
      for (std::size_t e = 0; e < p.loss_history.size(); ++e) s += std::to_string(e) + "," + io::format_double(p.loss_history[e]) + "\n";
      io::write_text(loss_csv, s);
      run.add(loss_csv);
    }
    const auto nn = nearest_neighbor_distances(p.positions);
    os << "pack: n=" << spec.n << " r_n=" << io::format_double(p.r_n) << " status=" << to_string(p.status)
       << " repulsion " << io::format_double(p.initial_repulsion) << " -> " << io::format_double(p.final_repulsion)
       << " final_loss=" << io::format_double(p.final_loss)
       << " nn_cv=" << io::format_double(stats::coefficient_of_variation(nn)) << "\n";
    return out;
  }
};

struct MakeDatasetCmd : Common {
  std::string kind = "glyphs";
  GlyphSpec glyph;
  std::size_t n = 1000;
  std::string centers = "0.35,0.5;0.65,0.5";
  std::vector<double> sigmas;
  TailedClusterSpec tailed;
  std::string images, labels;
  std::optional<int> label;
  std::size_t limit = 0;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("make-dataset", "generate or import a dataset");
    add_common(sub, *this);
    sub->add_option("--kind", kind, "glyphs | clusters | tailed | idx")
        ->check(CLI::IsMember({"glyphs", "clusters", "tailed", "idx"}))
        ->capture_default_str();
    sub->add_option("--classes", glyph.classes, "glyph classes (0-9)")->delimiter(',');
    sub->add_option("--per-class", glyph.per_class, "instances per class (glyphs, tailed)")->capture_default_str();
    sub->add_option("--side", glyph.side, "glyph image side")->capture_default_str();
    sub->add_option("--max-rotation", glyph.max_rotation, "glyph rotation scale, degrees")->capture_default_str();
    sub->add_option("--max-shift", glyph.max_shift, "glyph shift scale, pixels")->capture_default_str();
    sub->add_option("--outlier-fraction", glyph.outlier_fraction, "glyphs replaced by random strokes")->capture_default_str();
    sub->add_option("--n", n, "instances (clusters)")->capture_default_str();
    sub->add_option("--centers", centers, "cluster centres 'x,y;x,y'")->capture_default_str();
    sub->add_option("--sigmas", sigmas, "per-centre sigma (clusters; default 1)")->delimiter(',');
    sub->add_option("--core-sigma", tailed.core_sigma, "core sigma (tailed)")->capture_default_str();
    sub->add_option("--tail-sigma", tailed.tail_sigma, "tail sigma (tailed)")->capture_default_str();
    sub->add_option("--tail-fraction", tailed.tail_fraction, "tail probability (tailed)")->capture_default_str();
    sub->add_option("--images", images, "IDX image file (idx)")->check(CLI::ExistingFile);
    sub->add_option("--labels", labels, "IDX label file (idx)")->check(CLI::ExistingFile);
    sub->add_option("--label", label, "keep one class (idx)");
    sub->add_option("--limit", limit, "seeded subsample size, 0 = all (idx)")->capture_default_str();
  }

  fs::path exec(std::ostream& os) {
    Dataset d;
    run.config = {{"kind", kind}, {"out", out}};
    if (kind == "glyphs") {
      glyph.seed = run.seed;
      for (int c : glyph.classes)
        if (c < 0 || c > 9) throw ValidationError("--classes: glyph classes are 0..9");
      if (glyph.per_class < 1) throw ValidationError("--per-class must be >= 1");
      d = synth_glyphs(glyph);
      run.config.update({{"classes", glyph.classes},
                         {"per_class", glyph.per_class},
                         {"side", glyph.side},
                         {"max_rotation", glyph.max_rotation},
                         {"max_shift", glyph.max_shift},
                         {"outlier_fraction", glyph.outlier_fraction}});
    } else if (kind == "clusters") {
      const auto cs = parse_centers(centers);
      std::vector<double> sg = sigmas.empty() ? std::vector<double>(cs.size(), 1.0) : sigmas;
      d = synth_clusters(n, cs, sg, run.seed);
      run.config.update({{"n", n}, {"centers", cs}, {"sigmas", sg}});
    } else if (kind == "tailed") {
      tailed.centers = parse_centers(centers);
      tailed.per_class = glyph.per_class;
      tailed.seed = run.seed;
      d = synth_tailed_clusters(tailed);
      run.config.update({{"centers", tailed.centers},
                         {"per_class", tailed.per_class},
                         {"core_sigma", tailed.core_sigma},
                         {"tail_sigma", tailed.tail_sigma},
                         {"tail_fraction", tailed.tail_fraction}});
    } else {
      if (images.empty()) throw ValidationError("--kind idx needs --images");
      std::optional<fs::path> lab;
      if (!labels.empty()) lab = labels;
      d = read_idx(images, lab);
      if (label) {
        if (!d.has_labels()) throw ValidationError("--label needs --labels");
        d = filter_label(d, *label);
      }
      if (limit > 0) d = subsample(d, limit, run.seed);
      run.config.update({{"images", images}, {"labels", labels}, {"limit", limit}});
      if (label) run.config["label"] = *label;
    }
    run.add(io::write_dataset(out, d));
    os << "make-dataset: " << d.source << " n=" << d.size() << " dim=" << d.dim() << "\n";
    return out;
  }
};

struct CongealCmd : Common {
  std::string dataset;
  std::optional<std::size_t> m;
  std::optional<int> label;
  CongealSpec spec;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("congeal", "congeal an image class and swap in m congealed images");
    add_common(sub, *this);
    sub->add_option("--dataset", dataset, "dataset JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--m", m, "number of replacements (default: all)");
    sub->add_option("--label", label, "class to congeal when the dataset has several");
    sub->add_option("--iterations", spec.iterations, "coordinate-descent sweeps")->capture_default_str();
    sub->add_option("--max-shift", spec.max_shift, "shift search radius, pixels")->capture_default_str();
    sub->add_option("--rotations", spec.rotations, "rotation grid, degrees")->delimiter(',');
    sub->add_option("--scales", spec.scales, "scale grid")->delimiter(',');
  }

  fs::path exec(std::ostream& os) {
    spec.seed = run.seed;
    spec.validate();
    Dataset d = io::read_dataset(dataset);
    if (label) {
      if (!d.has_labels()) throw ValidationError("--label: dataset has no labels");
      d = filter_label(d, *label);
    } else if (d.has_labels()) {
      for (int y : d.labels)
        if (y != d.labels.front()) throw ValidationError("congeal works on one class; pass --label");
    }
    if (d.rows < 2) throw ValidationError("congeal needs image data");
    if (d.size() < 2) throw ValidationError("congeal needs at least two images");
    const std::size_t count = m.value_or(d.size());
    if (count > d.size()) throw ValidationError("--m exceeds the class size (" + std::to_string(d.size()) + ")");

    std::vector<Image> imgs;
    for (std::size_t i = 0; i < d.size(); ++i) imgs.push_back(d.image(i));
    const CongealResult res = congeal_set(imgs, spec);
    const Dataset outd = replace_with_congealed(d, res, count, run.seed);

    run.config = {{"dataset", dataset},     {"m", count},
                  {"iterations", spec.iterations}, {"max_shift", spec.max_shift},
                  {"rotations", spec.rotations},   {"scales", spec.scales},
                  {"out", out}};
    if (label) run.config["label"] = *label;
    run.add(io::write_dataset(out, outd));
    std::vector<std::size_t> ids(d.size());
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    const fs::path params = sibling(out, "-congeal.csv");
    io::write_congeal_params_csv(params, ids, res.params);
    run.add(params);
    const fs::path obj = sibling(out, "-objective.csv");
    std::string s = "sweep,objective\n";
    for (std::size_t i = 0; i < res.objective.size(); ++i) s += std::to_string(i) + "," + io::format_double(res.objective[i]) + "\n";
    io::write_text(obj, s);
    run.add(obj);
    os << "congeal: n=" << d.size() << " m=" << count << " objective " << io::format_double(res.objective.front())
       << " -> " << io::format_double(res.objective.back()) << "\n";
    return out;
  }
};

struct TrainCmd : Common {
  std::string dataset, particles;
  std::optional<int> label;
  TrainConfig cfg;
  std::vector<std::size_t> hidden;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("train", "train the hyperbolic encoder against packed particles");
    add_common(sub, *this, true);
    sub->add_option("--dataset", dataset, "dataset JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--particles", particles, "particles JSON from pack")->required()->check(CLI::ExistingFile);
    sub->add_option("--label", label, "train on one class");
    sub->add_option("--epochs", cfg.epochs, "epochs")->capture_default_str();
    sub->add_option("--lr0", cfg.lr0, "initial learning rate (cosine schedule)")->capture_default_str();
    sub->add_option("--batch-size", cfg.batch_size, "batch size")->capture_default_str();
    sub->add_option("--assign-every", cfg.assign_every, "reassignment period, epochs")->capture_default_str();
    sub->add_option("--snapshot-epochs", cfg.snapshot_epochs, "epochs to snapshot (final always)")->delimiter(',');
    sub->add_option("--hidden", hidden, "hidden layer sizes (default by input size)")->delimiter(',');
  }

  fs::path exec(std::ostream& os) {
    cfg.seed = run.seed;
    const Dataset full = io::read_dataset(dataset);
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < full.size(); ++i) {
      if (!label || (full.has_labels() && full.labels[i] == *label)) ids.push_back(i);
    }
    if (label && !full.has_labels()) throw ValidationError("--label: dataset has no labels");
    const Dataset d = full.subset(ids);
    const ParticleSet parts = io::read_particles(particles);
    if (d.size() != parts.size()) {
      throw ValidationError("dataset has " + std::to_string(d.size()) + " instances but '" + particles + "' has " +
                            std::to_string(parts.size()) + " particles");
    }
    if (!hidden.empty()) {
      cfg.encoder.layer_sizes = {d.dim()};
      for (std::size_t h : hidden) cfg.encoder.layer_sizes.push_back(h);
      cfg.encoder.layer_sizes.push_back(2);
      cfg.encoder.seed = cfg.seed;
    }
    cfg.snapshot_epochs.push_back(cfg.epochs);
    std::sort(cfg.snapshot_epochs.begin(), cfg.snapshot_epochs.end());
    cfg.snapshot_epochs.erase(std::unique(cfg.snapshot_epochs.begin(), cfg.snapshot_epochs.end()), cfg.snapshot_epochs.end());
    cfg.validate();

    const MlpSpec enc = cfg.encoder.layer_sizes.empty() ? default_encoder(d.dim(), cfg.seed) : cfg.encoder;
    run.config = {{"dataset", dataset},       {"particles", particles},     {"epochs", cfg.epochs},
                  {"lr0", cfg.lr0},           {"batch_size", cfg.batch_size}, {"assign_every", cfg.assign_every},
                  {"snapshot_epochs", cfg.snapshot_epochs}, {"encoder", enc.layer_sizes}, {"out", out}};
    if (label) run.config["label"] = *label;

    const TrainResult res = hack_train(d, parts, cfg);
    const fs::path dir = out;
    io::write_checkpoint(dir / "checkpoint.json", res.params);
    io::write_assignment(dir / "assignment.json", res.assignment, cfg.epochs);
    io::write_loss_csv(dir / "loss.csv", res.loss_history);
    run.add({dir / "checkpoint.json", dir / "assignment.json", dir / "loss.csv"});
    for (const auto& snap : res.snapshots) {
      io::FeatureTable t{ids, snap.features, d.congealed};
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04zu.csv", snap.epoch);
      io::write_snapshot_csv(dir / "snapshots" / name, t);
      run.add(dir / "snapshots" / name);
      if (snap.epoch == cfg.epochs) {
        io::write_snapshot_csv(dir / "features.csv", t);
        run.add(dir / "features.csv");
      }
    }
    os << "train: n=" << d.size() << " epochs=" << cfg.epochs << " loss "
       << io::format_double(res.loss_history.empty() ? 0.0 : res.loss_history.front()) << " -> "
       << io::format_double(res.loss_history.empty() ? 0.0 : res.loss_history.back()) << "\n";
    return dir;
  }
};

struct DensityCmd : Common {
  std::vector<std::string> features;
  DensitySpec spec;
  std::string metric = "hyperbolic";
  std::size_t portions = 50;
  std::string per_instance;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("density", "k-NN density profile over feature norm");
    add_common(sub, *this);
    sub->add_option("--features", features, "snapshot CSV(s)")->required()->delimiter(',')->check(CLI::ExistingFile);
    sub->add_option("--k", spec.k, "neighbour rank")->capture_default_str();
    sub->add_option("--metric", metric, "hyperbolic | euclidean")->capture_default_str();
    sub->add_option("--portions", portions, "norm bins")->capture_default_str();
    sub->add_option("--per-instance", per_instance, "also write id,norm,density");
  }

  fs::path exec(std::ostream& os) {
    spec.metric = metric_from_string(metric);
    if (portions < 1) throw ValidationError("--portions must be >= 1");
    const io::FeatureTable t = load_features(features);
    if (spec.k < 1 || spec.k >= t.size()) throw ValidationError("--k must satisfy 1 <= k < number of features");
    run.config = {{"features", features}, {"k", spec.k}, {"metric", metric}, {"portions", portions},
                  {"out", out},           {"per_instance", per_instance}};
    const KnnDensity kd = knn_density(t.points, spec);
    io::write_density_csv(out, bin_by_norm(t.points, kd.density, portions));
    run.add(out);
    std::vector<double> norms;
    for (const auto& p : t.points) norms.push_back(p.norm());
    if (!per_instance.empty()) {
      std::string s = "id,norm,density\n";
      for (std::size_t i = 0; i < t.size(); ++i) {
        s += std::to_string(t.ids[i]) + "," + io::format_double(norms[i]) + "," + io::format_double(kd.density[i]) + "\n";
      }
      io::write_text(per_instance, s);
      run.add(per_instance);
    }
    os << "density: n=" << t.size() << " spearman(norm, density)=" << io::format_double(stats::spearman(norms, kd.density))
       << " flagged=" << kd.flagged.size() << "\n";
    return out;
  }
};

struct ClassifierFlags {
  std::size_t epochs = 10;
  double lr = 0.1;
  std::size_t batch_size = 32;
  std::vector<std::size_t> hidden{256};

  void add(CLI::App* sub) {
    sub->add_option("--epochs", epochs, "classifier epochs")->capture_default_str();
    sub->add_option("--lr", lr, "classifier learning rate")->capture_default_str();
    sub->add_option("--batch-size", batch_size, "classifier batch size")->capture_default_str();
    sub->add_option("--hidden", hidden, "classifier hidden sizes")->delimiter(',');
  }
  ClassifierOptions options(std::uint64_t seed) const { return {epochs, lr, batch_size, seed}; }
  json echo() const { return {{"epochs", epochs}, {"lr", lr}, {"batch_size", batch_size}, {"hidden", hidden}}; }
};

struct RankCmd : Common {
  std::string by = "norm";
  std::vector<std::string> features;
  std::string dataset;
  ClassifierFlags clf;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("rank", "rank instances by prototypicality (norm) or model confidence");
    add_common(sub, *this);
    sub->add_option("--by", by, "norm | confidence")->check(CLI::IsMember({"norm", "confidence"}))->capture_default_str();
    sub->add_option("--features", features, "snapshot CSV(s) (norm)")->delimiter(',')->check(CLI::ExistingFile);
    sub->add_option("--dataset", dataset, "labeled dataset JSON (confidence)")->check(CLI::ExistingFile);
    clf.add(sub);
  }

  fs::path exec(std::ostream& os) {
    run.config = {{"by", by}, {"out", out}};
    if (by == "norm") {
      const io::FeatureTable t = load_features(features);
      std::vector<std::size_t> rows(t.size());
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
        const double na = t.points[a].norm(), nb = t.points[b].norm();
        return na != nb ? na < nb : t.ids[a] < t.ids[b];
      });
      io::write_selection_csv(out, t, rows);
      run.config["features"] = features;
      os << "rank: " << t.size() << " instances by norm\n";
    } else {
      if (dataset.empty()) throw ValidationError("--by confidence needs --dataset");
      const Dataset d = load_labeled(dataset, "--dataset");
      const Classifier model = train_classifier(d, classifier_spec(d, nullptr, clf.hidden, run.seed), clf.options(run.seed));
      const auto conf = confidences(model.params, d);
      const auto order = confidence_rank(model.params, d);
      std::string s = "id,confidence,rank\n";
      for (std::size_t r = 0; r < order.size(); ++r) {
        s += std::to_string(order[r]) + "," + io::format_double(conf[order[r]]) + "," + std::to_string(r + 1) + "\n";
      }
      io::write_text(out, s);
      run.config["dataset"] = dataset;
      run.config["classifier"] = clf.echo();
      os << "rank: " << d.size() << " instances by confidence, train acc " << io::format_double(model.accuracy(d)) << "\n";
    }
    run.add(out);
    return out;
  }
};

struct SelectCmd : Common {
  std::vector<std::string> features;
  std::string dataset;
  SelectionSpec spec;
  std::string mode = "atypical";

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("select", "select a subset by feature norm");
    add_common(sub, *this);
    sub->add_option("--features", features, "snapshot CSV(s)")->required()->delimiter(',')->check(CLI::ExistingFile);
    sub->add_option("--dataset", dataset, "labeled dataset JSON: select within each class")->check(CLI::ExistingFile);
    sub->add_option("--fraction", spec.fraction, "fraction to keep")->capture_default_str();
    sub->add_option("--mode", mode, "typical | atypical | atypical_diverse")->capture_default_str();
    sub->add_option("--bins", spec.angular_bins, "angular sectors (atypical_diverse)")->capture_default_str();
  }

  fs::path exec(std::ostream& os) {
    spec.mode = selection_mode_from_string(mode);
    spec.validate();
    const io::FeatureTable t = load_features(features);
    run.config = {{"features", features}, {"dataset", dataset}, {"fraction", spec.fraction},
                  {"mode", to_string(spec.mode)}, {"bins", spec.angular_bins}, {"out", out}};
    std::vector<std::size_t> rows;
    if (dataset.empty()) {
      rows = select_subset(t.points, spec);
    } else {
      const Dataset d = load_labeled(dataset, "--dataset");
      const auto pts = features_by_id(t, d.size());
      std::vector<std::size_t> row_of(d.size());
      for (std::size_t i = 0; i < t.size(); ++i) row_of[t.ids[i]] = i;
      for (std::size_t id : select_per_class(pts, d.labels, spec)) rows.push_back(row_of[id]);
    }
    io::write_selection_csv(out, t, rows);
    run.add(out);
    os << "select: " << rows.size() << " of " << t.size() << " (" << to_string(spec.mode) << ")\n";
    return out;
  }
};

struct EvalSelectCmd : Common {
  std::string dataset, test;
  std::vector<std::string> features;
  double fraction = 0.1;
  std::vector<std::string> modes{"typical", "atypical", "atypical_diverse"};
  std::size_t bins = 8;
  double epsilon = 0.07;
  ClassifierFlags clf;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("eval-select", "train a classifier on norm-selected subsets and test it");
    add_common(sub, *this);
    sub->add_option("--dataset", dataset, "labeled training dataset JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--test", test, "labeled held-out dataset JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--features", features, "snapshot CSV(s) covering the training set")->required()->delimiter(',')->check(CLI::ExistingFile);
    sub->add_option("--fraction", fraction, "fraction selected per class")->capture_default_str();
    sub->add_option("--modes", modes, "selection modes")->delimiter(',');
    sub->add_option("--bins", bins, "angular sectors")->capture_default_str();
    sub->add_option("--epsilon", epsilon, "FGSM budget for adv_acc")->capture_default_str();
    clf.add(sub);
  }

  fs::path exec(std::ostream& os) {
    const Dataset train = load_labeled(dataset, "--dataset");
    const Dataset held = load_labeled(test, "--test");
    const auto pts = features_by_id(load_features(features), train.size());
    if (!(epsilon >= 0.0)) throw ValidationError("--epsilon must be >= 0");
    std::vector<SelectionSpec> specs;
    for (const auto& m : modes) {
      SelectionSpec s{fraction, selection_mode_from_string(m), bins};
      s.validate();
      specs.push_back(s);
    }
    const MlpSpec mlp = classifier_spec(train, &held, clf.hidden, run.seed);
    run.config = {{"dataset", dataset}, {"test", test},     {"features", features}, {"fraction", fraction},
                  {"modes", modes},     {"bins", bins},     {"epsilon", epsilon},   {"classifier", clf.echo()},
                  {"out", out}};
    std::vector<io::AccuracyRow> rows;
    for (const auto& s : specs) {
      const auto ids = select_per_class(pts, train.labels, s);
      const Classifier model = train_classifier(train.subset(ids), mlp, clf.options(run.seed));
      rows.push_back({to_string(s.mode), model.accuracy(held), adversarial_accuracy(model, held, epsilon)});
      os << "eval-select: " << rows.back().setting << " n=" << ids.size() << " clean=" << io::format_double(rows.back().clean_acc)
         << " adv=" << io::format_double(rows.back().adv_acc) << "\n";
    }
    io::write_accuracy_csv(out, rows);
    run.add(out);
    return out;
  }
};

struct EvalRobustCmd : Common {
  std::string dataset, test;
  std::vector<std::string> features;
  double remove_fraction = 0.01;
  double epsilon = 0.07;
  ClassifierFlags clf;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("eval-robust", "FGSM accuracy with and without the most atypical training items");
    add_common(sub, *this);
    sub->add_option("--dataset", dataset, "labeled training dataset JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--test", test, "labeled held-out dataset JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--features", features, "snapshot CSV(s) covering the training set")->required()->delimiter(',')->check(CLI::ExistingFile);
    sub->add_option("--remove-fraction", remove_fraction, "fraction removed per class")->capture_default_str();
    sub->add_option("--epsilon", epsilon, "FGSM budget")->capture_default_str();
    clf.add(sub);
  }

  fs::path exec(std::ostream& os) {
    const Dataset train = load_labeled(dataset, "--dataset");
    const Dataset held = load_labeled(test, "--test");
    const auto pts = features_by_id(load_features(features), train.size());
    if (!(epsilon >= 0.0)) throw ValidationError("--epsilon must be >= 0");
    SelectionSpec rm{remove_fraction, SelectionMode::atypical, 1};
    rm.validate();
    const MlpSpec mlp = classifier_spec(train, &held, clf.hidden, run.seed);
    run.config = {{"dataset", dataset}, {"test", test}, {"features", features}, {"remove_fraction", remove_fraction},
                  {"epsilon", epsilon}, {"classifier", clf.echo()}, {"out", out}};

    const auto drop = select_per_class(pts, train.labels, rm);
    std::vector<char> gone(train.size(), 0);
    for (std::size_t id : drop) gone[id] = 1;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < train.size(); ++i)
      if (!gone[i]) keep.push_back(i);

    const Classifier all = train_classifier(train, mlp, clf.options(run.seed));
    const Classifier pruned = train_classifier(train.subset(keep), mlp, clf.options(run.seed));
    std::vector<io::AccuracyRow> rows{
        {"all", all.accuracy(held), adversarial_accuracy(all, held, epsilon)},
        {"remove_atypical", pruned.accuracy(held), adversarial_accuracy(pruned, held, epsilon)}};
    io::write_accuracy_csv(out, rows);
    run.add(out);
    for (const auto& r : rows) {
      os << "eval-robust: " << r.setting << " clean=" << io::format_double(r.clean_acc) << " adv=" << io::format_double(r.adv_acc) << "\n";
    }
    return out;
  }
};

struct PlotCmd : Common {
  std::vector<std::string> features;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("plot", "SVG scatter of features in the unit disk");
    add_common(sub, *this);
    sub->add_option("--features", features, "snapshot CSV(s)")->required()->delimiter(',')->check(CLI::ExistingFile);
  }

  fs::path exec(std::ostream& os) {
    const io::FeatureTable t = load_features(features);
    run.config = {{"features", features}, {"out", out}};
    io::write_scatter_svg(out, t.points, t.congealed);
    run.add(out);
    os << "plot: " << t.size() << " points\n";
    return out;
  }
};

template <class Cmd>
int execute(Cmd& cmd, const std::string& name, std::ostream& out, std::ostream& err) {
  cmd.run.command = name;
  try {
    const fs::path primary = cmd.exec(out);
    write_manifest(cmd.run, primary);
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "error: invalid configuration: " << e.what() << "\n";
  } catch (const std::out_of_range& e) {
    err << "error: out of range: " << e.what() << "\n";
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const io::FormatError& e) {
    err << "error: bad input file: " << e.what() << "\n";
  } catch (const IdxError& e) {
    err << "error: bad IDX input: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"hyperbolic prototypicality toolkit", "hack"};
  app.require_subcommand(1);

  PackCmd pack_cmd;
  MakeDatasetCmd dataset_cmd;
  CongealCmd congeal_cmd;
  TrainCmd train_cmd;
  DensityCmd density_cmd;
  RankCmd rank_cmd;
  SelectCmd select_cmd;
  EvalSelectCmd eval_select_cmd;
  EvalRobustCmd eval_robust_cmd;
  PlotCmd plot_cmd;
  pack_cmd.add(app);
  dataset_cmd.add(app);
  congeal_cmd.add(app);
  train_cmd.add(app);
  density_cmd.add(app);
  rank_cmd.add(app);
  select_cmd.add(app);
  eval_select_cmd.add(app);
  eval_robust_cmd.add(app);
  plot_cmd.add(app);

  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  if (!args.empty() && !args.front().empty() && args.front().front() != '-' && !config_sections().count(args.front())) {
    err << "error: unknown subcommand '" << args.front() << "'\n\n" << app.help();
    return kExitValidation;
  }
  try {
    expand_config(args);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector

  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  if (name == "pack") return execute(pack_cmd, name, out, err);
  if (name == "make-dataset") return execute(dataset_cmd, name, out, err);
  if (name == "congeal") return execute(congeal_cmd, name, out, err);
  if (name == "train") return execute(train_cmd, name, out, err);
  if (name == "density") return execute(density_cmd, name, out, err);
  if (name == "rank") return execute(rank_cmd, name, out, err);
  if (name == "select") return execute(select_cmd, name, out, err);
  if (name == "eval-select") return execute(eval_select_cmd, name, out, err);
  if (name == "eval-robust") return execute(eval_robust_cmd, name, out, err);
  return execute(plot_cmd, name, out, err);
}

}  // namespace hack::cli
