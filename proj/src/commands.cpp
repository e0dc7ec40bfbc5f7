#include "htss/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <spdlog/spdlog.h>

#include "htss/error.hpp"
#include "htss/io.hpp"
#include "htss/metrics.hpp"
#include "htss/raster.hpp"
#include "htss/synthgen.hpp"
#include "htss/train.hpp"

namespace htss {

namespace {

fs::path out_dir(const RunConfig& config) {
  const std::string& out = config.get("out");
  if (out.empty()) throw Error(ErrorCode::config, "'out' must be set");
  return out;
}

RelationTable load_relations(const RunConfig& config) {
  return config.is_set("relations") ? read_relations(config.existing_path("relations")) : RelationTable{};
}

std::vector<fs::path> existing_paths(const RunConfig& config, std::string_view key) {
  std::vector<fs::path> out;
  for (const auto& item : config.get_list(key)) {
    if (!fs::exists(item)) throw Error(ErrorCode::config, "'" + std::string(key) + "': file not found: " + item);
    out.emplace_back(item);
  }
  if (out.empty()) throw Error(ErrorCode::config, "'" + std::string(key) + "' must list at least one file");
  return out;
}

std::vector<DatasetManifest> load_manifests(const RunConfig& config) {
  std::vector<DatasetManifest> out;
  for (const auto& p : existing_paths(config, "manifests")) out.push_back(read_manifest(p));
  return out;
}

int checked_int(const RunConfig& config, std::string_view key, std::int64_t lo) {
  const auto v = config.get_int(key);
  if (v < lo || v > 1'000'000'000) {
    throw Error(ErrorCode::config, "'" + std::string(key) + "' must be at least " + std::to_string(lo));
  }
  return static_cast<int>(v);
}

TrainConfig train_config(const RunConfig& config) {
  TrainConfig tc;
  tc.features = checked_int(config, "features", 1);
  tc.learning_rate = config.get_double("lr");
  tc.momentum = config.get_double("momentum");
  tc.init_scale = config.get_double("init_scale");
  tc.epochs = checked_int(config, "epochs", 1);
  tc.max_steps = checked_int(config, "max_steps", 0);
  tc.refine_threshold = config.get_double("refine_threshold");
  tc.refine_warmup = checked_int(config, "refine_warmup", 0);
  tc.checkpoint_every = checked_int(config, "checkpoint_every", 0);
  tc.seed = config.get_seed();
  if (tc.learning_rate <= 0.0) throw Error(ErrorCode::config, "'lr' must be positive");
  if (tc.momentum < 0.0 || tc.momentum >= 1.0) throw Error(ErrorCode::config, "'momentum' must lie in [0, 1)");
  if (tc.init_scale <= 0.0) throw Error(ErrorCode::config, "'init_scale' must be positive");
  if (tc.refine_threshold < 0.0 || tc.refine_threshold > 1.0) {
    throw Error(ErrorCode::config, "'refine_threshold' must lie in [0, 1]");
  }
  return tc;
}

std::string step_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06d.ckpt", step);
  return buf;
}

}  // namespace

TaxonomyBuild build_taxonomy(std::span<const LabelSpace> spaces, const RelationTable& relations, bool partition,
                             std::vector<std::string> atoms) {
  TaxonomyBuild b;
  if (atoms.empty()) {
    atoms = build_semantic_atoms(spaces, relations);
  } else {
    std::sort(atoms.begin(), atoms.end());
    atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  }
  b.taxonomy = build_group_sets(atoms, spaces, relations);
  b.violations = validate_taxonomy(b.taxonomy, spaces);
  b.partitioned = partition;
  b.partition = partition ? partition_atoms(b.taxonomy, spaces, relations) : trivial_partition(b.taxonomy);
  return b;
}

void cmd_gen(const RunConfig& config) {
  const fs::path world_path = config.existing_path("world");
  WorldDocument doc = read_world(world_path);
  doc.world.seed = config.get_seed();
  if (doc.views.empty()) throw Error(ErrorCode::config, world_path.string() + " defines no views");
  const fs::path out = out_dir(config);
  for (const auto& view : doc.views) {
    const auto manifest = emit_dataset(doc.world, view, out);
    spdlog::info("{}: {} images ({}, {})", view.dataset_id, manifest.records.size(), to_string(view.supervision),
                 to_string(view.granularity));
  }
  write_text(out / "relations.tsv", format_relations(hierarchy_relations(doc.world)));
}

void cmd_taxonomy(const RunConfig& config) {
  std::vector<LabelSpace> spaces;
  if (config.is_set("manifests")) {
    for (const auto& m : load_manifests(config)) spaces.push_back(read_label_space(m.label_space));
  } else {
    for (const auto& p : existing_paths(config, "label_spaces")) spaces.push_back(read_label_space(p));
  }
  const TaxonomyBuild b =
      build_taxonomy(spaces, load_relations(config), config.get_bool("partition"), config.get_list("atoms"));
  const fs::path out = out_dir(config);
  write_text(out / "taxonomy.json", format_taxonomy(b.taxonomy, spaces, b.partitioned ? &b.partition : nullptr));
  std::string report;
  for (const auto& v : b.violations) report += v.describe() + '\n';
  if (report.empty()) report = "valid\n";
  write_text(out / "validation.txt", report);
  spdlog::info("{} atoms, {} violations", b.taxonomy.atom_count(), b.violations.size());
}

void cmd_pseudolabel(const RunConfig& config) {
  const auto manifests = load_manifests(config);
  const bool refine = config.is_set("checkpoint");
  std::optional<TaxonomyDocument> doc;
  MicroNetParams params;
  AtomPartition partition;
  const double threshold = train_config(config).refine_threshold;
  if (refine) {
    params = read_checkpoint(config.existing_path("checkpoint"));
    doc = read_taxonomy(config.existing_path("taxonomy"));
    partition = doc->partition ? *doc->partition : trivial_partition(doc->taxonomy);
  }
  const fs::path out = out_dir(config) / "pseudolabels";
  for (const auto& m : manifests) {
    if (is_strong(m.supervision)) continue;
    const TrainingSet set = load_training_set(m);
    std::string summary = "image\tsupervised_pixels\n";
    for (std::size_t i = 0; i < set.examples.size(); ++i) {
      const auto& ex = set.examples[i];
      const PseudoCanvas canvas =
          refine ? refine_with_model(params, ex, doc->taxonomy, partition, m.dataset_id, threshold) : ex.target;
      const std::string stem = m.records[i].image.stem().string();
      write_field(out / m.dataset_id / (stem + ".rast"), canvas);
      int supervised = 0;
      for (int p = 0; p < canvas.pixels(); ++p) supervised += is_unlabeled(canvas, p) ? 0 : 1;
      summary += stem + '\t' + std::to_string(supervised) + '\n';
    }
    write_text(out / m.dataset_id / "summary.tsv", summary);
  }
}

void cmd_train(const RunConfig& config) {
  const TrainConfig tc = train_config(config);
  const auto manifests = load_manifests(config);
  std::vector<TrainingSet> sets;
  std::vector<LabelSpace> spaces;
  for (const auto& m : manifests) {
    sets.push_back(load_training_set(m));
    spaces.push_back(sets.back().space);
  }
  const fs::path out = out_dir(config);

  Taxonomy taxonomy;
  AtomPartition partition;
  if (config.is_set("taxonomy")) {
    TaxonomyDocument doc = read_taxonomy(config.existing_path("taxonomy"));
    taxonomy = std::move(doc.taxonomy);
    partition = doc.partition ? *doc.partition : trivial_partition(taxonomy);
  } else {
    TaxonomyBuild b = build_taxonomy(spaces, load_relations(config), config.get_bool("partition"));
    for (const auto& v : b.violations) spdlog::warn("taxonomy: {}", v.describe());
    write_text(out / "taxonomy.json", format_taxonomy(b.taxonomy, spaces, b.partitioned ? &b.partition : nullptr));
    taxonomy = std::move(b.taxonomy);
    partition = std::move(b.partition);
  }

  BatchPlan plan;
  plan.seed = tc.seed;
  if (config.is_set("quotas")) {
    plan.quotas = config.get_quotas("quotas");
  } else {
    for (const auto& s : sets) plan.quotas.emplace_back(s.dataset_id(), 1);
  }

  const TrainResult result = train_loop(sets, taxonomy, partition, plan, tc, [&](int step, const MicroNetParams& p) {
    write_checkpoint(out / "checkpoints" / step_name(step), p);
  });
  write_text(out / "loss.csv", format_loss_csv(result.losses));
  write_checkpoint(out / "model.ckpt", result.params);
  if (!result.losses.empty()) spdlog::info("final loss {:.6f}", result.losses.back());
}

void cmd_eval(const RunConfig& config) {
  const int n_t = checked_int(config, "n_t", 1);
  std::vector<int> c_values;
  for (const auto& c : config.get_list("c_values")) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
    if (ec != std::errc() || ptr != c.data() + c.size() || v < 1) {
      throw Error(ErrorCode::config, "'c_values' entry '" + c + "' is not a positive integer");
    }
    c_values.push_back(v);
  }
  const fs::path out = out_dir(config);

  LabelSpace space;
  std::optional<ConfusionMatrix> matrix;
  if (config.is_set("gt") || config.is_set("pred")) {
    space = read_label_space(config.existing_path("label_space"));
    const auto gt = existing_paths(config, "gt");
    const auto pred = existing_paths(config, "pred");
    if (gt.size() != pred.size()) throw Error(ErrorCode::config, "'gt' and 'pred' list different numbers of files");
    matrix.emplace(space.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const StrongLabel g = read_label(gt[i]);
      const StrongLabel p = read_label(pred[i]);
      if (g.height != p.height || g.width != p.width) {
        throw Error(ErrorCode::shape_mismatch, gt[i].string() + " and " + pred[i].string() + " differ in shape");
      }
      matrix->accumulate(g, std::vector<int>(p.class_ids.begin(), p.class_ids.end()));
    }
  } else {
    const MicroNetParams params = read_checkpoint(config.existing_path("checkpoint"));
    const TaxonomyDocument doc = read_taxonomy(config.existing_path("taxonomy"));
    const AtomPartition partition = doc.partition ? *doc.partition : trivial_partition(doc.taxonomy);
    const DatasetManifest manifest = read_manifest(config.existing_path("eval_manifest"));
    if (!is_strong(manifest.supervision)) throw Error(ErrorCode::config, "'eval_manifest' must be pixel-labeled");
    const TrainingSet set = load_training_set(manifest);
    space = set.space;
    const GroupMap groups = groups_for_space(doc.taxonomy, space, load_relations(config));
    matrix.emplace(space.size());
    for (std::size_t i = 0; i < set.examples.size(); ++i) {
      const auto& ex = set.examples[i];
      const auto pred = predict_classes(params, ex.image, doc.taxonomy, partition, groups);
      matrix->accumulate(*ex.truth, pred);
      StrongLabel label{ex.image.height, ex.image.width, std::vector<std::uint16_t>(pred.begin(), pred.end())};
      write_label(out / "predictions" / (manifest.records[i].image.stem().string() + ".rast"), label);
    }
  }

  const MetricReport report = make_report(*matrix, space.classes, c_values, n_t);
  write_text(out / "metrics.txt", report.to_table());
  write_text(out / "metrics.json", report.to_json());
  spdlog::info("mIoU {:.4f}", report.miou);
}

void run_command(std::string_view name, const RunConfig& config) {
  if (name == "gen") return cmd_gen(config);
  if (name == "taxonomy") return cmd_taxonomy(config);
  if (name == "pseudolabel") return cmd_pseudolabel(config);
  if (name == "train") return cmd_train(config);
  if (name == "eval") return cmd_eval(config);
  throw Error(ErrorCode::config, "unknown command '" + std::string(name) + "'");
}

}  // namespace htss
