#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "htss/io.hpp"
#include "htss/model.hpp"
#include "htss/rng.hpp"
#include "htss/taxonomy.hpp"
#include "htss/types.hpp"

namespace htss {

struct TrainingExample {
  FeatureRaster image;
  PseudoCanvas target;
  std::optional<StrongLabel> truth;  // strong datasets only
};

struct TrainingSet {
  LabelSpace space;
  std::vector<TrainingExample> examples;

  const std::string& dataset_id() const { return space.dataset_id; }
  Supervision supervision() const { return space.supervision; }
  int size() const { return static_cast<int>(examples.size()); }
};

/// Reads every image and label of a manifest. Weak labels become box/tag
/// canvases, strong labels one-hot canvases.
TrainingSet load_training_set(const DatasetManifest& manifest);

/// Images drawn per step from each dataset, in dataset order.
struct BatchPlan {
  std::vector<std::pair<std::string, int>> quotas;
  std::uint64_t seed = 0;
};

struct BatchSlot {
  int set = 0;
  int example = 0;
};

/// Walks a seeded permutation of every dataset, reshuffling whenever one is
/// used up. Throws UnsatisfiableQuota when a quota names an unknown dataset,
/// exceeds the dataset size, or when nothing is drawn at all.
class BatchSampler {
 public:
  BatchSampler(const BatchPlan& plan, std::span<const TrainingSet> sets);

  std::vector<BatchSlot> next();
  /// Steps until the largest dataset (relative to its quota) is covered once.
  int steps_per_epoch() const { return steps_per_epoch_; }

 private:
  struct Stream {
    int set;
    int quota;
    std::vector<int> order;
    std::size_t cursor;
    Rng rng;
  };
  std::vector<Stream> streams_;
  int steps_per_epoch_ = 0;
};

struct TrainConfig {
  int features = 8;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double init_scale = 0.05;
  int epochs = 1;
  int max_steps = 0;  // 0: no cap
  double refine_threshold = 0.9;
  int refine_warmup = 0;  // steps that train on unrefined weak canvases
  int checkpoint_every = 0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  MicroNetParams params;
  std::vector<double> losses;  // one per step, before the update
  int skipped_steps = 0;       // batches left without any supervised pixel
};

using CheckpointFn = std::function<void(int step, const MicroNetParams& params)>;

MicroNetParams initial_params(const MicroNetShape& shape, const TrainConfig& config);

/// SGD over mixed batches. Strong datasets supervise the main head with
/// their pixel labels; weak datasets supervise it with refined canvases and,
/// when the partition has subclasses, also train the subclass head.
TrainResult train_loop(std::span<const TrainingSet> sets, const Taxonomy& taxonomy, const AtomPartition& partition,
                       const BatchPlan& plan, const TrainConfig& config, const CheckpointFn& on_checkpoint = {});

struct HeadOutputs {
  AtomDistribution main;
  AtomDistribution sub;  // empty when the partition has no subclasses
};

HeadOutputs predict_heads(const MicroNetParams& params, const FeatureRaster& image, const AtomPartition& partition);

/// Group map of `space` over the taxonomy atoms: the stored one when the
/// dataset is part of the taxonomy, otherwise rebuilt from `relations`.
GroupMap groups_for_space(const Taxonomy& taxonomy, const LabelSpace& space, const RelationTable& relations);

/// Per-pixel class ids in the space described by `groups`. Without
/// subclasses the class with the largest summed probability wins; with
/// subclasses the merged atom prediction is mapped to the class containing
/// it (0 when none does).
std::vector<int> predict_classes(const MicroNetParams& params, const FeatureRaster& image, const Taxonomy& taxonomy,
                                 const AtomPartition& partition, const GroupMap& groups);

/// Canvas refined against the model's current class predictions.
PseudoCanvas refine_with_model(const MicroNetParams& params, const TrainingExample& example, const Taxonomy& taxonomy,
                               const AtomPartition& partition, const std::string& dataset_id, double threshold);

}  // namespace htss
