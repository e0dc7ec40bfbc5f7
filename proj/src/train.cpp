#include "htss/train.hpp"

#include <algorithm>
#include <cmath>
#include <spdlog/spdlog.h>

#include "htss/annotations.hpp"
#include "htss/error.hpp"
#include "htss/lossgrad.hpp"
#include "htss/raster.hpp"

namespace htss {

TrainingSet load_training_set(const DatasetManifest& manifest) {
  TrainingSet set;
  set.space = read_label_space(manifest.label_space);
  if (set.space.dataset_id != manifest.dataset_id || set.space.supervision != manifest.supervision) {
    throw Error(ErrorCode::parse, "manifest and label space of '" + manifest.dataset_id + "' disagree");
  }
  const int classes = set.space.size();
  for (const auto& rec : manifest.records) {
    TrainingExample ex;
    static_cast<PixelField&>(ex.image) = read_field(rec.image);
    const int h = ex.image.height;
    const int w = ex.image.width;
    if (is_strong(manifest.supervision)) {
      StrongLabel label = read_label(rec.label);
      if (label.height != h || label.width != w) {
        throw Error(ErrorCode::shape_mismatch, "label " + rec.label.string() + " does not match its image");
      }
      ex.target = strong_to_canvas(label, classes);
      ex.truth = std::move(label);
    } else {
      const WeakLabel weak = read_weak_label(rec.label);
      ex.target = manifest.supervision == Supervision::bbox ? canvas_from_boxes(weak, h, w, classes)
                                                            : canvas_from_tags(weak, h, w, classes);
    }
    set.examples.push_back(std::move(ex));
  }
  return set;
}

BatchSampler::BatchSampler(const BatchPlan& plan, std::span<const TrainingSet> sets) {
  for (const auto& [id, quota] : plan.quotas) {
    const auto it = std::find_if(sets.begin(), sets.end(), [&](const TrainingSet& s) { return s.dataset_id() == id; });
    if (it == sets.end()) throw Error(ErrorCode::unsatisfiable_quota, "quota names unknown dataset '" + id + "'");
    if (quota < 0 || quota > it->size()) {
      throw Error(ErrorCode::unsatisfiable_quota, "quota " + std::to_string(quota) + " for '" + id + "' exceeds its " +
                                                      std::to_string(it->size()) + " images");
    }
  }
  for (std::size_t i = 0; i < sets.size(); ++i) {
    int quota = 0;
    for (const auto& [id, q] : plan.quotas) {
      if (id == sets[i].dataset_id()) quota = q;
    }
    if (quota == 0) continue;
    Stream s{static_cast<int>(i), quota, {}, 0, Rng(plan.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)))};
    s.order.resize(static_cast<std::size_t>(sets[i].size()));
    for (std::size_t k = 0; k < s.order.size(); ++k) s.order[k] = static_cast<int>(k);
    s.rng.shuffle(std::span<int>(s.order));
    steps_per_epoch_ = std::max(steps_per_epoch_, (sets[i].size() + quota - 1) / quota);
    streams_.push_back(std::move(s));
  }
  if (streams_.empty()) throw Error(ErrorCode::unsatisfiable_quota, "batch plan draws no images");
}

std::vector<BatchSlot> BatchSampler::next() {
  std::vector<BatchSlot> batch;
  for (auto& s : streams_) {
    for (int k = 0; k < s.quota; ++k) {
      if (s.cursor == s.order.size()) {
        s.rng.shuffle(std::span<int>(s.order));
        s.cursor = 0;
      }
      batch.push_back({s.set, s.order[s.cursor++]});
    }
  }
  return batch;
}

MicroNetParams initial_params(const MicroNetShape& shape, const TrainConfig& config) {
  return MicroNetParams::random(shape, config.seed, config.init_scale);
}

HeadOutputs predict_heads(const MicroNetParams& params, const FeatureRaster& image, const AtomPartition& partition) {
  if (params.shape.outputs != partition.output_count()) {
    throw Error(ErrorCode::shape_mismatch, "model has " + std::to_string(params.shape.outputs) +
                                               " outputs, partition needs " + std::to_string(partition.output_count()));
  }
  const LogitRaster logits = forward(params, image).logits;
  HeadOutputs out;
  out.main = softmax_atoms(logits, 0, partition.ap_count());
  if (partition.has_subclasses()) out.sub = softmax_atoms(logits, partition.ap_count(), partition.s_count());
  return out;
}

namespace {

void check_training_inputs(std::span<const TrainingSet> sets, const Taxonomy& taxonomy,
                           const AtomPartition& partition, const TrainConfig& config) {
  if (config.learning_rate <= 0.0 || !std::isfinite(config.learning_rate)) {
    throw Error(ErrorCode::invalid_argument, "learning rate must be positive");
  }
  if (config.epochs < 1 || config.max_steps < 0 || config.refine_warmup < 0 || config.checkpoint_every < 0) {
    throw Error(ErrorCode::invalid_argument, "bad step counts in training config");
  }
  if (config.refine_threshold < 0.0 || config.refine_threshold > 1.0) {
    throw Error(ErrorCode::invalid_argument, "refine threshold must lie in [0, 1]");
  }
  if (sets.empty()) throw Error(ErrorCode::invalid_argument, "no training data");
  const int channels = sets.front().examples.empty() ? 0 : sets.front().examples.front().image.depth;
  for (const auto& s : sets) {
    if (s.space.size() != taxonomy.groups_for(s.dataset_id()).size()) {
      throw Error(ErrorCode::shape_mismatch, "taxonomy groups of '" + s.dataset_id() + "' do not match its label space");
    }
    for (const auto& ex : s.examples) {
      if (ex.image.depth != channels) throw Error(ErrorCode::shape_mismatch, "images disagree on channel count");
    }
  }
  if (partition.output_count() < 1) throw Error(ErrorCode::invalid_argument, "partition has no outputs");
}

}  // namespace

TrainResult train_loop(std::span<const TrainingSet> sets, const Taxonomy& taxonomy, const AtomPartition& partition,
                       const BatchPlan& plan, const TrainConfig& config, const CheckpointFn& on_checkpoint) {
  check_training_inputs(sets, taxonomy, partition, config);
  BatchSampler sampler(plan, sets);

  const int channels = sets.front().examples.front().image.depth;
  const MicroNetShape shape{channels, config.features, partition.output_count()};
  TrainResult result;
  result.params = initial_params(shape, config);
  OptimizerState optimizer(config.learning_rate, config.momentum, shape);

  std::vector<HeadGroups> heads;
  std::vector<std::vector<bool>> sub_keep;
  for (const auto& s : sets) {
    heads.push_back(head_groups(taxonomy, partition, s.dataset_id()));
    std::vector<bool> keep;
    for (const auto& g : heads.back().sub.classes) keep.push_back(!g.empty());
    sub_keep.push_back(std::move(keep));
  }

  long long total = static_cast<long long>(config.epochs) * sampler.steps_per_epoch();
  if (config.max_steps > 0) total = std::min<long long>(total, config.max_steps);
  const int ap = partition.ap_count();
  spdlog::info("training {} steps ({} per epoch), {} outputs", total, sampler.steps_per_epoch(), shape.outputs);

  for (int step = 1; step <= total; ++step) {
    const auto batch = sampler.next();
    const std::size_t n = batch.size();
    std::vector<ForwardResult> fwd;
    std::vector<HeadOutputs> probs;
    std::vector<PseudoCanvas> refined;
    std::vector<PseudoCanvas> restricted;
    fwd.reserve(n);
    probs.reserve(n);
    refined.reserve(n);
    restricted.reserve(n);

    struct Slot {
      std::size_t image;
      bool sub;
    };
    std::vector<BatchItem> items;
    std::vector<Slot> slots;
    for (std::size_t b = 0; b < n; ++b) {
      const TrainingSet& set = sets[static_cast<std::size_t>(batch[b].set)];
      const TrainingExample& ex = set.examples[static_cast<std::size_t>(batch[b].example)];
      const HeadGroups& hg = heads[static_cast<std::size_t>(batch[b].set)];
      fwd.push_back(forward(result.params, ex.image));
      HeadOutputs h;
      h.main = softmax_atoms(fwd.back().logits, 0, ap);
      if (partition.has_subclasses()) h.sub = softmax_atoms(fwd.back().logits, ap, partition.s_count());
      probs.push_back(std::move(h));

      const PseudoCanvas* target = &ex.target;
      const bool weak = !is_strong(set.supervision());
      if (weak && step > config.refine_warmup) {
        refined.push_back(refine_canvas(ex.target, accumulate_groups(probs.back().main, hg.main), config.refine_threshold));
        target = &refined.back();
      }
      items.push_back({target, &probs.back().main, &hg.main, set.supervision()});
      slots.push_back({b, false});
      if (weak && partition.has_subclasses()) {
        const auto& keep = sub_keep[static_cast<std::size_t>(batch[b].set)];
        if (std::find(keep.begin(), keep.end(), true) != keep.end()) {
          restricted.push_back(restrict_canvas(*target, keep));
          items.push_back({&restricted.back(), &probs.back().sub, &hg.sub, set.supervision()});
          slots.push_back({b, true});
        }
      }
    }

    BatchLossResult loss;
    try {
      loss = batch_loss(items);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_supervised_pixels) throw;
      spdlog::warn("step {}: no supervised pixels, update skipped", step);
      ++result.skipped_steps;
      result.losses.push_back(0.0);
      continue;
    }
    if (!std::isfinite(loss.loss)) {
      throw Error(ErrorCode::numeric_failure, "loss became non-finite at step " + std::to_string(step));
    }

    std::vector<LogitRaster> upstream;
    upstream.reserve(n);
    for (std::size_t b = 0; b < n; ++b) {
      const auto& l = fwd[b].logits;
      upstream.emplace_back(l.height, l.width, l.depth);
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
      LogitRaster& up = upstream[slots[i].image];
      const LogitRaster& g = loss.grads[i];
      const int offset = slots[i].sub ? ap : 0;
      for (int p = 0; p < up.pixels(); ++p) {
        auto dst = up.at(p);
        const auto src = g.at(p);
        for (int j = 0; j < g.depth; ++j) dst[static_cast<std::size_t>(offset + j)] += src[static_cast<std::size_t>(j)];
      }
    }
    ParamGrads grads = ParamGrads::zeros(shape);
    for (std::size_t b = 0; b < n; ++b) accumulate(grads, backward(result.params, fwd[b].cache, upstream[b]));
    sgd_step(result.params, grads, optimizer);
    result.params.for_each([&](const std::vector<double>& t) {
      for (double v : t) {
        if (!std::isfinite(v)) throw Error(ErrorCode::numeric_failure, "parameters became non-finite at step " + std::to_string(step));
      }
    });

    result.losses.push_back(loss.loss);
    spdlog::debug("step {} loss {:.6f} (strong {:.6f}, weak {:.6f})", step, loss.loss, loss.strong_loss, loss.weak_loss);
    if (on_checkpoint && config.checkpoint_every > 0 && step % config.checkpoint_every == 0) {
      on_checkpoint(step, result.params);
    }
  }
  return result;
}

GroupMap groups_for_space(const Taxonomy& taxonomy, const LabelSpace& space, const RelationTable& relations) {
  for (const auto& d : taxonomy.datasets) {
    if (d.dataset_id == space.dataset_id && d.groups.size() == space.size()) return d.groups;
  }
  const LabelSpace spaces[] = {space};
  return build_group_sets(taxonomy.atoms, spaces, relations).datasets.front().groups;
}

std::vector<int> predict_classes(const MicroNetParams& params, const FeatureRaster& image, const Taxonomy& taxonomy,
                                 const AtomPartition& partition, const GroupMap& groups) {
  const HeadOutputs heads = predict_heads(params, image, partition);
  const int pixels = image.pixels();
  std::vector<int> out(static_cast<std::size_t>(pixels), 0);
  if (!partition.has_subclasses()) {
    const PixelField s = accumulate_groups(heads.main, groups);
    for (int p = 0; p < pixels; ++p) {
      const auto v = s.at(p);
      int best = 1;
      for (int m = 2; m < s.depth; ++m) {
        if (v[static_cast<std::size_t>(m)] > v[static_cast<std::size_t>(best)]) best = m;
      }
      out[static_cast<std::size_t>(p)] = s.depth > 1 ? best : 0;
    }
    return out;
  }

  // Final output id -> taxonomy atom -> first class whose group holds it.
  std::vector<int> class_of_output(static_cast<std::size_t>(partition.output_count()), 0);
  for (int o = 0; o < partition.output_count(); ++o) {
    const std::string& name = o < partition.ap_count() ? partition.ap_atoms[static_cast<std::size_t>(o)]
                                                       : partition.s_atoms[static_cast<std::size_t>(o - partition.ap_count())];
    const int atom = taxonomy.atom_index(name);
    if (atom < 0) continue;
    for (int m = 1; m < groups.size(); ++m) {
      if (std::binary_search(groups[m].begin(), groups[m].end(), atom)) {
        class_of_output[static_cast<std::size_t>(o)] = m;
        break;
      }
    }
  }
  const auto merged = merge_subclass_predictions(heads.main, heads.sub, partition);
  for (int p = 0; p < pixels; ++p) out[static_cast<std::size_t>(p)] = class_of_output[static_cast<std::size_t>(merged[static_cast<std::size_t>(p)])];
  return out;
}

PseudoCanvas refine_with_model(const MicroNetParams& params, const TrainingExample& example, const Taxonomy& taxonomy,
                               const AtomPartition& partition, const std::string& dataset_id, double threshold) {
  const HeadOutputs heads = predict_heads(params, example.image, partition);
  const HeadGroups hg = head_groups(taxonomy, partition, dataset_id);
  return refine_canvas(example.target, accumulate_groups(heads.main, hg.main), threshold);
}

}  // namespace htss
