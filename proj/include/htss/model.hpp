#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "htss/types.hpp"

namespace htss {

struct MicroNetShape {
  int in_channels = 4;
  int features = 8;
  int outputs = 2;

  auto operator<=>(const MicroNetShape&) const = default;
};

/// 3x3 conv -> ReLU -> 3x3 conv -> ReLU -> 1x1 head. Kernel layout is
/// [out][in][ky][kx]; the head is [out][in].
struct MicroNetParams {
  MicroNetShape shape;
  std::vector<double> conv1_w, conv1_b;
  std::vector<double> conv2_w, conv2_b;
  std::vector<double> head_w, head_b;
  /// Bumped by every in-place update; forward caches remember it.
  std::uint64_t revision = 0;

  static MicroNetParams zeros(const MicroNetShape& shape);
  /// Seeded uniform init in [-scale, scale] for every weight and bias.
  static MicroNetParams random(const MicroNetShape& shape, std::uint64_t seed, double scale = 0.05);

  /// Visits the six tensors in a fixed order.
  void for_each(const std::function<void(std::vector<double>&)>& fn);
  void for_each(const std::function<void(const std::vector<double>&)>& fn) const;
  std::size_t parameter_count() const;
};

using ParamGrads = MicroNetParams;

struct ForwardCache {
  MicroNetShape shape;
  std::uint64_t revision = 0;
  const MicroNetParams* owner = nullptr;
  FeatureRaster input;
  PixelField hidden1;  // post-ReLU
  PixelField hidden2;  // post-ReLU
};

struct ForwardResult {
  LogitRaster logits;
  ForwardCache cache;
};

/// Throws ShapeMismatch when channels differ or the image is smaller than 3x3.
ForwardResult forward(const MicroNetParams& params, const FeatureRaster& image);

/// Gradients of a scalar loss given d loss / d logits. Throws StaleCache if
/// the params changed since `cache` was produced.
ParamGrads backward(const MicroNetParams& params, const ForwardCache& cache, const LogitRaster& upstream);

/// grads += other
void accumulate(ParamGrads& grads, const ParamGrads& other);

struct OptimizerState {
  double learning_rate = 0.05;
  double momentum = 0.9;
  ParamGrads velocity;

  OptimizerState(double lr, double mu, const MicroNetShape& shape);
};

/// v <- momentum * v + grads; p <- p - lr * v.
void sgd_step(MicroNetParams& params, const ParamGrads& grads, OptimizerState& state);

}  // namespace htss
