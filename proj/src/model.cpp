#include "htss/model.hpp"

#include <cmath>
#include <string>

#include "htss/error.hpp"
#include "htss/rng.hpp"

namespace htss {

namespace {

// Same-padded 3x3 convolution over HWC rasters.
void conv3x3(const PixelField& in, const std::vector<double>& w, const std::vector<double>& b, PixelField& out) {
  const int cin = in.depth;
  const int cout = out.depth;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      auto o = out.at(y * in.width + x);
      for (int f = 0; f < cout; ++f) o[f] = b[f];
      for (int ky = 0; ky < 3; ++ky) {
        const int yy = y + ky - 1;
        if (yy < 0 || yy >= in.height) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int xx = x + kx - 1;
          if (xx < 0 || xx >= in.width) continue;
          const auto v = in.at(yy * in.width + xx);
          for (int f = 0; f < cout; ++f) {
            const double* wf = w.data() + (static_cast<std::size_t>(f) * cin * 9) + ky * 3 + kx;
            double acc = 0.0;
            for (int c = 0; c < cin; ++c) acc += wf[c * 9] * v[c];
            o[f] += acc;
          }
        }
      }
    }
  }
}

// Accumulates weight/bias grads and (optionally) the input gradient.
void conv3x3_backward(const PixelField& in, const std::vector<double>& w, const PixelField& dout,
                      std::vector<double>& dw, std::vector<double>& db, PixelField* din) {
  const int cin = in.depth;
  const int cout = dout.depth;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      const auto g = dout.at(y * in.width + x);
      for (int f = 0; f < cout; ++f) db[f] += g[f];
      for (int ky = 0; ky < 3; ++ky) {
        const int yy = y + ky - 1;
        if (yy < 0 || yy >= in.height) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int xx = x + kx - 1;
          if (xx < 0 || xx >= in.width) continue;
          const int q = yy * in.width + xx;
          const auto v = in.at(q);
          for (int f = 0; f < cout; ++f) {
            if (g[f] == 0.0) continue;
            const std::size_t base = static_cast<std::size_t>(f) * cin * 9 + ky * 3 + kx;
            for (int c = 0; c < cin; ++c) dw[base + c * 9] += g[f] * v[c];
            if (din) {
              auto d = din->at(q);
              for (int c = 0; c < cin; ++c) d[c] += g[f] * w[base + c * 9];
            }
          }
        }
      }
    }
  }
}

void relu(PixelField& field) {
  for (double& v : field.values) v = v > 0.0 ? v : 0.0;
}

}  // namespace

MicroNetParams MicroNetParams::zeros(const MicroNetShape& shape) {
  if (shape.in_channels <= 0 || shape.features <= 0 || shape.outputs <= 0) {
    throw Error(ErrorCode::invalid_argument, "micro-net dimensions must be positive");
  }
  MicroNetParams p;
  p.shape = shape;
  const auto c = static_cast<std::size_t>(shape.in_channels);
  const auto f = static_cast<std::size_t>(shape.features);
  const auto a = static_cast<std::size_t>(shape.outputs);
  p.conv1_w.assign(f * c * 9, 0.0);
  p.conv1_b.assign(f, 0.0);
  p.conv2_w.assign(f * f * 9, 0.0);
  p.conv2_b.assign(f, 0.0);
  p.head_w.assign(a * f, 0.0);
  p.head_b.assign(a, 0.0);
  return p;
}

MicroNetParams MicroNetParams::random(const MicroNetShape& shape, std::uint64_t seed, double scale) {
  MicroNetParams p = zeros(shape);
  Rng rng(seed);
  p.for_each([&](std::vector<double>& t) {
    for (double& v : t) v = rng.uniform(-scale, scale);
  });
  return p;
}

void MicroNetParams::for_each(const std::function<void(std::vector<double>&)>& fn) {
  fn(conv1_w);
  fn(conv1_b);
  fn(conv2_w);
  fn(conv2_b);
  fn(head_w);
  fn(head_b);
}

void MicroNetParams::for_each(const std::function<void(const std::vector<double>&)>& fn) const {
  fn(conv1_w);
  fn(conv1_b);
  fn(conv2_w);
  fn(conv2_b);
  fn(head_w);
  fn(head_b);
}

std::size_t MicroNetParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::vector<double>& t) { n += t.size(); });
  return n;
}

ForwardResult forward(const MicroNetParams& params, const FeatureRaster& image) {
  const MicroNetShape& s = params.shape;
  if (image.depth != s.in_channels) {
    throw Error(ErrorCode::shape_mismatch, "image has " + std::to_string(image.depth) + " channels, model expects " +
                                               std::to_string(s.in_channels));
  }
  if (image.height < 3 || image.width < 3) throw Error(ErrorCode::shape_mismatch, "image smaller than 3x3");

  ForwardResult r;
  r.cache.shape = s;
  r.cache.revision = params.revision;
  r.cache.owner = &params;
  r.cache.input = image;
  r.cache.hidden1 = PixelField(image.height, image.width, s.features);
  conv3x3(image, params.conv1_w, params.conv1_b, r.cache.hidden1);
  relu(r.cache.hidden1);
  r.cache.hidden2 = PixelField(image.height, image.width, s.features);
  conv3x3(r.cache.hidden1, params.conv2_w, params.conv2_b, r.cache.hidden2);
  relu(r.cache.hidden2);

  r.logits = LogitRaster(image.height, image.width, s.outputs);
  for (int p = 0; p < image.pixels(); ++p) {
    const auto h = r.cache.hidden2.at(p);
    auto o = r.logits.at(p);
    for (int a = 0; a < s.outputs; ++a) {
      const double* w = params.head_w.data() + static_cast<std::size_t>(a) * s.features;
      double acc = params.head_b[a];
      for (int f = 0; f < s.features; ++f) acc += w[f] * h[f];
      o[a] = acc;
    }
  }
  return r;
}

ParamGrads backward(const MicroNetParams& params, const ForwardCache& cache, const LogitRaster& upstream) {
  if (cache.owner != &params || cache.revision != params.revision || cache.shape != params.shape) {
    throw Error(ErrorCode::stale_cache, "forward cache does not belong to the current parameters");
  }
  const MicroNetShape& s = params.shape;
  if (!upstream.same_grid(cache.input) || upstream.depth != s.outputs) {
    throw Error(ErrorCode::shape_mismatch, "upstream gradient shape does not match the logits");
  }
  ParamGrads grads = MicroNetParams::zeros(s);

  PixelField d2(cache.input.height, cache.input.width, s.features);
  for (int p = 0; p < upstream.pixels(); ++p) {
    const auto g = upstream.at(p);
    const auto h = cache.hidden2.at(p);
    auto d = d2.at(p);
    for (int a = 0; a < s.outputs; ++a) {
      if (g[a] == 0.0) continue;
      grads.head_b[a] += g[a];
      double* gw = grads.head_w.data() + static_cast<std::size_t>(a) * s.features;
      const double* w = params.head_w.data() + static_cast<std::size_t>(a) * s.features;
      for (int f = 0; f < s.features; ++f) {
        gw[f] += g[a] * h[f];
        d[f] += g[a] * w[f];
      }
    }
    for (int f = 0; f < s.features; ++f) {
      if (h[f] <= 0.0) d[f] = 0.0;
    }
  }

  PixelField d1(cache.input.height, cache.input.width, s.features);
  conv3x3_backward(cache.hidden1, params.conv2_w, d2, grads.conv2_w, grads.conv2_b, &d1);
  for (int p = 0; p < d1.pixels(); ++p) {
    const auto h = cache.hidden1.at(p);
    auto d = d1.at(p);
    for (int f = 0; f < s.features; ++f) {
      if (h[f] <= 0.0) d[f] = 0.0;
    }
  }
  conv3x3_backward(cache.input, params.conv1_w, d1, grads.conv1_w, grads.conv1_b, nullptr);
  return grads;
}

void accumulate(ParamGrads& grads, const ParamGrads& other) {
  if (grads.shape != other.shape) throw Error(ErrorCode::shape_mismatch, "gradient shapes differ");
  std::vector<const std::vector<double>*> src;
  other.for_each([&](const std::vector<double>& t) { src.push_back(&t); });
  std::size_t i = 0;
  grads.for_each([&](std::vector<double>& t) {
    const auto& o = *src[i++];
    for (std::size_t k = 0; k < t.size(); ++k) t[k] += o[k];
  });
}

OptimizerState::OptimizerState(double lr, double mu, const MicroNetShape& shape)
    : learning_rate(lr), momentum(mu), velocity(MicroNetParams::zeros(shape)) {
  if (!(lr > 0.0)) throw Error(ErrorCode::invalid_argument, "learning rate must be > 0");
  if (!(mu >= 0.0 && mu < 1.0)) throw Error(ErrorCode::invalid_argument, "momentum must be in [0, 1)");
}

void sgd_step(MicroNetParams& params, const ParamGrads& grads, OptimizerState& state) {
  if (params.shape != grads.shape || params.shape != state.velocity.shape) {
    throw Error(ErrorCode::shape_mismatch, "parameter, gradient and velocity shapes differ");
  }
  std::vector<const std::vector<double>*> g;
  grads.for_each([&](const std::vector<double>& t) { g.push_back(&t); });
  std::vector<std::vector<double>*> v;
  state.velocity.for_each([&](std::vector<double>& t) { v.push_back(&t); });
  std::size_t i = 0;
  params.for_each([&](std::vector<double>& p) {
    auto& vel = *v[i];
    const auto& grad = *g[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      vel[k] = state.momentum * vel[k] + grad[k];
      p[k] -= state.learning_rate * vel[k];
    }
    ++i;
  });
  ++params.revision;
}

}  // namespace htss
