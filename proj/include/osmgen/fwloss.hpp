/* Copyright 2026 The osmgen Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Feature-weighted cycle-consistency loss: a masked L1 residual between an
// image and its reconstruction through two generators, with analytic
// gradients. Generators are abstract; toy instantiations are provided.

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "osmgen/error.hpp"
#include "osmgen/raster.hpp"

namespace osmgen {

/// Dense height x width x channels tensor of doubles, row-major with the
/// channel index fastest.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int height, int width, int channels, double fill = 0.0)
      : height_(height), width_(width), channels_(channels) {
    if (height <= 0 || width <= 0 || channels <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "tensor dimensions must be positive");
    }
    values_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return values_.size(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& at(int i, int j, int k) { return values_[offset(i, j, k)]; }
  double at(int i, int j, int k) const { return values_[offset(i, j, k)]; }
  double& operator[](std::size_t n) { return values_[n]; }
  double operator[](std::size_t n) const { return values_[n]; }

  bool same_shape(const Tensor3& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }
  friend bool operator==(const Tensor3& a, const Tensor3& b) {
    return a.same_shape(b) && a.values_ == b.values_;
  }

 private:
  std::size_t offset(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * width_ + j) * channels_ + k;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> values_;
};

/// Samples scaled to [0, 1].
inline Tensor3 tensor_from_tile(const RasterTile& t) {
  Tensor3 out(t.height(), t.width(), t.channels());
  const auto& px = t.pixels();
  for (std::size_t n = 0; n < px.size(); ++n) out[n] = px[n] / 255.0;
  return out;
}

/// Renders to 8-bit: clamp to [0, 1], scale, round half away from zero.
inline RasterTile tensor_to_tile(const Tensor3& t, QuadKey geo = {}) {
  std::vector<std::uint8_t> px(t.size());
  for (std::size_t n = 0; n < px.size(); ++n) {
    const double v = std::clamp(t[n], 0.0, 1.0);
    px[n] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return RasterTile(t.width(), t.height(), t.channels(), std::move(px), std::move(geo));
}

inline FeatureMask mask_union(const FeatureMask& a, const FeatureMask& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::kShapeMismatch, "mask_union of differently sized masks");
  FeatureMask out(a.width(), a.height(),
                  a.class_name() == b.class_name() ? a.class_name() : a.class_name() + "|" + b.class_name());
  for (std::size_t i = 0; i < a.bits().size(); ++i) out.set_index(i, a.get_index(i) || b.get_index(i));
  return out;
}

namespace detail {

inline void check_loss_inputs(const Tensor3& x, const Tensor3& x_hat, const FeatureMask& mask) {
  if (!x.same_shape(x_hat)) throw Error(ErrorCode::kShapeMismatch, "x and x_hat differ in shape");
  if (mask.width() != x.width() || mask.height() != x.height()) {
    throw Error(ErrorCode::kShapeMismatch, "mask spatial size differs from tensors");
  }
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (!std::isfinite(x[n]) || !std::isfinite(x_hat[n])) {
      throw Error(ErrorCode::kNonFinite, "non-finite value in loss input");
    }
  }
}

}  // namespace detail

/// sum_{i,j,k} |x_hat - x| * mask(i,j), summed in row-major order.
inline double fw_loss(const Tensor3& x, const Tensor3& x_hat, const FeatureMask& mask) {
  detail::check_loss_inputs(x, x_hat, mask);
  const int c = x.channels();
  double sum = 0.0;
  for (std::size_t p = 0; p < mask.bits().size(); ++p) {
    if (!mask.get_index(p)) continue;
    for (int k = 0; k < c; ++k) {
      const std::size_t n = p * c + k;
      sum += std::abs(x_hat[n] - x[n]);
    }
  }
  return sum;
}

/// d fw_loss / d x_hat = sign(x_hat - x) * mask, with sign(0) = 0.
inline Tensor3 fw_loss_grad(const Tensor3& x, const Tensor3& x_hat, const FeatureMask& mask) {
  detail::check_loss_inputs(x, x_hat, mask);
  Tensor3 g(x.height(), x.width(), x.channels());
  const int c = x.channels();
  for (std::size_t p = 0; p < mask.bits().size(); ++p) {
    if (!mask.get_index(p)) continue;
    for (int k = 0; k < c; ++k) {
      const std::size_t n = p * c + k;
      const double r = x_hat[n] - x[n];
      g[n] = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
    }
  }
  return g;
}

struct LossSample {
  const Tensor3& x;
  const Tensor3& x_hat;
  const FeatureMask& mask;
};

/// Mini-batch mean of fw_loss; the expectation over the data distribution.
inline double fw_loss_batch(std::span<const LossSample> batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyInput, "empty loss batch");
  double sum = 0.0;
  for (const auto& s : batch) sum += fw_loss(s.x, s.x_hat, s.mask);
  return sum / static_cast<double>(batch.size());
}

/// Per-sample gradients of fw_loss_batch (each divided by the batch size).
inline std::vector<Tensor3> fw_loss_batch_grad(std::span<const LossSample> batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyInput, "empty loss batch");
  std::vector<Tensor3> out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    Tensor3 g = fw_loss_grad(s.x, s.x_hat, s.mask);
    for (auto& v : g.values()) v *= inv;
    out.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generators

/// A shape-preserving differentiable map with trainable parameters.
class GeneratorFn {
 public:
  virtual ~GeneratorFn() = default;

  virtual Tensor3 forward(const Tensor3& in) const = 0;
  /// Vector-Jacobian product with respect to the input.
  virtual Tensor3 vjp_input(const Tensor3& in, const Tensor3& grad_out) const = 0;
  /// Vector-Jacobian product with respect to params().
  virtual std::vector<double> vjp_params(const Tensor3& in, const Tensor3& grad_out) const = 0;

  virtual std::vector<double> params() const = 0;
  virtual void set_params(std::span<const double> p) = 0;
};

class IdentityGenerator final : public GeneratorFn {
 public:
  Tensor3 forward(const Tensor3& in) const override { return in; }
  Tensor3 vjp_input(const Tensor3&, const Tensor3& grad_out) const override { return grad_out; }
  std::vector<double> vjp_params(const Tensor3&, const Tensor3&) const override { return {}; }
  std::vector<double> params() const override { return {}; }
  void set_params(std::span<const double> p) override {
    if (!p.empty()) throw Error(ErrorCode::kShapeMismatch, "identity generator has no parameters");
  }
};

/// Per-pixel channel mixing: out_k = sum_c W[k][c] * in_c + bias_k.
/// Parameters are W (row-major, C x C) followed by bias (C).
class AffineGenerator final : public GeneratorFn {
 public:
  explicit AffineGenerator(int channels) : channels_(channels) {
    params_.assign(static_cast<std::size_t>(channels) * channels + channels, 0.0);
    for (int k = 0; k < channels; ++k) params_[static_cast<std::size_t>(k) * channels + k] = 1.0;
  }

  static AffineGenerator shift(int channels, double bias) {
    AffineGenerator g(channels);
    for (int k = 0; k < channels; ++k) g.params_[static_cast<std::size_t>(channels) * channels + k] = bias;
    return g;
  }

  Tensor3 forward(const Tensor3& in) const override {
    check(in);
    Tensor3 out(in.height(), in.width(), channels_);
    const std::size_t pixels = in.size() / channels_;
    for (std::size_t p = 0; p < pixels; ++p) {
      for (int k = 0; k < channels_; ++k) {
        double v = bias(k);
        for (int c = 0; c < channels_; ++c) v += weight(k, c) * in[p * channels_ + c];
        out[p * channels_ + k] = v;
      }
    }
    return out;
  }

  Tensor3 vjp_input(const Tensor3& in, const Tensor3& grad_out) const override {
    check(in);
    Tensor3 g(in.height(), in.width(), channels_);
    const std::size_t pixels = in.size() / channels_;
    for (std::size_t p = 0; p < pixels; ++p) {
      for (int c = 0; c < channels_; ++c) {
        double v = 0.0;
        for (int k = 0; k < channels_; ++k) v += weight(k, c) * grad_out[p * channels_ + k];
        g[p * channels_ + c] = v;
      }
    }
    return g;
  }

  std::vector<double> vjp_params(const Tensor3& in, const Tensor3& grad_out) const override {
    check(in);
    std::vector<double> g(params_.size(), 0.0);
    const std::size_t pixels = in.size() / channels_;
    const std::size_t nw = static_cast<std::size_t>(channels_) * channels_;
    for (std::size_t p = 0; p < pixels; ++p) {
      for (int k = 0; k < channels_; ++k) {
        const double go = grad_out[p * channels_ + k];
        if (go == 0.0) continue;
        for (int c = 0; c < channels_; ++c) {
          g[static_cast<std::size_t>(k) * channels_ + c] += go * in[p * channels_ + c];
        }
        g[nw + k] += go;
      }
    }
    return g;
  }

  std::vector<double> params() const override { return params_; }
  void set_params(std::span<const double> p) override {
    if (p.size() != params_.size()) throw Error(ErrorCode::kShapeMismatch, "affine parameter count");
    params_.assign(p.begin(), p.end());
  }

 private:
  void check(const Tensor3& in) const {
    if (in.channels() != channels_) throw Error(ErrorCode::kShapeMismatch, "affine generator channel count");
  }
  double weight(int k, int c) const { return params_[static_cast<std::size_t>(k) * channels_ + c]; }
  double bias(int k) const { return params_[static_cast<std::size_t>(channels_) * channels_ + k]; }

  int channels_;
  std::vector<double> params_;
};

/// Depthwise 3x3 convolution with zero padding plus per-channel bias.
/// Parameters: 9 taps per channel (row-major), then C biases. Starts as the
/// identity (centre tap 1).
class Conv3x3Generator final : public GeneratorFn {
 public:
  explicit Conv3x3Generator(int channels) : channels_(channels) {
    params_.assign(static_cast<std::size_t>(channels) * 10, 0.0);
    for (int k = 0; k < channels; ++k) params_[static_cast<std::size_t>(k) * 9 + 4] = 1.0;
  }

  Tensor3 forward(const Tensor3& in) const override {
    check(in);
    Tensor3 out(in.height(), in.width(), channels_);
    for (int i = 0; i < in.height(); ++i)
      for (int j = 0; j < in.width(); ++j)
        for (int k = 0; k < channels_; ++k) {
          double v = params_[static_cast<std::size_t>(channels_) * 9 + k];
          for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
              const int si = i + di, sj = j + dj;
              if (si < 0 || sj < 0 || si >= in.height() || sj >= in.width()) continue;
              v += tap(k, di, dj) * in.at(si, sj, k);
            }
          out.at(i, j, k) = v;
        }
    return out;
  }

  Tensor3 vjp_input(const Tensor3& in, const Tensor3& grad_out) const override {
    check(in);
    Tensor3 g(in.height(), in.width(), channels_);
    for (int i = 0; i < in.height(); ++i)
      for (int j = 0; j < in.width(); ++j)
        for (int k = 0; k < channels_; ++k) {
          const double go = grad_out.at(i, j, k);
          if (go == 0.0) continue;
          for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
              const int si = i + di, sj = j + dj;
              if (si < 0 || sj < 0 || si >= in.height() || sj >= in.width()) continue;
              g.at(si, sj, k) += tap(k, di, dj) * go;
            }
        }
    return g;
  }

  std::vector<double> vjp_params(const Tensor3& in, const Tensor3& grad_out) const override {
    check(in);
    std::vector<double> g(params_.size(), 0.0);
    for (int i = 0; i < in.height(); ++i)
      for (int j = 0; j < in.width(); ++j)
        for (int k = 0; k < channels_; ++k) {
          const double go = grad_out.at(i, j, k);
          if (go == 0.0) continue;
          g[static_cast<std::size_t>(channels_) * 9 + k] += go;
          for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
              const int si = i + di, sj = j + dj;
              if (si < 0 || sj < 0 || si >= in.height() || sj >= in.width()) continue;
              g[static_cast<std::size_t>(k) * 9 + (di + 1) * 3 + (dj + 1)] += go * in.at(si, sj, k);
            }
        }
    return g;
  }

  std::vector<double> params() const override { return params_; }
  void set_params(std::span<const double> p) override {
    if (p.size() != params_.size()) throw Error(ErrorCode::kShapeMismatch, "conv parameter count");
    params_.assign(p.begin(), p.end());
  }

 private:
  void check(const Tensor3& in) const {
    if (in.channels() != channels_) throw Error(ErrorCode::kShapeMismatch, "conv generator channel count");
  }
  double tap(int k, int di, int dj) const {
    return params_[static_cast<std::size_t>(k) * 9 + (di + 1) * 3 + (dj + 1)];
  }

  int channels_;
  std::vector<double> params_;
};

// ---------------------------------------------------------------------------
// Cycle loss

struct CycleLossOptions {
  double weight = 1.0;               // coefficient of this term in a full objective
  std::vector<std::string> classes;  // empty: every palette class
};

struct CycleLossResult {
  double loss = 0.0;
  FeatureMask mask;            // M(y) | M(render(y_hat)), held constant
  Tensor3 y_hat;               // gY(x)
  Tensor3 x_hat;               // gX(gY(x))
  Tensor3 grad_x_hat;          // dL/dx_hat
  std::vector<double> grad_gx;  // dL/d params(gX)
  std::vector<double> grad_gy;  // dL/d params(gY), through gX's input
};

/// Union over the selected classes of the color-threshold masks.
inline FeatureMask feature_mask(const RasterTile& tile, const Palette& palette,
                                const std::vector<std::string>& classes) {
  FeatureMask acc(tile.width(), tile.height(), "features");
  auto add = [&](const FeatureClassConfig& cls) {
    const FeatureMask m = extract_mask(tile, cls);
    for (std::size_t i = 0; i < m.bits().size(); ++i)
      if (m.get_index(i)) acc.set_index(i, true);
  };
  if (classes.empty()) {
    for (const auto& cls : palette.classes) add(cls);
  } else {
    for (const auto& name : classes) add(palette.at(name));
  }
  return acc;
}

/// Evaluates the masked loss for a fixed mask with all gradients. The mask
/// is a constant here; cycle_fw_loss derives it from y and gY(x).
inline CycleLossResult cycle_fw_loss_with_mask(const Tensor3& x, const GeneratorFn& g_y,
                                               const GeneratorFn& g_x, FeatureMask mask,
                                               double weight = 1.0) {
  CycleLossResult r;
  r.y_hat = g_y.forward(x);
  if (!r.y_hat.same_shape(x)) throw Error(ErrorCode::kShapeMismatch, "gY changed the tensor shape");
  r.x_hat = g_x.forward(r.y_hat);
  if (!r.x_hat.same_shape(x)) throw Error(ErrorCode::kShapeMismatch, "gX changed the tensor shape");
  r.mask = std::move(mask);
  r.loss = weight * fw_loss(x, r.x_hat, r.mask);
  r.grad_x_hat = fw_loss_grad(x, r.x_hat, r.mask);
  for (auto& v : r.grad_x_hat.values()) v *= weight;
  r.grad_gx = g_x.vjp_params(r.y_hat, r.grad_x_hat);
  const Tensor3 grad_y_hat = g_x.vjp_input(r.y_hat, r.grad_x_hat);
  r.grad_gy = g_y.vjp_params(x, grad_y_hat);
  return r;
}

/// y_hat = gY(x), x_hat = gX(y_hat), mask = M(y) | M(y_hat rendered to 8
/// bit), loss = weight * fw_loss(x, x_hat, mask).
inline CycleLossResult cycle_fw_loss(const Tensor3& x, const RasterTile& y, const GeneratorFn& g_y,
                                     const GeneratorFn& g_x, const Palette& palette,
                                     const CycleLossOptions& opts = {}) {
  if (y.width() != x.width() || y.height() != x.height()) {
    throw Error(ErrorCode::kShapeMismatch, "map tile and image tensor differ in size");
  }
  const Tensor3 y_hat = g_y.forward(x);
  if (!y_hat.same_shape(x)) throw Error(ErrorCode::kShapeMismatch, "gY changed the tensor shape");
  FeatureMask mask = mask_union(feature_mask(y, palette, opts.classes),
                                feature_mask(tensor_to_tile(y_hat), palette, opts.classes));
  return cycle_fw_loss_with_mask(x, g_y, g_x, std::move(mask), opts.weight);
}

struct CyclePair {
  const Tensor3& x;
  const RasterTile& y;
};

/// Mini-batch mean of cycle_fw_loss; parameter gradients are averaged.
inline CycleLossResult cycle_fw_loss_batch(std::span<const CyclePair> batch, const GeneratorFn& g_y,
                                           const GeneratorFn& g_x, const Palette& palette,
                                           const CycleLossOptions& opts = {}) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyInput, "empty loss batch");
  CycleLossResult total;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    CycleLossResult r = cycle_fw_loss(batch[b].x, batch[b].y, g_y, g_x, palette, opts);
    if (b == 0) {
      total.grad_gx.assign(r.grad_gx.size(), 0.0);
      total.grad_gy.assign(r.grad_gy.size(), 0.0);
    }
    total.loss += r.loss * inv;
    for (std::size_t i = 0; i < r.grad_gx.size(); ++i) total.grad_gx[i] += r.grad_gx[i] * inv;
    for (std::size_t i = 0; i < r.grad_gy.size(); ++i) total.grad_gy[i] += r.grad_gy[i] * inv;
  }
  return total;
}

}  // namespace osmgen
