// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#include "egt/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "egt/error.hpp"
#include "egt/rng.hpp"

namespace egt {
namespace {

constexpr int kNumClasses = 9;
constexpr double kPi = 3.14159265358979323846;

struct ShapeSpec {
  int kind;         // 0 circle, 1 square, 2 triangle
  double cx, cy, r; // pixels
  double angle;     // radians
};

bool inside_shape(const ShapeSpec& s, double px, double py) {
  const double dx = px - s.cx;
  const double dy = py - s.cy;
  switch (s.kind) {
    case 0:
      return dx * dx + dy * dy <= s.r * s.r;
    case 1: {
      const double c = std::cos(-s.angle), sn = std::sin(-s.angle);
      const double rx = dx * c - dy * sn;
      const double ry = dx * sn + dy * c;
      const double half = s.r * 0.9;
      return std::abs(rx) <= half && std::abs(ry) <= half;
    }
    default: {
      // Equilateral triangle with circumradius 1.15*r.
      const double cr = s.r * 1.15;
      double vx[3], vy[3];
      for (int v = 0; v < 3; ++v) {
        const double a = s.angle + kPi / 2 + v * (2 * kPi / 3);
        vx[v] = s.cx + cr * std::cos(a);
        vy[v] = s.cy - cr * std::sin(a);
      }
      // Point-in-triangle via consistent cross product signs.
      double sign[3];
      for (int v = 0; v < 3; ++v) {
        const int u = (v + 1) % 3;
        sign[v] = (vx[u] - vx[v]) * (py - vy[v]) - (vy[u] - vy[v]) * (px - vx[v]);
      }
      const bool has_neg = sign[0] < 0 || sign[1] < 0 || sign[2] < 0;
      const bool has_pos = sign[0] > 0 || sign[1] > 0 || sign[2] > 0;
      return !(has_neg && has_pos);
    }
  }
}

void fill_shape(float* img, int size, const ShapeSpec& s, const double rgb[3]) {
  const int y0 = std::max(0, static_cast<int>(s.cy - s.r * 1.4));
  const int y1 = std::min(size - 1, static_cast<int>(s.cy + s.r * 1.4));
  const int x0 = std::max(0, static_cast<int>(s.cx - s.r * 1.4));
  const int x1 = std::min(size - 1, static_cast<int>(s.cx + s.r * 1.4));
  const int plane = size * size;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (!inside_shape(s, x + 0.5, y + 0.5)) continue;
      for (int ch = 0; ch < 3; ++ch) {
        img[ch * plane + y * size + x] = static_cast<float>(rgb[ch]);
      }
    }
  }
}

// Per-sample rendering knobs. `easy` is one fixed regime; `mixed` draws a
// moderate majority plus a hard tail so that most samples suit early exits
// while the tail keeps deep exits and the consistency regularizer busy.
struct RenderParams {
  double bg_lo, bg_hi, bg_noise;
  int max_blobs;
  double dom_lo, dom_hi, off_hi;
  double r_lo, r_hi;
  bool canonical;      // centered, unrotated
  double occlusion_p;
  double speckle;
};

RenderParams pick_params(Difficulty difficulty, Rng& rng) {
  if (difficulty == Difficulty::kEasy) {
    return {0.25, 0.40, 0.04, 0, 0.85, 1.00, 0.20, 0.26, 0.32, true, 0.0, 0.02};
  }
  if (rng.uniform() < 0.7) {
    // moderate: jittered and rotated but high contrast, clutter-free
    return {0.22, 0.42, 0.06, 1, 0.78, 0.98, 0.25, 0.20, 0.32, false, 0.0, 0.03};
  }
  // hard: low contrast, clutter, occlusion
  return {0.20, 0.50, 0.11, 2, 0.55, 0.85, 0.38, 0.14, 0.26, false, 0.6, 0.055};
}

void render_sample(float* img, int size, int label, Rng& rng,
                   Difficulty difficulty) {
  const RenderParams params = pick_params(difficulty, rng);
  const int plane = size * size;

  // Neutral noisy background.
  const double bg = rng.uniform(params.bg_lo, params.bg_hi);
  for (int ch = 0; ch < 3; ++ch) {
    for (int i = 0; i < plane; ++i) {
      img[ch * plane + i] = static_cast<float>(
          bg + rng.uniform(-params.bg_noise, params.bg_noise));
    }
  }

  // Gray distractor blobs never carry class information.
  if (params.max_blobs > 0) {
    const int blobs = static_cast<int>(
        rng.uniform_index(static_cast<std::uint64_t>(params.max_blobs) + 1));
    for (int bidx = 0; bidx < blobs; ++bidx) {
      ShapeSpec blob;
      blob.kind = 0;
      blob.r = rng.uniform(0.04, 0.09) * size;
      blob.cx = rng.uniform(blob.r, size - blob.r);
      blob.cy = rng.uniform(blob.r, size - blob.r);
      blob.angle = 0.0;
      const double g = rng.uniform(0.1, 0.75);
      const double gray[3] = {g, g, g};
      fill_shape(img, size, blob, gray);
    }
  }

  // The class shape.
  ShapeSpec shape;
  shape.kind = label % 3;
  const int band = label / 3;
  shape.r = rng.uniform(params.r_lo, params.r_hi) * size;
  if (params.canonical) {
    shape.cx = size / 2.0 + rng.uniform(-0.06, 0.06) * size;
    shape.cy = size / 2.0 + rng.uniform(-0.06, 0.06) * size;
    shape.angle = 0.0;
  } else {
    const double margin = shape.r * 1.2;
    shape.cx = rng.uniform(margin, size - margin);
    shape.cy = rng.uniform(margin, size - margin);
    shape.angle = rng.uniform(0.0, 2 * kPi);
  }
  double rgb[3];
  const double dominant = rng.uniform(params.dom_lo, params.dom_hi);
  for (int ch = 0; ch < 3; ++ch) {
    rgb[ch] = ch == band ? dominant : rng.uniform(0.05, params.off_hi);
  }
  fill_shape(img, size, shape, rgb);

  // Occlusion bar across the shape.
  if (params.occlusion_p > 0 && rng.uniform() < params.occlusion_p) {
    const bool horizontal = rng.uniform() < 0.5;
    const double thickness = rng.uniform(0.06, 0.14) * size;
    const double pos = (horizontal ? shape.cy : shape.cx) +
                       rng.uniform(-0.5, 0.5) * shape.r;
    const double g = rng.uniform(0.1, 0.6);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double axis = horizontal ? y + 0.5 : x + 0.5;
        if (std::abs(axis - pos) <= thickness / 2) {
          for (int ch = 0; ch < 3; ++ch) {
            img[ch * plane + y * size + x] = static_cast<float>(g);
          }
        }
      }
    }
  }

  // Per-pixel speckle and clamp.
  for (int i = 0; i < 3 * plane; ++i) {
    const double v = img[i] + rng.uniform(-params.speckle, params.speckle);
    img[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
}

}  // namespace

Difficulty parse_difficulty(const std::string& name) {
  if (name == "easy") return Difficulty::kEasy;
  if (name == "mixed") return Difficulty::kMixed;
  throw ConfigError("difficulty", "expected 'easy' or 'mixed', got '" + name + "'");
}

Dataset gen_synthetic(int num_per_class, int image_size, std::uint64_t seed,
                      Difficulty difficulty) {
  if (num_per_class < 1) {
    throw ConfigError("per_class", "must be >= 1");
  }
  if (image_size < 8) {
    throw ConfigError("image_size", "must be >= 8");
  }
  Dataset d;
  d.channels = 3;
  d.height = image_size;
  d.width = image_size;
  d.num_classes = kNumClasses;
  const std::int64_t count = static_cast<std::int64_t>(num_per_class) * kNumClasses;
  d.images.resize(static_cast<std::size_t>(count) * 3 * image_size * image_size);
  d.labels.resize(static_cast<std::size_t>(count));
  const std::uint64_t mode_tag = difficulty == Difficulty::kEasy ? 1 : 2;
  for (std::int64_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % kNumClasses);
    d.labels[static_cast<std::size_t>(i)] = label;
    // Each sample draws from its own stream so the dataset is a pure
    // function of (seed, index) regardless of generation order.
    Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(i) << 2) | mode_tag));
    render_sample(d.images.data() + i * d.sample_size(), image_size, label,
                  rng, difficulty);
  }
  return d;
}

}  // namespace egt
