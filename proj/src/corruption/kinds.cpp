// Copyright (c) 2026, The avikit Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <tuple>

#include "avikit/core/error.hpp"
#include "avikit/core/image_io.hpp"
#include "avikit/core/rng.hpp"
#include "avikit/corruption/corruption.hpp"
#include "filters.hpp"

namespace avikit {

using detail::Edge;
using detail::Plane;

namespace {

constexpr double kReferenceSize = 224.0;
constexpr std::uint64_t kFogSeed = 0x666f67ULL;
constexpr std::uint64_t kElasticSeed = 0x656c6173746963ULL;
constexpr std::uint64_t kFrostSeed = 0x66726f7374ULL;
constexpr double kMotionAngle = 0.0;

using Row = std::array<double, 7>;

// One row per kind (enum order), one cell per level 1/3/5.
// clang-format off
const std::array<std::array<Row, 3>, kCorruptionKindCount> kTable = {{
    /* Fog: strength, wibble decay */        {{{1.5, 2.0}, {2.5, 1.7}, {3.0, 1.4}}},
    /* Brightness: value shift */            {{{0.1}, {0.3}, {0.5}}},
    /* Contrast: factor */                   {{{0.4}, {0.2}, {0.05}}},
    /* DefocusBlur: radius, alias sigma */   {{{3, 0.1}, {6, 0.5}, {10, 0.5}}},
    /* Elastic: alpha, sigma, affine */      {{{2.0, 0.7, 0.1}, {0.05, 0.01, 0.02}, {0.12, 0.01, 0.02}}},
    /* Frost: image weight, frost weight */  {{{1.0, 0.4}, {0.7, 0.7}, {0.6, 0.75}}},
    /* GaussianBlur: sigma */                {{{1}, {3}, {6}}},
    /* GaussianNoise: sigma */               {{{0.08}, {0.18}, {0.38}}},
    /* GlassBlur: sigma, delta, iterations */{{{0.7, 1, 2}, {1.0, 2, 3}, {1.5, 4, 2}}},
    /* ImpulseNoise: amount */               {{{0.03}, {0.09}, {0.27}}},
    /* Jpeg: quality */                      {{{25}, {15}, {7}}},
    /* MotionBlur: radius, sigma */          {{{10, 3}, {15, 8}, {20, 15}}},
    /* Pixelate: scale */                    {{{0.6}, {0.4}, {0.25}}},
    /* Saturate: factor, offset */           {{{0.3, 0.0}, {2.0, 0.0}, {20.0, 1.0}}},
    /* ShotNoise: photons */                 {{{60}, {12}, {3}}},
    /* Snow: mean, sd, zoom, cutoff, radius, sigma, blend */
                                             {{{0.1, 0.3, 3.0, 0.5, 10, 4, 0.8},
                                               {0.55, 0.3, 4.0, 0.9, 12, 8, 0.7},
                                               {0.55, 0.3, 2.5, 0.85, 12, 12, 0.55}}},
    /* Spatter: mean, sd, sigma, cutoff, intensity, mud */
                                             {{{0.65, 0.3, 4, 0.69, 0.6, 0},
                                               {0.65, 0.3, 2, 0.68, 0.5, 0},
                                               {0.67, 0.4, 1, 0.65, 1.5, 1}}},
    /* SpeckleNoise: sigma */                {{{0.15}, {0.35}, {0.6}}},
    /* ZoomBlur: first, stop, step */        {{{1.0, 1.11, 0.01}, {1.0, 1.21, 0.02}, {1.0, 1.31, 0.03}}},
}};
// clang-format on

const char* const kParamNames[kCorruptionKindCount][7] = {
    {"strength", "wibble_decay"},
    {"shift"},
    {"factor"},
    {"radius", "alias_sigma"},
    {"alpha", "sigma", "affine"},
    {"image_weight", "frost_weight"},
    {"sigma"},
    {"sigma"},
    {"sigma", "max_delta", "iterations"},
    {"amount"},
    {"quality"},
    {"radius", "sigma"},
    {"scale"},
    {"factor", "offset"},
    {"photons"},
    {"mean", "sd", "zoom", "cutoff", "radius", "sigma", "blend"},
    {"mean", "sd", "sigma", "cutoff", "intensity", "mud"},
    {"sigma"},
    {"first", "stop", "step"},
};

constexpr std::array<std::string_view, kCorruptionKindCount> kNames = {
    "Fog",          "Brightness", "Contrast",  "DefocusBlur", "Elastic",   "Frost",        "GaussianBlur",
    "GaussianNoise", "GlassBlur", "ImpulseNoise", "Jpeg",      "MotionBlur", "Pixelate",    "Saturate",
    "ShotNoise",    "Snow",       "Spatter",   "SpeckleNoise", "ZoomBlur",
};

std::string canonical(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

void require_extent(const UnitImage& x, std::size_t kernel, CorruptionKind kind) {
  if (x.height < kernel || x.width < kernel) {
    throw Error(ErrorCode::ImageTooSmall, std::string(to_string(kind)) + " needs " + std::to_string(kernel) +
                                              " pixels per side, image is " + std::to_string(x.height) + "x" +
                                              std::to_string(x.width));
  }
}

std::size_t gaussian_extent(double sigma) { return detail::gaussian_kernel(sigma).size(); }

// Variance gain of a 2-D Gaussian blur applied to white noise.
double kernel_energy(double sigma) {
  double e = 0.0;
  for (double k : detail::gaussian_kernel(sigma)) e += k * k;
  return e * e;
}

template <typename T, typename Make>
std::shared_ptr<const T> cached(std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::shared_ptr<const T>>& cache,
                                std::mutex& mu, std::tuple<std::size_t, std::size_t, std::size_t> key, Make make) {
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto value = std::make_shared<const T>(make());
  std::lock_guard lock(mu);
  return cache.emplace(key, std::move(value)).first->second;
}

// ---- noise ---------------------------------------------------------------

UnitImage gaussian_noise(UnitImage x, const Row& p, Rng& rng) {
  for (double& v : x.data) v += rng.normal(0.0, p[0]);
  return x;
}

UnitImage shot_noise(UnitImage x, const Row& p, Rng& rng) {
  for (double& v : x.data) v = static_cast<double>(rng.poisson(std::max(v, 0.0) * p[0])) / p[0];
  return x;
}

UnitImage impulse_noise(UnitImage x, const Row& p, Rng& rng) {
  for (double& v : x.data) {
    if (rng.uniform() < p[0]) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
  }
  return x;
}

UnitImage speckle_noise(UnitImage x, const Row& p, Rng& rng) {
  for (double& v : x.data) v += v * rng.normal(0.0, p[0]);
  return x;
}

// ---- blur ----------------------------------------------------------------

UnitImage gaussian_blur(UnitImage x, const Row& p, double s) {
  const double sigma = p[0] * s;
  require_extent(x, gaussian_extent(sigma), CorruptionKind::GaussianBlur);
  detail::gaussian_blur(x, sigma);
  return x;
}

UnitImage glass_blur(UnitImage x, const Row& p, Rng& rng) {
  const double sigma = p[0];
  // Glass blur works at pixel scale: swap distances and blur stay in pixels.
  const long delta = static_cast<long>(p[1]);
  const int iterations = static_cast<int>(p[2]);
  require_extent(x, std::max<std::size_t>(gaussian_extent(sigma), static_cast<std::size_t>(2 * delta + 2)),
                 CorruptionKind::GlassBlur);
  detail::gaussian_blur(x, sigma);
  const long h = static_cast<long>(x.height), w = static_cast<long>(x.width);
  for (int it = 0; it < iterations; ++it) {
    for (long y = h - delta; y > delta; --y) {
      for (long xx = w - delta; xx > delta; --xx) {
        const long dx = static_cast<long>(rng.below(static_cast<std::size_t>(2 * delta))) - delta;
        const long dy = static_cast<long>(rng.below(static_cast<std::size_t>(2 * delta))) - delta;
        for (std::size_t c = 0; c < kChannels; ++c) std::swap(x.at(y, xx, c), x.at(y + dy, xx + dx, c));
      }
    }
  }
  detail::gaussian_blur(x, sigma);
  return x;
}

UnitImage defocus_blur(const UnitImage& x, const Row& p, double s) {
  const double radius = std::max(1.0, p[0] * s);
  const double alias = p[1] * s;
  // The reference softens the disk with a 3x3 kernel up to radius 8, 5x5 beyond.
  const int alias_r = p[0] <= 8 ? 1 : 2;
  const int r = static_cast<int>(std::floor(radius));
  require_extent(x, static_cast<std::size_t>(2 * (r + alias_r) + 1), CorruptionKind::DefocusBlur);

  // Disk as horizontal spans over per-row prefix sums.
  std::vector<int> span(static_cast<std::size_t>(2 * r + 1));
  double area = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    span[dy + r] = static_cast<int>(std::floor(std::sqrt(radius * radius - dy * dy) + 1e-9));
    area += 2 * span[dy + r] + 1;
  }
  const long h = static_cast<long>(x.height), w = static_cast<long>(x.width);
  const long pad = r;
  const std::size_t pw = x.width + 2 * static_cast<std::size_t>(pad) + 1;
  std::vector<double> prefix(x.height * pw * kChannels);
  for (long y = 0; y < h; ++y) {
    double* row = &prefix[static_cast<std::size_t>(y) * pw * kChannels];
    for (long i = 0; i + 1 < static_cast<long>(pw); ++i) {
      const std::size_t sx = detail::edge_index(i - pad, x.width, Edge::Reflect);
      for (std::size_t c = 0; c < kChannels; ++c) row[(i + 1) * kChannels + c] = row[i * kChannels + c] + x.at(y, sx, c);
    }
  }
  UnitImage out(x.height, x.width);
  for (long y = 0; y < h; ++y) {
    for (long xx = 0; xx < w; ++xx) {
      double acc[kChannels] = {0, 0, 0};
      for (int dy = -r; dy <= r; ++dy) {
        const std::size_t sy = detail::edge_index(y + dy, x.height, Edge::Reflect);
        const double* row = &prefix[sy * pw * kChannels];
        const long lo = xx - span[dy + r] + pad, hi = xx + span[dy + r] + pad + 1;
        for (std::size_t c = 0; c < kChannels; ++c) acc[c] += row[hi * kChannels + c] - row[lo * kChannels + c];
      }
      for (std::size_t c = 0; c < kChannels; ++c) out.at(y, xx, c) = acc[c] / area;
    }
  }
  if (alias > 0.0) detail::gaussian_blur(out, alias, Edge::Reflect, alias_r / alias);
  return out;
}

UnitImage motion_blur(const UnitImage& x, const Row& p, double s) {
  const int radius = std::max(1, static_cast<int>(std::lround(p[0] * s)));
  require_extent(x, static_cast<std::size_t>(radius + 1), CorruptionKind::MotionBlur);
  return detail::motion_blur(x, radius, std::max(p[1] * s, 1e-3), kMotionAngle);
}

std::vector<double> arange(double first, double stop, double step) {
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::ceil((stop - first) / step - 1e-9));
  for (std::size_t i = 0; i < n; ++i) out.push_back(first + step * static_cast<double>(i));
  return out;
}

UnitImage zoom_blur(const UnitImage& x, const Row& p) {
  const auto zooms = arange(p[0], p[1], p[2]);
  UnitImage out(x.height, x.width);
  for (double z : zooms) {
    const UnitImage zoomed = detail::zoom_center(x, z);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += zoomed.data[i];
  }
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = (x.data[i] + out.data[i]) / static_cast<double>(zooms.size() + 1);
  }
  return out;
}

// ---- weather -------------------------------------------------------------

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 2;
  while (p < n) p <<= 1;
  return p;
}

UnitImage fog(UnitImage x, const Row& p, std::size_t level) {
  static std::mutex mu;
  static std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::shared_ptr<const Plane>> cache;
  const std::size_t size = next_pow2(std::max(x.height, x.width));
  const auto fractal = cached<Plane>(cache, mu, {size, level, 0},
                                     [&] { return detail::plasma_fractal(size, p[1], kFogSeed); });
  const double max_val = *std::max_element(x.data.begin(), x.data.end());
  for (std::size_t y = 0; y < x.height; ++y) {
    for (std::size_t xx = 0; xx < x.width; ++xx) {
      const double f = p[0] * fractal->at(y, xx);
      for (std::size_t c = 0; c < kChannels; ++c) {
        x.at(y, xx, c) = (x.at(y, xx, c) + f) * max_val / (max_val + p[0]);
      }
    }
  }
  return x;
}

// Lattice value noise with smooth interpolation; in [0, 1).
double value_noise(double u, double v, std::uint64_t seed) {
  const double fu = std::floor(u), fv = std::floor(v);
  const auto iu = static_cast<std::int64_t>(fu), iv = static_cast<std::int64_t>(fv);
  const auto corner = [&](std::int64_t a, std::int64_t b) {
    const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(a) * 0x9e3779b97f4a7c15ULL +
                                               static_cast<std::uint64_t>(b)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  };
  const double tu = u - fu, tv = v - fv;
  const double su = tu * tu * (3 - 2 * tu), sv = tv * tv * (3 - 2 * tv);
  const double top = corner(iv, iu) * (1 - su) + corner(iv, iu + 1) * su;
  const double bot = corner(iv + 1, iu) * (1 - su) + corner(iv + 1, iu + 1) * su;
  return top * (1 - sv) + bot * sv;
}

// Ridged multi-octave noise: thin bright crystal-like ridges on a dim base.
double frost_texture(double u, double v) {
  double sum = 0.0, amp = 1.0, norm = 0.0, freq = 1.0;
  for (int o = 0; o < 4; ++o) {
    const double n = value_noise(u * freq, v * freq, kFrostSeed + static_cast<std::uint64_t>(o));
    const double ridge = 1.0 - std::abs(2.0 * n - 1.0);
    sum += amp * ridge * ridge * ridge;
    norm += amp;
    amp *= 0.55;
    freq *= 2.1;
  }
  return std::clamp(sum / norm * 1.4, 0.0, 1.0);
}

UnitImage frost(UnitImage x, const Row& p, double s, Rng& rng) {
  static constexpr double kTint[kChannels] = {0.86, 0.92, 1.0};
  const double period = std::max(2.0, 64.0 * s);
  const double ou = rng.uniform(0.0, 4096.0), ov = rng.uniform(0.0, 4096.0);
  for (std::size_t y = 0; y < x.height; ++y) {
    for (std::size_t xx = 0; xx < x.width; ++xx) {
      const double t = frost_texture(ou + static_cast<double>(xx) / period, ov + static_cast<double>(y) / period);
      for (std::size_t c = 0; c < kChannels; ++c) x.at(y, xx, c) = p[0] * x.at(y, xx, c) + p[1] * kTint[c] * t;
    }
  }
  return x;
}

UnitImage snow(UnitImage x, const Row& p, double s, Rng& rng) {
  Plane layer(x.height, x.width);
  for (double& v : layer.data) v = rng.normal(p[0], p[1]);
  layer = detail::zoom_center(layer, p[2]);
  for (double& v : layer.data) v = v < p[3] ? 0.0 : std::min(v, 1.0);
  const int radius = std::max(1, static_cast<int>(std::lround(p[4] * s)));
  const double angle = rng.uniform(-135.0, -45.0);
  layer = detail::motion_blur(layer, radius, std::max(p[5] * s, 1e-3), angle);

  const Plane gray = detail::luminance(x);
  const std::size_t n = x.height * x.width;
  for (std::size_t i = 0; i < n; ++i) {
    const double lift = gray.data[i] * 1.5 + 0.5;
    // Snow streaks are layered with their 180-degree rotation.
    const double flakes = layer.data[i] + layer.data[n - 1 - i];
    for (std::size_t c = 0; c < kChannels; ++c) {
      double& v = x.data[i * kChannels + c];
      v = p[6] * v + (1 - p[6]) * std::max(v, lift) + flakes;
    }
  }
  return x;
}

UnitImage spatter(UnitImage x, const Row& p, double s, Rng& rng) {
  Plane liquid(x.height, x.width);
  for (double& v : liquid.data) v = rng.normal(p[0], p[1]);
  detail::gaussian_blur(liquid, p[2] * s);
  // Rescale so the blurred field has the spread it would have at 224 pixels;
  // the thresholds below are tuned for that spread.
  const double spread = std::sqrt(kernel_energy(p[2]) / kernel_energy(p[2] * s));
  for (double& v : liquid.data) v = p[0] + (v - p[0]) * spread;
  for (double& v : liquid.data) {
    if (v < p[3]) v = 0.0;
  }
  const std::size_t n = x.height * x.width;
  if (p[5] == 0.0) {
    // Water: soft pale-turquoise drops.
    static constexpr double kWater[kChannels] = {175 / 255.0, 238 / 255.0, 238 / 255.0};
    detail::box_blur(liquid, 1);
    const double mx = *std::max_element(liquid.data.begin(), liquid.data.end());
    if (mx <= 0.0) return x;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = liquid.data[i] / mx * p[4];
      for (std::size_t c = 0; c < kChannels; ++c) x.data[i * kChannels + c] += m * kWater[c];
    }
    return x;
  }
  // Mud: opaque brown blotches.
  static constexpr double kMud[kChannels] = {63 / 255.0, 42 / 255.0, 20 / 255.0};
  for (double& v : liquid.data) v = v > p[3] ? 1.0 : 0.0;
  detail::gaussian_blur(liquid, p[4] * s);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = liquid.data[i] < 0.8 ? 0.0 : liquid.data[i];
    for (std::size_t c = 0; c < kChannels; ++c) {
      double& v = x.data[i * kChannels + c];
      v = v * (1 - m) + kMud[c] * m;
    }
  }
  return x;
}

// ---- digital -------------------------------------------------------------

UnitImage contrast(UnitImage x, const Row& p) {
  double mean[kChannels] = {0, 0, 0};
  const std::size_t n = x.height * x.width;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < kChannels; ++c) mean[c] += x.data[i * kChannels + c];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < kChannels; ++c) {
      double& v = x.data[i * kChannels + c];
      v = (v - mean[c]) * p[0] + mean[c];
    }
  }
  return x;
}

template <typename F>
UnitImage map_hsv(UnitImage x, F f) {
  for (std::size_t i = 0; i < x.height * x.width; ++i) {
    double* px = &x.data[i * kChannels];
    double h, s, v;
    detail::rgb_to_hsv(px[0], px[1], px[2], h, s, v);
    f(h, s, v);
    detail::hsv_to_rgb(h, s, v, px[0], px[1], px[2]);
  }
  return x;
}

UnitImage brightness(UnitImage x, const Row& p) {
  return map_hsv(std::move(x), [&](double&, double&, double& v) { v = std::clamp(v + p[0], 0.0, 1.0); });
}

UnitImage saturate(UnitImage x, const Row& p) {
  return map_hsv(std::move(x), [&](double&, double& s, double&) { s = std::clamp(s * p[0] + p[1], 0.0, 1.0); });
}

// Area-weighted resampling of each axis (box filter in both directions).
UnitImage box_resize(const UnitImage& x, std::size_t h, std::size_t w) {
  const auto weights = [](std::size_t in, std::size_t out) {
    std::vector<std::vector<std::pair<std::size_t, double>>> taps(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t o = 0; o < out; ++o) {
      const double lo = o * scale, hi = (o + 1) * scale;
      for (auto i = static_cast<std::size_t>(std::floor(lo)); i < in && static_cast<double>(i) < hi; ++i) {
        const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
        if (overlap > 0) taps[o].push_back({i, overlap / scale});
      }
    }
    return taps;
  };
  const auto ty = weights(x.height, h), tx = weights(x.width, w);
  UnitImage rows(x.height, w);
  for (std::size_t y = 0; y < x.height; ++y) {
    for (std::size_t o = 0; o < w; ++o) {
      for (const auto& [i, wt] : tx[o]) {
        for (std::size_t c = 0; c < kChannels; ++c) rows.at(y, o, c) += wt * x.at(y, i, c);
      }
    }
  }
  UnitImage out(h, w);
  for (std::size_t o = 0; o < h; ++o) {
    for (const auto& [i, wt] : ty[o]) {
      for (std::size_t xx = 0; xx < w; ++xx) {
        for (std::size_t c = 0; c < kChannels; ++c) out.at(o, xx, c) += wt * rows.at(i, xx, c);
      }
    }
  }
  return out;
}

UnitImage pixelate(const UnitImage& x, const Row& p) {
  const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(x.height * p[0])));
  const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(x.width * p[0])));
  return box_resize(box_resize(x, h, w), x.height, x.width);
}

struct ElasticField {
  double inv[6];  // destination -> source affine map, (x, y) order
  Plane dx, dy;
};

ElasticField make_elastic_field(std::size_t h, std::size_t w, const Row& p) {
  const double size = static_cast<double>(std::min(h, w));
  const double alpha = p[0] * size, sigma = p[1] * size, affine = p[2] * size;
  Rng rng(kElasticSeed ^ (h << 20) ^ w);

  const double cx = static_cast<double>(w / 2), cy = static_cast<double>(h / 2);
  const double sq = static_cast<double>(std::min(h, w) / 3);
  const double src[3][2] = {{cx + sq, cy + sq}, {cx + sq, cy - sq}, {cx - sq, cy - sq}};
  double dst[3][2];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) dst[i][j] = src[i][j] + rng.uniform(-affine, affine);
  }
  // Solve the affine map taking dst points back to src points (inverse warp).
  const double a11 = dst[1][0] - dst[0][0], a12 = dst[2][0] - dst[0][0];
  const double a21 = dst[1][1] - dst[0][1], a22 = dst[2][1] - dst[0][1];
  const double det = a11 * a22 - a12 * a21;
  const double b11 = src[1][0] - src[0][0], b12 = src[2][0] - src[0][0];
  const double b21 = src[1][1] - src[0][1], b22 = src[2][1] - src[0][1];
  // M = B * A^-1 maps dst offsets to src offsets.
  const double i11 = a22 / det, i12 = -a12 / det, i21 = -a21 / det, i22 = a11 / det;
  ElasticField f;
  f.inv[0] = b11 * i11 + b12 * i21;
  f.inv[1] = b11 * i12 + b12 * i22;
  f.inv[3] = b21 * i11 + b22 * i21;
  f.inv[4] = b21 * i12 + b22 * i22;
  f.inv[2] = src[0][0] - f.inv[0] * dst[0][0] - f.inv[1] * dst[0][1];
  f.inv[5] = src[0][1] - f.inv[3] * dst[0][0] - f.inv[4] * dst[0][1];

  f.dx = Plane(h, w);
  f.dy = Plane(h, w);
  for (double& v : f.dx.data) v = rng.uniform(-1.0, 1.0);
  for (double& v : f.dy.data) v = rng.uniform(-1.0, 1.0);
  detail::gaussian_blur(f.dx, sigma, Edge::Reflect, 3.0);
  detail::gaussian_blur(f.dy, sigma, Edge::Reflect, 3.0);
  for (double& v : f.dx.data) v *= alpha;
  for (double& v : f.dy.data) v *= alpha;
  return f;
}

// Bilinear sample with half-sample-symmetric borders.
void sample(const UnitImage& x, double sy, double sx, double* out) {
  const double fy = std::floor(sy), fx = std::floor(sx);
  const double ty = sy - fy, tx = sx - fx;
  const auto y0 = detail::edge_index(static_cast<long>(fy), x.height, Edge::Reflect);
  const auto y1 = detail::edge_index(static_cast<long>(fy) + 1, x.height, Edge::Reflect);
  const auto x0 = detail::edge_index(static_cast<long>(fx), x.width, Edge::Reflect);
  const auto x1 = detail::edge_index(static_cast<long>(fx) + 1, x.width, Edge::Reflect);
  for (std::size_t c = 0; c < kChannels; ++c) {
    const double top = x.at(y0, x0, c) * (1 - tx) + x.at(y0, x1, c) * tx;
    const double bot = x.at(y1, x0, c) * (1 - tx) + x.at(y1, x1, c) * tx;
    out[c] = top * (1 - ty) + bot * ty;
  }
}

UnitImage elastic(const UnitImage& x, const Row& p, std::size_t level) {
  static std::mutex mu;
  static std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::shared_ptr<const ElasticField>> cache;
  const auto f = cached<ElasticField>(cache, mu, {x.height, x.width, level},
                                      [&] { return make_elastic_field(x.height, x.width, p); });
  UnitImage warped(x.height, x.width);
  for (std::size_t y = 0; y < x.height; ++y) {
    for (std::size_t xx = 0; xx < x.width; ++xx) {
      const double sx = f->inv[0] * xx + f->inv[1] * y + f->inv[2];
      const double sy = f->inv[3] * xx + f->inv[4] * y + f->inv[5];
      sample(x, sy, sx, &warped.data[(y * x.width + xx) * kChannels]);
    }
  }
  UnitImage out(x.height, x.width);
  for (std::size_t y = 0; y < x.height; ++y) {
    for (std::size_t xx = 0; xx < x.width; ++xx) {
      sample(warped, static_cast<double>(y) + f->dy.at(y, xx), static_cast<double>(xx) + f->dx.at(y, xx),
             &out.data[(y * x.width + xx) * kChannels]);
    }
  }
  return out;
}

}  // namespace

const std::vector<CorruptionKind>& all_corruptions() {
  static const std::vector<CorruptionKind> kinds = [] {
    std::vector<CorruptionKind> v;
    for (std::size_t i = 0; i < kCorruptionKindCount; ++i) v.push_back(static_cast<CorruptionKind>(i));
    return v;
  }();
  return kinds;
}

std::string_view to_string(CorruptionKind kind) noexcept { return kNames[static_cast<std::size_t>(kind)]; }

std::optional<CorruptionKind> parse_corruption(std::string_view name) {
  const std::string key = canonical(name);
  for (std::size_t i = 0; i < kCorruptionKindCount; ++i) {
    if (canonical(kNames[i]) == key) return static_cast<CorruptionKind>(i);
  }
  return std::nullopt;
}

bool is_seeded(CorruptionKind kind) noexcept {
  switch (kind) {
    case CorruptionKind::GaussianNoise:
    case CorruptionKind::ShotNoise:
    case CorruptionKind::ImpulseNoise:
    case CorruptionKind::SpeckleNoise:
    case CorruptionKind::GlassBlur:
    case CorruptionKind::Frost:
    case CorruptionKind::Spatter:
    case CorruptionKind::Snow:
      return true;
    default:
      return false;
  }
}

Severity::Severity(int level) : level_(level) {
  if (level != 1 && level != 3 && level != 5) {
    throw Error(ErrorCode::UnsupportedSeverity, "severity " + std::to_string(level) + " (use 1, 3 or 5)");
  }
}

std::string describe_parameters(CorruptionKind kind, Severity severity) {
  const auto k = static_cast<std::size_t>(kind);
  const Row& row = kTable[k][severity.index()];
  std::ostringstream os;
  for (std::size_t i = 0; i < row.size() && kParamNames[k][i]; ++i) {
    if (i) os << ' ';
    os << kParamNames[k][i] << '=' << row[i];
  }
  return os.str();
}

ImageBuf apply_corruption(const ImageBuf& image, CorruptionKind kind, Severity severity, std::uint64_t seed) {
  if (!image.valid() || image.height == 0 || image.width == 0) {
    throw Error(ErrorCode::ImageTooSmall, "empty or malformed image");
  }
  const Row& p = kTable[static_cast<std::size_t>(kind)][severity.index()];
  if (kind == CorruptionKind::Jpeg) return decode_image(encode_jpeg(image, static_cast<int>(p[0])));

  const double s = static_cast<double>(std::min(image.height, image.width)) / kReferenceSize;
  const std::size_t level = severity.index();
  Rng rng(seed);
  UnitImage x = to_unit(image);
  switch (kind) {
    case CorruptionKind::Fog: x = fog(std::move(x), p, level); break;
    case CorruptionKind::Brightness: x = brightness(std::move(x), p); break;
    case CorruptionKind::Contrast: x = contrast(std::move(x), p); break;
    case CorruptionKind::DefocusBlur: x = defocus_blur(x, p, s); break;
    case CorruptionKind::Elastic: x = elastic(x, p, level); break;
    case CorruptionKind::Frost: x = frost(std::move(x), p, s, rng); break;
    case CorruptionKind::GaussianBlur: x = gaussian_blur(std::move(x), p, s); break;
    case CorruptionKind::GaussianNoise: x = gaussian_noise(std::move(x), p, rng); break;
    case CorruptionKind::GlassBlur: x = glass_blur(std::move(x), p, rng); break;
    case CorruptionKind::ImpulseNoise: x = impulse_noise(std::move(x), p, rng); break;
    case CorruptionKind::MotionBlur: x = motion_blur(x, p, s); break;
    case CorruptionKind::Pixelate: x = pixelate(x, p); break;
    case CorruptionKind::Saturate: x = saturate(std::move(x), p); break;
    case CorruptionKind::ShotNoise: x = shot_noise(std::move(x), p, rng); break;
    case CorruptionKind::Snow: x = snow(std::move(x), p, s, rng); break;
    case CorruptionKind::Spatter: x = spatter(std::move(x), p, s, rng); break;
    case CorruptionKind::SpeckleNoise: x = speckle_noise(std::move(x), p, rng); break;
    case CorruptionKind::ZoomBlur: x = zoom_blur(x, p); break;
    case CorruptionKind::Jpeg: break;
  }
  return from_unit(x);
}

std::uint64_t item_seed(std::uint64_t seed, std::string_view id, CorruptionKind kind, Severity severity) noexcept {
  std::uint64_t h = hash_combine(seed, fnv1a64(id));
  h = hash_combine(h, static_cast<std::uint64_t>(kind));
  return hash_combine(h, static_cast<std::uint64_t>(severity.level()));
}

}  // namespace avikit
