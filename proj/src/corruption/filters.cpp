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

#include "filters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "avikit/core/rng.hpp"

namespace avikit::detail {
namespace {

// Convolves `lines` 1-D signals of length `len`; element k of line i lives at
// data[base(i) + k * stride].
template <typename Base>
void convolve_lines(std::vector<double>& data, std::size_t lines, std::size_t len, std::size_t stride,
                    Base base, const std::vector<double>& kernel, Edge edge) {
  const long r = static_cast<long>(kernel.size() / 2);
  const long n = static_cast<long>(len);
  std::vector<double> line(len), out(len);
  for (std::size_t i = 0; i < lines; ++i) {
    const std::size_t b = base(i);
    for (std::size_t k = 0; k < len; ++k) line[k] = data[b + k * stride];
    for (long x = 0; x < n; ++x) {
      double acc = 0.0;
      if (x - r >= 0 && x + r < n) {
        const double* src = line.data() + (x - r);
        for (std::size_t t = 0; t < kernel.size(); ++t) acc += kernel[t] * src[t];
      } else {
        for (long t = -r; t <= r; ++t) acc += kernel[t + r] * line[edge_index(x + t, len, edge)];
      }
      out[x] = acc;
    }
    for (std::size_t k = 0; k < len; ++k) data[b + k * stride] = out[k];
  }
}

struct Taps {
  std::vector<std::size_t> i0, i1;
  std::vector<double> w;
};

Taps zoom_taps(std::size_t n, double z) {
  Taps t;
  t.i0.resize(n);
  t.i1.resize(n);
  t.w.resize(n);
  const double c = (static_cast<double>(n) - 1.0) / 2.0;
  for (std::size_t y = 0; y < n; ++y) {
    double s = c + (static_cast<double>(y) - c) / z;
    s = std::clamp(s, 0.0, static_cast<double>(n - 1));
    const auto f = static_cast<std::size_t>(std::floor(s));
    t.i0[y] = f;
    t.i1[y] = std::min(f + 1, n - 1);
    t.w[y] = s - static_cast<double>(f);
  }
  return t;
}

struct Shift {
  long dy, dx;
  double weight;
};

std::vector<Shift> motion_shifts(std::size_t h, std::size_t w, int radius, double sigma, double angle_deg) {
  const int width = 2 * radius + 1;
  std::vector<double> k(static_cast<std::size_t>(width));
  double z = 0.0;
  for (int i = 0; i < width; ++i) {
    k[i] = std::exp(-(double(i) * i) / (2.0 * sigma * sigma)) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
    z += k[i];
  }
  const double a = angle_deg * std::numbers::pi / 180.0;
  std::vector<Shift> shifts;
  for (int i = 0; i < width; ++i) {
    const long dy = -static_cast<long>(std::ceil(i * std::sin(a) - 0.5));
    const long dx = -static_cast<long>(std::ceil(i * std::cos(a) - 0.5));
    if (std::labs(dy) >= static_cast<long>(h) || std::labs(dx) >= static_cast<long>(w)) break;
    shifts.push_back({dy, dx, k[i] / z});
  }
  return shifts;
}

}  // namespace

std::size_t edge_index(long i, std::size_t n, Edge edge) noexcept {
  const long len = static_cast<long>(n);
  if (i >= 0 && i < len) return static_cast<std::size_t>(i);
  if (edge == Edge::Nearest) return i < 0 ? 0 : n - 1;
  const long period = 2 * len;
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < len ? m : period - 1 - m);
}

std::vector<double> gaussian_kernel(double sigma, double truncate) {
  if (!(sigma > 0.0)) return {1.0};
  const int r = static_cast<int>(truncate * sigma + 0.5);
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double z = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    z += k[i + r];
  }
  for (double& v : k) v /= z;
  return k;
}

void gaussian_blur(Plane& p, double sigma, Edge edge, double truncate) {
  const auto k = gaussian_kernel(sigma, truncate);
  if (k.size() == 1) return;
  const std::size_t w = p.width;
  convolve_lines(p.data, p.height, p.width, 1, [w](std::size_t y) { return y * w; }, k, edge);
  convolve_lines(p.data, p.width, p.height, w, [](std::size_t x) { return x; }, k, edge);
}

void gaussian_blur(UnitImage& img, double sigma, Edge edge, double truncate) {
  const auto k = gaussian_kernel(sigma, truncate);
  if (k.size() == 1) return;
  const std::size_t w = img.width;
  convolve_lines(img.data, img.height * kChannels, img.width, kChannels,
                 [w](std::size_t i) { return (i / kChannels) * w * kChannels + i % kChannels; }, k, edge);
  convolve_lines(img.data, img.width * kChannels, img.height, w * kChannels,
                 [](std::size_t i) { return i; }, k, edge);
}

void box_blur(Plane& p, int radius) {
  const std::vector<double> k(static_cast<std::size_t>(2 * radius + 1), 1.0 / (2 * radius + 1));
  const std::size_t w = p.width;
  convolve_lines(p.data, p.height, p.width, 1, [w](std::size_t y) { return y * w; }, k, Edge::Nearest);
  convolve_lines(p.data, p.width, p.height, w, [](std::size_t x) { return x; }, k, Edge::Nearest);
}

Plane zoom_center(const Plane& p, double z) {
  const Taps ty = zoom_taps(p.height, z), tx = zoom_taps(p.width, z);
  Plane out(p.height, p.width);
  for (std::size_t y = 0; y < p.height; ++y) {
    for (std::size_t x = 0; x < p.width; ++x) {
      const double top = p.at(ty.i0[y], tx.i0[x]) * (1 - tx.w[x]) + p.at(ty.i0[y], tx.i1[x]) * tx.w[x];
      const double bot = p.at(ty.i1[y], tx.i0[x]) * (1 - tx.w[x]) + p.at(ty.i1[y], tx.i1[x]) * tx.w[x];
      out.at(y, x) = top * (1 - ty.w[y]) + bot * ty.w[y];
    }
  }
  return out;
}

UnitImage zoom_center(const UnitImage& img, double z) {
  const Taps ty = zoom_taps(img.height, z), tx = zoom_taps(img.width, z);
  UnitImage out(img.height, img.width);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < kChannels; ++c) {
        const double top =
            img.at(ty.i0[y], tx.i0[x], c) * (1 - tx.w[x]) + img.at(ty.i0[y], tx.i1[x], c) * tx.w[x];
        const double bot =
            img.at(ty.i1[y], tx.i0[x], c) * (1 - tx.w[x]) + img.at(ty.i1[y], tx.i1[x], c) * tx.w[x];
        out.at(y, x, c) = top * (1 - ty.w[y]) + bot * ty.w[y];
      }
    }
  }
  return out;
}

Plane motion_blur(const Plane& p, int radius, double sigma, double angle_deg) {
  Plane out(p.height, p.width);
  const long h = static_cast<long>(p.height), w = static_cast<long>(p.width);
  for (const Shift& s : motion_shifts(p.height, p.width, radius, sigma, angle_deg)) {
    for (long y = 0; y < h; ++y) {
      const std::size_t sy = static_cast<std::size_t>(std::clamp(y - s.dy, 0L, h - 1));
      for (long x = 0; x < w; ++x) {
        const std::size_t sx = static_cast<std::size_t>(std::clamp(x - s.dx, 0L, w - 1));
        out.at(y, x) += s.weight * p.at(sy, sx);
      }
    }
  }
  return out;
}

UnitImage motion_blur(const UnitImage& img, int radius, double sigma, double angle_deg) {
  UnitImage out(img.height, img.width);
  const long h = static_cast<long>(img.height), w = static_cast<long>(img.width);
  for (const Shift& s : motion_shifts(img.height, img.width, radius, sigma, angle_deg)) {
    for (long y = 0; y < h; ++y) {
      const std::size_t sy = static_cast<std::size_t>(std::clamp(y - s.dy, 0L, h - 1));
      double* dst = &out.data[static_cast<std::size_t>(y) * img.width * kChannels];
      const double* row = &img.data[sy * img.width * kChannels];
      for (long x = 0; x < w; ++x) {
        const std::size_t sx = static_cast<std::size_t>(std::clamp(x - s.dx, 0L, w - 1));
        for (std::size_t c = 0; c < kChannels; ++c) dst[x * kChannels + c] += s.weight * row[sx * kChannels + c];
      }
    }
  }
  return out;
}

Plane luminance(const UnitImage& img) {
  Plane out(img.height, img.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double* px = &img.data[i * kChannels];
    out.data[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return out;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) noexcept {
  v = std::max({r, g, b});
  const double delta = v - std::min({r, g, b});
  s = v > 0.0 ? delta / v : 0.0;
  if (delta <= 0.0) {
    h = 0.0;
    return;
  }
  if (r == v) {
    h = (g - b) / delta;
  } else if (g == v) {
    h = 2.0 + (b - r) / delta;
  } else {
    h = 4.0 + (r - g) / delta;
  }
  h /= 6.0;
  h -= std::floor(h);
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) noexcept {
  const double h6 = h * 6.0;
  const double fl = std::floor(h6);
  const int i = static_cast<int>(fl) % 6;
  const double f = h6 - fl;
  const double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
  switch (i < 0 ? i + 6 : i) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

Plane plasma_fractal(std::size_t mapsize, double wibble_decay, std::uint64_t seed) {
  Rng rng(seed);
  Plane m(mapsize, mapsize);
  std::size_t step = mapsize;
  double wibble = 100.0;
  const auto wibbled = [&](double sum) { return sum / 4.0 + wibble * rng.uniform(-wibble, wibble); };
  while (step >= 2) {
    const std::size_t n = mapsize / step, half = step / 2;
    // squares: centre of each cell from its four corners
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double sum = m.at(i * step, j * step) + m.at(((i + 1) % n) * step, j * step) +
                           m.at(i * step, ((j + 1) % n) * step) + m.at(((i + 1) % n) * step, ((j + 1) % n) * step);
        m.at(i * step + half, j * step + half) = wibbled(sum);
      }
    }
    // diamonds on the cell tops, then on the cell sides
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double sum = m.at(i * step + half, j * step + half) +
                           m.at(((i + n - 1) % n) * step + half, j * step + half) + m.at(i * step, j * step) +
                           m.at(i * step, ((j + 1) % n) * step);
        m.at(i * step, j * step + half) = wibbled(sum);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double sum = m.at(i * step + half, j * step + half) +
                           m.at(i * step + half, ((j + n - 1) % n) * step + half) + m.at(i * step, j * step) +
                           m.at(((i + 1) % n) * step, j * step);
        m.at(i * step + half, j * step) = wibbled(sum);
      }
    }
    step /= 2;
    wibble /= wibble_decay;
  }
  const auto [lo, hi] = std::minmax_element(m.data.begin(), m.data.end());
  const double mn = *lo, range = *hi - *lo;
  for (double& v : m.data) v = range > 0.0 ? (v - mn) / range : 0.0;
  return m;
}

}  // namespace avikit::detail
