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

#pragma once

// Image filters shared by the corruption kinds. Everything works on the unit
// interval; callers quantize once at the end.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "avikit/core/image.hpp"

namespace avikit::detail {

struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Plane() = default;
  Plane(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), data(h * w, fill) {}

  double& at(std::size_t y, std::size_t x) { return data[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return data[y * width + x]; }
};

enum class Edge {
  Nearest,  // a a | a b c | c c
  Reflect,  // b a | a b c | c b  (half-sample symmetric), any distance
};

std::size_t edge_index(long i, std::size_t n, Edge edge) noexcept;

/// Normalized Gaussian taps, radius = floor(truncate * sigma + 0.5).
std::vector<double> gaussian_kernel(double sigma, double truncate = 4.0);

void gaussian_blur(Plane& p, double sigma, Edge edge = Edge::Nearest, double truncate = 4.0);
void gaussian_blur(UnitImage& img, double sigma, Edge edge = Edge::Nearest, double truncate = 4.0);

/// Box average over a (2r+1)^2 window, edges replicated.
void box_blur(Plane& p, int radius);

/// Bilinear resampling about the centre: output(y) = input(c + (y - c) / z).
Plane zoom_center(const Plane& p, double z);
UnitImage zoom_center(const UnitImage& img, double z);

/// Directional blur: one-sided Gaussian over 2*radius+1 edge-replicated
/// shifts along angle_deg.
Plane motion_blur(const Plane& p, int radius, double sigma, double angle_deg);
UnitImage motion_blur(const UnitImage& img, int radius, double sigma, double angle_deg);

Plane luminance(const UnitImage& img);

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) noexcept;
void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) noexcept;

/// Diamond-square fractal in [0, 1] on a mapsize x mapsize grid (power of 2).
Plane plasma_fractal(std::size_t mapsize, double wibble_decay, std::uint64_t seed);

}  // namespace avikit::detail
