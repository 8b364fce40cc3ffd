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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace avikit {

inline constexpr std::size_t kChannels = 3;

/// 8-bit RGB image, row-major, channels interleaved (HWC).
struct ImageBuf {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;

  ImageBuf() = default;
  ImageBuf(std::size_t h, std::size_t w, std::uint8_t fill = 0)
      : height(h), width(w), data(h * w * kChannels, fill) {}
  ImageBuf(std::size_t h, std::size_t w, std::vector<std::uint8_t> samples);

  std::size_t size() const noexcept { return data.size(); }
  bool valid() const noexcept { return data.size() == height * width * kChannels; }

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) {
    return data[(y * width + x) * kChannels + c];
  }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return data[(y * width + x) * kChannels + c];
  }

  friend bool operator==(const ImageBuf&, const ImageBuf&) = default;
};

/// Same layout as ImageBuf with samples scaled to [0,1]. All perturbation
/// arithmetic happens on this representation.
struct UnitImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  UnitImage() = default;
  UnitImage(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), data(h * w * kChannels, fill) {}

  std::size_t size() const noexcept { return data.size(); }

  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return data[(y * width + x) * kChannels + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return data[(y * width + x) * kChannels + c];
  }

  bool same_shape(const UnitImage& o) const noexcept {
    return height == o.height && width == o.width;
  }
};

UnitImage to_unit(const ImageBuf& image);

/// Clamps to [0,1], scales by 255 and rounds half-up.
ImageBuf from_unit(const UnitImage& image);

std::uint8_t quantize_sample(double v) noexcept;

/// Round-trips through the 8-bit grid: what an oracle or a file would see.
UnitImage quantize(const UnitImage& image);

/// Flattened L2 distance on unit-interval samples.
double l2_distance(const UnitImage& a, const UnitImage& b);
double l2_distance(const ImageBuf& a, const ImageBuf& b);

double mean_intensity(const UnitImage& image);

}  // namespace avikit
