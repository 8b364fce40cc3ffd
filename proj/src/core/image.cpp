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

#include "avikit/core/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "avikit/core/error.hpp"

namespace avikit {

ImageBuf::ImageBuf(std::size_t h, std::size_t w, std::vector<std::uint8_t> samples)
    : height(h), width(w), data(std::move(samples)) {
  if (!valid()) {
    throw Error(ErrorCode::ShapeMismatch,
                "sample count " + std::to_string(data.size()) + " does not match " +
                    std::to_string(h) + "x" + std::to_string(w) + "x3");
  }
}

UnitImage to_unit(const ImageBuf& image) {
  UnitImage out;
  out.height = image.height;
  out.width = image.width;
  out.data.resize(image.data.size());
  std::transform(image.data.begin(), image.data.end(), out.data.begin(),
                 [](std::uint8_t v) { return static_cast<double>(v) / 255.0; });
  return out;
}

std::uint8_t quantize_sample(double v) noexcept {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

ImageBuf from_unit(const UnitImage& image) {
  ImageBuf out;
  out.height = image.height;
  out.width = image.width;
  out.data.resize(image.data.size());
  std::transform(image.data.begin(), image.data.end(), out.data.begin(), quantize_sample);
  return out;
}

UnitImage quantize(const UnitImage& image) { return to_unit(from_unit(image)); }

double l2_distance(const UnitImage& a, const UnitImage& b) {
  if (!a.same_shape(b) || a.size() != b.size()) {
    throw Error(ErrorCode::ShapeMismatch, "l2_distance on images of different shape");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double l2_distance(const ImageBuf& a, const ImageBuf& b) {
  if (a.height != b.height || a.width != b.width || a.size() != b.size()) {
    throw Error(ErrorCode::ShapeMismatch, "l2_distance on images of different shape");
  }
  // Integer accumulation keeps this exact before the final scale.
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const int d = static_cast<int>(a.data[i]) - static_cast<int>(b.data[i]);
    acc += static_cast<std::uint64_t>(d * d);
  }
  return std::sqrt(static_cast<double>(acc)) / 255.0;
}

double mean_intensity(const UnitImage& image) {
  if (image.data.empty()) return 0.0;
  return std::accumulate(image.data.begin(), image.data.end(), 0.0) /
         static_cast<double>(image.data.size());
}

}  // namespace avikit
