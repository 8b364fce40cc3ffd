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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "avikit/core/image.hpp"

namespace avikit {

using Bytes = std::vector<std::uint8_t>;

/// Decodes PNG or JPEG (sniffed from the magic bytes). Grayscale is
/// replicated to three channels and alpha is dropped.
/// Throws Error(UndecodableImage).
ImageBuf decode_image(std::span<const std::uint8_t> bytes);

/// PNG encoding with fixed compression settings and no ancillary chunks, so
/// identical pixels always produce identical bytes.
Bytes encode_png(const ImageBuf& image);

Bytes encode_jpeg(const ImageBuf& image, int quality);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

ImageBuf read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuf& image);

}  // namespace avikit
