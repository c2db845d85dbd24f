/* Copyright 2026 The segmini Authors. All Rights Reserved.

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

#ifndef SEGMINI_IMAGE_IO_H_
#define SEGMINI_IMAGE_IO_H_

#include <string>
#include <string_view>

#include "segmini/label_map.h"
#include "segmini/tensor.h"

namespace segmini {

// Binary P6 (maxval 255) <-> 1x3xHxW tensor with channels scaled to [0, 1].
// Anything else (P3, other maxvals, short payloads) is a kFormat error.
Tensor DecodePpm(std::string_view bytes);
std::string EncodePpm(const Tensor& image);
Tensor LoadPpm(const std::string& path);
void SavePpm(const Tensor& image, const std::string& path);

// Binary P5 (maxval <= 255) <-> label map; the grey value is the class index.
LabelMap DecodePgm(std::string_view bytes);
std::string EncodePgm(const LabelMap& mask);
LabelMap LoadMask(const std::string& path);
void SaveMask(const LabelMap& mask, const std::string& path);

std::string ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::string_view bytes);

}  // namespace segmini

#endif  // SEGMINI_IMAGE_IO_H_
