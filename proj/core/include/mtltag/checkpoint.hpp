// Copyright 2026 The mtltag Authors
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

#include <filesystem>
#include <istream>
#include <ostream>
#include <string_view>

#include "mtltag/network.hpp"

namespace mtltag {

inline constexpr int kCheckpointVersion = 1;

/// Text header, JSON manifest (configuration, vocabularies, tensor
/// registry), then the tensors as little-endian doubles.
void save_model(const Model& model, std::ostream& out);
void save_model(const Model& model, const std::filesystem::path& path);

/// Throws DataError on a bad header, unsupported version, truncation or a
/// registry that disagrees with the payload.
Model load_model(std::istream& in, std::string_view source = "checkpoint");
Model load_model(const std::filesystem::path& path);

}  // namespace mtltag
