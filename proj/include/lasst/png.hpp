// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "lasst/core.hpp"

namespace lasst {

/// 8-bit RGB PNG; values are clamped to [0,1] and rounded.
void write_png(const Image<double>& image, const std::filesystem::path& path);

}  // namespace lasst
