#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pinchlab/surface.hpp"

namespace pinchlab {

/// Plain-text exchange format: first non-comment line "curve" or "axisym", then one "x y" (or
/// "r z") pair per line with 17 significant digits, so a write/read round trip is exact.
/// '#' starts a comment that runs to the end of the line.
std::string format_surface(const Surface& surface, std::string_view comment = {});

/// Parses and validates; throws InvalidSurface with the offending line number.
Surface parse_surface(std::string_view text);

void write_surface(const std::filesystem::path& path, const Surface& surface, std::string_view comment = {});
Surface read_surface(const std::filesystem::path& path);

}  // namespace pinchlab
