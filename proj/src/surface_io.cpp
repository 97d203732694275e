#include "pinchlab/surface_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "pinchlab/error.hpp"

namespace pinchlab {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view token, double& out) {
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

}  // namespace

std::string format_surface(const Surface& surface, std::string_view comment) {
  std::string out;
  if (!comment.empty()) out += fmt::format("# {}\n", comment);
  out += surface.is_curve() ? "curve\n" : "axisym\n";
  for (const Vec2& p : surface.points()) out += fmt::format("{:.17g} {:.17g}\n", p.x, p.y);
  return out;
}

Surface parse_surface(std::string_view text) {
  bool have_kind = false;
  SurfaceKind kind = SurfaceKind::Curve;
  std::vector<Vec2> points;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (!have_kind) {
      if (line == "curve") {
        kind = SurfaceKind::Curve;
      } else if (line == "axisym") {
        kind = SurfaceKind::AxiSym;
      } else {
        throw Error(ErrorCode::InvalidSurface, fmt::format("line {}: expected 'curve' or 'axisym'", line_no));
      }
      have_kind = true;
      continue;
    }
    const auto sep = line.find_first_of(" \t");
    Vec2 p;
    if (sep == std::string_view::npos || !parse_double(trim(line.substr(0, sep)), p.x) ||
        !parse_double(trim(line.substr(sep + 1)), p.y)) {
      throw Error(ErrorCode::InvalidSurface, fmt::format("line {}: expected two numbers", line_no));
    }
    points.push_back(p);
  }
  if (!have_kind) throw Error(ErrorCode::InvalidSurface, "missing 'curve' or 'axisym' header");
  return kind == SurfaceKind::Curve ? Surface::curve(std::move(points)) : Surface::axisym(std::move(points));
}

void write_surface(const std::filesystem::path& path, const Surface& surface, std::string_view comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  out << format_surface(surface, comment);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed: {}", path.string()));
}

Surface read_surface(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_surface(buf.str());
}

}  // namespace pinchlab
