#pragma once

// Camera text format: a header line with n, then for every camera three
// lines of four whitespace-separated decimals (row-major).
//
// Triple-pose format: a header line `i j k`, followed by three cameras in
// the camera format without the count line.

#include "qsync/geometry.hpp"

#include <array>
#include <iosfwd>
#include <string>

namespace qsync {

void write_cameras(std::ostream& os, const CameraStack& c);
CameraStack read_cameras(std::istream& is);
void save_cameras(const std::string& path, const CameraStack& c);
CameraStack load_cameras(const std::string& path);

struct CameraTriple {
  std::array<int, 3> views{};
  std::array<Mat34, 3> cameras;
};

void write_triple(std::ostream& os, const CameraTriple& t);
CameraTriple read_triple(std::istream& is);

}  // namespace qsync
