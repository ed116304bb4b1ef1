#include "qsync/camera_io.hpp"

#include "qsync/error.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qsync {

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_camera(std::ostream& os, const Mat34& p) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) os << (c ? " " : "") << fmt17(p(r, c));
    os << '\n';
  }
}

Mat34 read_camera(std::istream& is, int which) {
  Mat34 p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c)
      if (!(is >> p(r, c)))
        throw Error(ErrorCode::parse, "camera " + std::to_string(which) + ": expected 12 numbers");
  return p;
}

}  // namespace

void write_cameras(std::ostream& os, const CameraStack& c) {
  os << c.size() << '\n';
  for (const auto& p : c.cameras) write_camera(os, p);
}

CameraStack read_cameras(std::istream& is) {
  long n = -1;
  if (!(is >> n) || n < 0) throw Error(ErrorCode::parse, "camera file: missing or invalid count");
  CameraStack c;
  for (long i = 0; i < n; ++i) c.cameras.push_back(read_camera(is, static_cast<int>(i)));
  double extra;
  if (is >> extra) throw Error(ErrorCode::parse, "camera file: more values than the declared count");
  return c;
}

void save_cameras(const std::string& path, const CameraStack& c) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path + " for writing");
  write_cameras(os, c);
  if (!os) throw Error(ErrorCode::io, "write failed: " + path);
}

CameraStack load_cameras(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::io, "cannot open " + path);
  return read_cameras(is);
}

void write_triple(std::ostream& os, const CameraTriple& t) {
  os << t.views[0] << ' ' << t.views[1] << ' ' << t.views[2] << '\n';
  for (const auto& p : t.cameras) write_camera(os, p);
}

CameraTriple read_triple(std::istream& is) {
  CameraTriple t;
  for (int& v : t.views)
    if (!(is >> v)) throw Error(ErrorCode::parse, "triple file: expected `i j k` header");
  for (int k = 0; k < 3; ++k) t.cameras[static_cast<std::size_t>(k)] = read_camera(is, k);
  return t;
}

}  // namespace qsync
