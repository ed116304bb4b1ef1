#include "qsync/block_io.hpp"

#include "qsync/error.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qsync {

namespace {

template <std::size_t N>
void write_values(std::ostream& os, const std::array<double, N>& b) {
  char buf[32];
  for (std::size_t x = 0; x < N; ++x) {
    std::snprintf(buf, sizeof buf, "%.17g", b[x]);
    os << (x ? " " : "") << buf;
  }
  os << '\n';
}

template <std::size_t N>
std::array<double, N> read_values(std::istream& is, std::size_t block) {
  std::array<double, N> b{};
  std::string tok;
  for (std::size_t x = 0; x < N; ++x) {
    if (!(is >> tok)) throw Error(ErrorCode::parse, "block " + std::to_string(block) + ": expected " + std::to_string(N) + " values");
    char* end = nullptr;
    b[x] = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw Error(ErrorCode::parse, "block " + std::to_string(block) + ": bad number '" + tok + "'");
  }
  return b;
}

template <std::size_t K>
std::array<int, K> read_index(std::istream& is, std::size_t block) {
  std::array<int, K> idx{};
  for (auto& v : idx)
    if (!(is >> v)) throw Error(ErrorCode::parse, "block " + std::to_string(block) + ": expected " + std::to_string(K) + " indices");
  return idx;
}

}  // namespace

void write_blocks(std::ostream& os, const BlockTensor4& t) {
  os << 4 << ' ' << t.n() << ' ' << t.canonical_count() << '\n';
  for (std::size_t c = 0; c < t.canonical_count(); ++c) {
    const Quad& q = t.canonical_index(c);
    os << q[0] << ' ' << q[1] << ' ' << q[2] << ' ' << q[3] << '\n';
    write_values(os, t.canonical_block(c));
  }
}

void write_blocks(std::ostream& os, const BlockTensor3& t) {
  std::vector<Triple> tuples;
  for (int i = 0; i < t.n(); ++i)
    for (int j = 0; j < t.n(); ++j)
      for (int k = 0; k < t.n(); ++k)
        if (t.observed({i, j, k})) tuples.push_back({i, j, k});
  os << 3 << ' ' << t.n() << ' ' << tuples.size() << '\n';
  for (const auto& tr : tuples) {
    os << tr[0] << ' ' << tr[1] << ' ' << tr[2] << '\n';
    write_values(os, t.get(tr));
  }
}

void write_blocks(std::ostream& os, const BlockMatrix& t) {
  std::vector<Pair> tuples;
  for (int i = 0; i < t.n(); ++i)
    for (int j = 0; j < t.n(); ++j)
      if (t.observed({i, j})) tuples.push_back({i, j});
  os << 2 << ' ' << t.n() << ' ' << tuples.size() << '\n';
  for (const auto& pr : tuples) {
    os << pr[0] << ' ' << pr[1] << '\n';
    write_values(os, t.get(pr));
  }
}

AnyBlocks read_blocks(std::istream& is) {
  int order = 0, n = -1;
  long count = -1;
  if (!(is >> order >> n >> count) || n < 0 || count < 0)
    throw Error(ErrorCode::parse, "block file: header must be `order n block_count`");
  const auto cnt = static_cast<std::size_t>(count);
  std::string extra;
  switch (order) {
    case 4: {
      BlockTensor4 t(n);
      for (std::size_t b = 0; b < cnt; ++b) {
        const auto idx = read_index<4>(is, b);
        t.set(idx, read_values<81>(is, b));
      }
      if (is >> extra) throw Error(ErrorCode::parse, "block file: trailing data after declared blocks");
      return t;
    }
    case 3: {
      BlockTensor3 t(n);
      for (std::size_t b = 0; b < cnt; ++b) {
        const auto idx = read_index<3>(is, b);
        t.set(idx, read_values<27>(is, b));
      }
      if (is >> extra) throw Error(ErrorCode::parse, "block file: trailing data after declared blocks");
      return t;
    }
    case 2: {
      BlockMatrix t(n);
      for (std::size_t b = 0; b < cnt; ++b) {
        const auto idx = read_index<2>(is, b);
        t.set(idx, read_values<9>(is, b));
      }
      if (is >> extra) throw Error(ErrorCode::parse, "block file: trailing data after declared blocks");
      return t;
    }
    default:
      throw Error(ErrorCode::parse, "block file: order must be 2, 3 or 4");
  }
}

void save_blocks(const std::string& path, const AnyBlocks& b) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::io, "cannot open " + path + " for writing");
  std::visit([&](const auto& t) { write_blocks(os, t); }, b);
  if (!os) throw Error(ErrorCode::io, "write failed: " + path);
}

AnyBlocks load_blocks(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::io, "cannot open " + path);
  return read_blocks(is);
}

BlockTensor4 load_block_tensor4(const std::string& path) {
  AnyBlocks b = load_blocks(path);
  if (auto* t = std::get_if<BlockTensor4>(&b)) return std::move(*t);
  throw Error(ErrorCode::parse, path + ": expected an order-4 block file");
}

BlockTensor3 load_block_tensor3(const std::string& path) {
  AnyBlocks b = load_blocks(path);
  if (auto* t = std::get_if<BlockTensor3>(&b)) return std::move(*t);
  throw Error(ErrorCode::parse, path + ": expected an order-3 block file");
}

BlockMatrix load_block_matrix(const std::string& path) {
  AnyBlocks b = load_blocks(path);
  if (auto* t = std::get_if<BlockMatrix>(&b)) return std::move(*t);
  throw Error(ErrorCode::parse, path + ": expected an order-2 block file");
}

}  // namespace qsync
