#pragma once

// Sparse block file format:
//
//   order n block_count
//   i j k l            (0-based camera indices, order entries)
//   v_0 ... v_{3^order - 1}
//   ...
//
// Values use the block layouts of multifocal.hpp and are printed with 17
// significant digits, so a write/read cycle is bit-exact. Order-4 files hold
// canonical (sorted) blocks only; order-3 and order-2 files hold every
// observed ordered tuple.

#include "qsync/block_tensor.hpp"

#include <iosfwd>
#include <string>
#include <variant>

namespace qsync {

void write_blocks(std::ostream& os, const BlockTensor4& t);
void write_blocks(std::ostream& os, const BlockTensor3& t);
void write_blocks(std::ostream& os, const BlockMatrix& t);

using AnyBlocks = std::variant<BlockTensor4, BlockTensor3, BlockMatrix>;
AnyBlocks read_blocks(std::istream& is);

void save_blocks(const std::string& path, const AnyBlocks& b);
AnyBlocks load_blocks(const std::string& path);

BlockTensor4 load_block_tensor4(const std::string& path);
BlockTensor3 load_block_tensor3(const std::string& path);
BlockMatrix load_block_matrix(const std::string& path);

}  // namespace qsync
