#pragma once

// Sub-blocks of the block quadrifocal tensor indexed with repeated cameras.

#include "qsync/block_tensor.hpp"
#include "qsync/geometry.hpp"

#include <span>
#include <vector>

namespace qsync {

enum class SubblockClass {
  super_diagonal,  // (i,i,i,i): vanishes
  epipole,         // (i,i,i,j): center of view i seen in view j
  trifocal,        // (i,i,j,k): trifocal entries of (i,j,k)
  fundamental,     // (i,i,j,j): fundamental entries of (i,j)
  generic,         // four distinct cameras
};

SubblockClass classify(const Quad& q);

struct SubblockComparison {
  SubblockClass cls = SubblockClass::generic;
  std::vector<double> extracted;  // entries of the Q sub-block
  std::vector<double> reference;  // independently computed entity, same order
  double alpha = 0;               // extracted ~ alpha * reference
  double residual = 0;            // ||extracted - alpha reference|| / ||extracted||
};

// views: {i} for super_diagonal, {i,j} for epipole and fundamental,
// {i,j,k} for trifocal. The reference entities are computed from `cameras`.
// Throws when the sub-block is unobserved.
SubblockComparison compare_subblock(const BlockTensor4& q, const CameraStack& cameras, SubblockClass cls,
                                    std::span<const int> views);

// Right null vector of a camera (its homogeneous center).
Eigen::Vector4d camera_center_homogeneous(const Mat34& p);

}  // namespace qsync
