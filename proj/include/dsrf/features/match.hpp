#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dsrf/features/sift.hpp"

namespace dsrf::features {

struct Match {
  std::size_t src = 0;
  std::size_t dst = 0;
  double distance = 0.0;
};

/// Nearest-neighbour L2 matching with the ratio test (nearest < ratio * second nearest)
/// and mutual-best filtering. A single target descriptor has no second neighbour and
/// always passes the ratio test. Empty inputs give an empty result; ratio outside
/// (0, 1) throws InvalidInput. Output is ordered by src index.
std::vector<Match> match_descriptors(std::span<const Descriptor> src, std::span<const Descriptor> dst,
                                     double ratio = 0.75);

double descriptor_distance(const Descriptor& a, const Descriptor& b);

}  // namespace dsrf::features
