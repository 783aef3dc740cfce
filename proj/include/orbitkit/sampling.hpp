#pragma once

#include "orbitkit/core.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace orbitkit {

/// Scrambled Halton sequence: radical inverses in the first primes, shifted by a
/// per-dimension offset drawn from a seeded generator (Cranley-Patterson
/// rotation). Fully determined by (dim, seed).
class Halton {
 public:
  Halton(std::size_t dim, std::uint64_t seed);
  /// Point `index` of the sequence in the unit cube.
  [[nodiscard]] Vector unit(std::uint64_t index) const;

 private:
  std::vector<double> shift_;
};

std::vector<Vector> haltonPoints(const Box& box, std::size_t count, std::uint64_t seed);

/// Up to `count` points of `box` accepted by `keep`, drawing at most
/// `count * maxRatio` candidates.
std::vector<Vector> samplePoints(const Box& box, std::size_t count, std::uint64_t seed,
                                 const std::function<bool(const Vector&)>& keep,
                                 std::size_t maxRatio = 64);

/// Tensor grid with `perAxis` points per axis at cell centres.
std::vector<Vector> gridPoints(const Box& box, std::size_t perAxis);

}  // namespace orbitkit
