#include "orbitkit/sampling.hpp"

#include <array>
#include <random>

namespace orbitkit {

namespace {

constexpr std::array<std::uint32_t, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radicalInverse(std::uint64_t index, std::uint32_t base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

}  // namespace

Halton::Halton(std::size_t dim, std::uint64_t seed) : shift_(dim) {
  if (dim > kPrimes.size()) throw Error(ErrorKind::DimensionMismatch, "sampling dimension too large");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& s : shift_) s = u(rng);
}

Vector Halton::unit(std::uint64_t index) const {
  Vector p(static_cast<Eigen::Index>(shift_.size()));
  for (std::size_t d = 0; d < shift_.size(); ++d) {
    double x = radicalInverse(index + 1, kPrimes[d]) + shift_[d];
    if (x >= 1.0) x -= 1.0;
    p[static_cast<Eigen::Index>(d)] = x;
  }
  return p;
}

std::vector<Vector> haltonPoints(const Box& box, std::size_t count, std::uint64_t seed) {
  const Halton h(box.dim(), seed);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(box.at(h.unit(i)));
  return out;
}

std::vector<Vector> samplePoints(const Box& box, std::size_t count, std::uint64_t seed,
                                 const std::function<bool(const Vector&)>& keep,
                                 std::size_t maxRatio) {
  const Halton h(box.dim(), seed);
  std::vector<Vector> out;
  const std::size_t budget = count * maxRatio;
  for (std::size_t i = 0; i < budget && out.size() < count; ++i) {
    Vector p = box.at(h.unit(i));
    if (keep(p)) out.push_back(std::move(p));
  }
  return out;
}

std::vector<Vector> gridPoints(const Box& box, std::size_t perAxis) {
  const std::size_t dim = box.dim();
  std::size_t total = 1;
  for (std::size_t d = 0; d < dim; ++d) total *= perAxis;
  std::vector<Vector> out;
  out.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    Vector unit(static_cast<Eigen::Index>(dim));
    std::size_t rest = i;
    for (std::size_t d = 0; d < dim; ++d) {
      unit[static_cast<Eigen::Index>(d)] = (static_cast<double>(rest % perAxis) + 0.5) / static_cast<double>(perAxis);
      rest /= perAxis;
    }
    out.push_back(box.at(unit));
  }
  return out;
}

}  // namespace orbitkit
