#pragma once

#include "orbitkit/flow.hpp"

#include <memory>
#include <string>
#include <vector>

namespace fixtures {

using orbitkit::Vector;

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline orbitkit::DomainPredicate domain(const std::vector<std::vector<std::string>>& terms, std::size_t dim) {
  std::vector<std::vector<orbitkit::ScalarFunctionPtr>> t;
  for (const auto& term : terms) {
    std::vector<orbitkit::ScalarFunctionPtr> c;
    for (const auto& e : term) c.push_back(orbitkit::exprFunction(e, dim));
    t.push_back(c);
  }
  return orbitkit::DomainPredicate::unionOf(t);
}

inline orbitkit::DomainPredicate conj(const std::vector<std::string>& c, std::size_t dim = 2) {
  return domain({c}, dim);
}

inline std::shared_ptr<orbitkit::ManifoldModel> plane(const std::vector<std::string>& modelDomain = {},
                                                      double half = 3.0, std::size_t dim = 2) {
  auto m = std::make_shared<orbitkit::ManifoldModel>();
  m->dim = dim;
  m->reference = orbitkit::identityChart("reference", dim, conj(modelDomain, dim));
  m->samplingBox = {Vector::Constant(static_cast<Eigen::Index>(dim), -half),
                    Vector::Constant(static_cast<Eigen::Index>(dim), half)};
  return m;
}

inline orbitkit::ChartSpec chart(std::string id, const std::vector<std::string>& fwd,
                                 const std::vector<std::string>& inv, orbitkit::DomainPredicate d = {}) {
  orbitkit::ChartSpec c;
  c.id = std::move(id);
  c.dim = fwd.size();
  c.forward = orbitkit::exprMap(fwd, fwd.size());
  c.inverse = orbitkit::exprMap(inv, inv.size());
  c.domain = std::move(d);
  return c;
}

inline std::shared_ptr<orbitkit::VectorFieldModel> field(std::shared_ptr<orbitkit::ManifoldModel> m,
                                                         const std::vector<std::string>& comps) {
  return std::make_shared<orbitkit::VectorFieldModel>(std::move(m), comps);
}

}  // namespace fixtures
