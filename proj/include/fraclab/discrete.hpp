#pragma once

// Piecewise-linear functions on a TriMesh, stored as one value per vertex.

#include <stdexcept>
#include <vector>

#include "fraclab/mesh.hpp"

namespace fraclab {

struct DiscreteFunction {
  const TriMesh* mesh = nullptr;
  std::vector<double> vertex_value;  // includes boundary vertices

  DiscreteFunction() = default;
  explicit DiscreteFunction(const TriMesh& m)
      : mesh(&m), vertex_value(m.vertex.size(), 0.0) {}

  // Lifts a coefficient vector over interior dofs; boundary values are zero.
  static DiscreteFunction from_dofs(const TriMesh& m,
                                    const std::vector<double>& dofs) {
    if (static_cast<int>(dofs.size()) != m.num_dofs())
      throw std::invalid_argument("from_dofs: wrong coefficient count");
    DiscreteFunction f(m);
    for (int i = 0; i < m.num_dofs(); ++i)
      f.vertex_value[static_cast<size_t>(m.vertex_of_dof[static_cast<size_t>(i)])] = dofs[static_cast<size_t>(i)];
    return f;
  }

  std::vector<double> dof_values() const {
    std::vector<double> d(static_cast<size_t>(mesh->num_dofs()));
    for (int i = 0; i < mesh->num_dofs(); ++i)
      d[static_cast<size_t>(i)] = vertex_value[static_cast<size_t>(mesh->vertex_of_dof[static_cast<size_t>(i)])];
    return d;
  }

  // Value inside triangle t at reference coordinates (u,v).
  double value_in(int t, double u, double v) const {
    const auto& ix = mesh->tri[static_cast<size_t>(t)];
    return (1.0 - u - v) * vertex_value[static_cast<size_t>(ix[0])] +
           u * vertex_value[static_cast<size_t>(ix[1])] +
           v * vertex_value[static_cast<size_t>(ix[2])];
  }

  // Point evaluation by linear search over elements; 0 outside the mesh.
  double operator()(Point2 p) const {
    for (int t = 0; t < mesh->num_triangles(); ++t) {
      const Triangle tri = mesh->triangle(t);
      const auto b = barycentric(tri, p);
      if (b[0] >= -1e-12 && b[1] >= -1e-12 && b[2] >= -1e-12)
        return b[0] * vertex_value[static_cast<size_t>(mesh->tri[static_cast<size_t>(t)][0])] +
               b[1] * vertex_value[static_cast<size_t>(mesh->tri[static_cast<size_t>(t)][1])] +
               b[2] * vertex_value[static_cast<size_t>(mesh->tri[static_cast<size_t>(t)][2])];
    }
    return 0.0;
  }
};

}  // namespace fraclab
