#include "fracquad/fem.hpp"

#include <array>
#include <cmath>

#include <fmt/format.h>

namespace fracquad {
namespace {

struct TriangleGeometry {
  double area;
  std::array<Eigen::Vector2d, 3> grads;
  Point barycenter;
};

TriangleGeometry geometry(const MeshP1& mesh, const std::array<int, 3>& tri) {
  const Point p0 = mesh.nodes()[tri[0]];
  const Point p1 = mesh.nodes()[tri[1]];
  const Point p2 = mesh.nodes()[tri[2]];
  const double twice_area = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  TriangleGeometry g;
  g.area = 0.5 * twice_area;
  g.grads[0] = Eigen::Vector2d(p1.y - p2.y, p2.x - p1.x) / twice_area;
  g.grads[1] = Eigen::Vector2d(p2.y - p0.y, p0.x - p2.x) / twice_area;
  g.grads[2] = Eigen::Vector2d(p0.y - p1.y, p1.x - p0.x) / twice_area;
  g.barycenter = {(p0.x + p1.x + p2.x) / 3.0, (p0.y + p1.y + p2.y) / 3.0};
  return g;
}

double mass_entry(double area, int i, int j) { return area / 12.0 * (i == j ? 2.0 : 1.0); }

bool finite(Complex v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

}  // namespace

DiscreteOperator assemble(std::shared_ptr<const MeshP1> mesh, const CoefficientField& coeffs, FormKind kind) {
  const int dofs = mesh->interior_count();
  std::vector<Triplet> mass_entries;
  std::vector<Triplet> stiff_entries;
  mass_entries.reserve(static_cast<std::size_t>(mesh->triangle_count()) * 9);
  stiff_entries.reserve(mass_entries.capacity());

  for (int t = 0; t < mesh->triangle_count(); ++t) {
    const auto& tri = mesh->triangles()[t];
    const TriangleGeometry g = geometry(*mesh, tri);
    const Matrix2c c = coeffs.diffusion(g.barycenter);
    const Vector2c a = coeffs.convection(g.barycenter);
    const Complex r = coeffs.reaction(g.barycenter);
    if (!c.allFinite() || !a.allFinite() || !finite(r)) {
      throw AssemblyError(fmt::format("non-finite coefficient on triangle {} (barycenter {:.6g}, {:.6g})", t,
                                      g.barycenter.x, g.barycenter.y));
    }

    // local(i, j) = A(phi_j, phi_i); gradients are real so no conjugation is needed.
    Eigen::Matrix3cd local;
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector2cd grad_i = g.grads[i].cast<Complex>();
      for (int j = 0; j < 3; ++j) {
        const Eigen::Vector2cd grad_j = g.grads[j].cast<Complex>();
        const Complex diffusion = (grad_j.transpose() * c * grad_i)(0, 0);
        const Complex convection = (a.transpose() * grad_j)(0, 0);
        local(i, j) = g.area * diffusion + convection * (g.area / 3.0) + r * mass_entry(g.area, i, j);
      }
    }
    if (kind == FormKind::adjoint) local = local.adjoint().eval();

    for (int i = 0; i < 3; ++i) {
      const int row = mesh->interior_index(tri[i]);
      if (row < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int col = mesh->interior_index(tri[j]);
        if (col < 0) continue;
        mass_entries.push_back({row, col, mass_entry(g.area, i, j)});
        stiff_entries.push_back({row, col, local(i, j)});
      }
    }
  }

  DiscreteOperator op;
  op.mesh = std::move(mesh);
  op.mass = SparseComplex::from_triplets(dofs, mass_entries);
  op.stiff = SparseComplex::from_triplets(dofs, stiff_entries);
  return op;
}

SparseComplex assemble_full_mass(const MeshP1& mesh) {
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(mesh.triangle_count()) * 9);
  for (const auto& tri : mesh.triangles()) {
    const double area = geometry(mesh, tri).area;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) entries.push_back({tri[i], tri[j], mass_entry(area, i, j)});
    }
  }
  return SparseComplex::from_triplets(mesh.node_count(), entries);
}

CVector load_vector(const MeshP1& mesh, const ScalarField& f) {
  CVector load = CVector::Zero(mesh.interior_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const TriangleGeometry g = geometry(mesh, tri);
    const Complex value = f(g.barycenter);
    if (!finite(value)) {
      throw AssemblyError(fmt::format("non-finite source value on triangle {}", t));
    }
    for (int i = 0; i < 3; ++i) {
      const int row = mesh.interior_index(tri[i]);
      if (row >= 0) load[row] += value * (g.area / 3.0);
    }
  }
  return load;
}

double l2_norm(const SparseComplex& mass, const CVector& v) {
  const Complex q = v.dot(mass * v);
  return std::sqrt(std::max(q.real(), 0.0));
}

CVector prolongate(const GridFunction& coarse, const MeshP1& fine) {
  const MeshP1& cm = *coarse.mesh;
  if (!cm.nests_into(fine)) {
    throw Error(fmt::format("mesh with {} subdivisions does not nest into mesh with {}", cm.n_div(), fine.n_div()));
  }
  if (coarse.values.size() != cm.interior_count()) {
    throw DimensionError("grid function length does not match its mesh");
  }
  const int n = cm.n_div();
  const int ratio = fine.n_div() / n;
  auto value = [&](int i, int j) -> Complex {
    const int dof = cm.interior_index(cm.node_index(i, j));
    return dof < 0 ? Complex(0.0) : coarse.values[dof];
  };

  CVector out(fine.interior_count());
  for (int node : fine.interior_nodes()) {
    const int fi = node % (fine.n_div() + 1);
    const int fj = node / (fine.n_div() + 1);
    const int i = std::min(fi / ratio, n - 1);
    const int j = std::min(fj / ratio, n - 1);
    const int di = fi - i * ratio;  // local offsets in units of the fine spacing
    const int dj = fj - j * ratio;
    const double sx = static_cast<double>(di) / ratio;
    const double sy = static_cast<double>(dj) / ratio;
    Complex v;
    if (di >= dj) {
      // Lower triangle (i,j), (i+1,j), (i+1,j+1).
      v = value(i, j) + (value(i + 1, j) - value(i, j)) * sx + (value(i + 1, j + 1) - value(i + 1, j)) * sy;
    } else {
      // Upper triangle (i,j), (i+1,j+1), (i,j+1).
      v = value(i, j) + (value(i, j + 1) - value(i, j)) * sy + (value(i + 1, j + 1) - value(i, j + 1)) * sx;
    }
    out[fine.interior_index(node)] = v;
  }
  return out;
}

double l2_error(const GridFunction& coarse, const GridFunction& fine, const SparseComplex& fine_mass) {
  if (fine.values.size() != fine_mass.size()) throw DimensionError("fine mass matrix does not match fine grid function");
  return l2_norm(fine_mass, prolongate(coarse, *fine.mesh) - fine.values);
}

double l2_error(const GridFunction& coarse, const GridFunction& fine) {
  const DiscreteOperator mass_op = assemble(fine.mesh, mass_coefficients());
  return l2_error(coarse, fine, mass_op.mass);
}

}  // namespace fracquad
