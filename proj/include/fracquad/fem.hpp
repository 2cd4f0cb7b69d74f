#pragma once

#include <memory>
#include <vector>

#include "fracquad/coefficients.hpp"
#include "fracquad/common.hpp"
#include "fracquad/mesh.hpp"
#include "fracquad/sparse.hpp"

namespace fracquad {

/// Mass and stiffness matrices of a sesquilinear form over the interior dofs
/// of a mesh (homogeneous Dirichlet data). Row i, column j of `stiff` holds
/// A(phi_j, phi_i), so `stiff * u = load` is the Galerkin system.
struct DiscreteOperator {
  std::shared_ptr<const MeshP1> mesh;
  SparseComplex mass;
  SparseComplex stiff;

  int dofs() const { return mass.size(); }
};

/// Coefficient vector over the interior dofs of `mesh`; boundary values are zero.
struct GridFunction {
  std::shared_ptr<const MeshP1> mesh;
  CVector values;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

enum class FormKind {
  primal,   // A(w, v)
  adjoint,  // A*(w, v) = conj(A(v, w))
};

/// Stiffness terms use coefficients sampled at the triangle barycenter; the
/// mass matrix and the reaction term use the exact P1 mass integrals.
/// Throws AssemblyError naming the triangle when a coefficient is not finite.
DiscreteOperator assemble(std::shared_ptr<const MeshP1> mesh, const CoefficientField& coeffs,
                          FormKind kind = FormKind::primal);

/// Mass matrix over every mesh node, boundary included.
SparseComplex assemble_full_mass(const MeshP1& mesh);

/// b_i = (f, phi_i) with f sampled at triangle barycenters.
CVector load_vector(const MeshP1& mesh, const ScalarField& f);

/// sqrt(v* M v).
double l2_norm(const SparseComplex& mass, const CVector& v);

/// Exact nodal interpolation of a coarse P1 function onto a nested finer mesh.
CVector prolongate(const GridFunction& coarse, const MeshP1& fine);

/// || I_fine(coarse) - fine ||_{L2}. Throws Error when the meshes do not nest.
double l2_error(const GridFunction& coarse, const GridFunction& fine);
/// Same, reusing an already assembled interior mass matrix of the fine mesh.
double l2_error(const GridFunction& coarse, const GridFunction& fine, const SparseComplex& fine_mass);

}  // namespace fracquad
