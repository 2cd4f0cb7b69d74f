#pragma once

#include <functional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "fracquad/common.hpp"
#include "fracquad/mesh.hpp"

namespace fracquad {

using Matrix2c = Eigen::Matrix2cd;
using Vector2c = Eigen::Vector2cd;
using ScalarField = std::function<Complex(Point)>;

/// Coefficients of the sesquilinear form
///   A(w, v) = int grad(w) C conj(grad(v))^T + (a . grad(w)) conj(v) + r w conj(v) dx.
struct CoefficientField {
  std::function<Matrix2c(Point)> diffusion;   // C
  std::function<Vector2c(Point)> convection;  // a
  std::function<Complex(Point)> reaction;     // r
};

enum class OperatorPreset { a1, a2, a3 };
enum class SourcePreset { f1, f2, f3 };

/// A1: Laplacian. A2: variable real diffusion with convection. A3: complex
/// non-Hermitian diffusion.
CoefficientField make_coefficients(OperatorPreset preset);

/// C = 0, a = 0, r = 1; the form degenerates to the L2 inner product.
CoefficientField mass_coefficients();

/// f1 = xy(1-x)(1-y), f2 = (xy(1-x)(1-y))^0.51, f3 = 1.
ScalarField make_source(SourcePreset preset);

/// Smoothness index used for the predicted spatial order: f1 -> 2, f2 -> 1, f3 -> 0.5.
double source_smoothness(SourcePreset preset);

std::string_view to_string(OperatorPreset preset);
std::string_view to_string(SourcePreset preset);
/// Accepts "a1".."a3" / "f1".."f3" (case-insensitive); throws std::invalid_argument.
OperatorPreset parse_operator(std::string_view name);
SourcePreset parse_source(std::string_view name);

}  // namespace fracquad
