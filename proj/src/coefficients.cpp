#include "fracquad/coefficients.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fracquad {
namespace {

constexpr double kPi = std::numbers::pi;

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Vector2c zero_vector(Point) { return Vector2c::Zero(); }
Complex zero_scalar(Point) { return {0.0, 0.0}; }

}  // namespace

CoefficientField make_coefficients(OperatorPreset preset) {
  using namespace std::complex_literals;
  switch (preset) {
    case OperatorPreset::a1:
      return {[](Point) -> Matrix2c { return Matrix2c::Identity(); }, zero_vector, zero_scalar};
    case OperatorPreset::a2:
      return {[](Point p) -> Matrix2c {
                Matrix2c c;
                c << 1.0 + 0.5 * std::sin(kPi * p.x), 0.5 * std::cos(kPi * p.x),
                    0.5 * std::sin(kPi * p.y), 1.0 + 0.5 * std::cos(kPi * p.y);
                return c;
              },
              [](Point p) -> Vector2c { return Vector2c(0.5 + p.y, 0.5 + p.x); }, zero_scalar};
    case OperatorPreset::a3:
      return {[](Point p) -> Matrix2c {
                Matrix2c c;
                c << 0.5 + 5.0 * p.x * 1i + p.y, p.x - p.y,
                    -p.x * p.y * 1i, 0.5 + p.x + 5.0 * p.y * 1i;
                return c;
              },
              zero_vector, zero_scalar};
  }
  throw std::invalid_argument("unknown operator preset");
}

CoefficientField mass_coefficients() {
  return {[](Point) -> Matrix2c { return Matrix2c::Zero(); }, zero_vector,
          [](Point) { return Complex(1.0, 0.0); }};
}

ScalarField make_source(SourcePreset preset) {
  switch (preset) {
    case SourcePreset::f1:
      return [](Point p) { return Complex(p.x * p.y * (1.0 - p.x) * (1.0 - p.y), 0.0); };
    case SourcePreset::f2:
      return [](Point p) {
        return Complex(std::pow(p.x * p.y * (1.0 - p.x) * (1.0 - p.y), 0.51), 0.0);
      };
    case SourcePreset::f3:
      return [](Point) { return Complex(1.0, 0.0); };
  }
  throw std::invalid_argument("unknown source preset");
}

double source_smoothness(SourcePreset preset) {
  switch (preset) {
    case SourcePreset::f1: return 2.0;
    case SourcePreset::f2: return 1.0;
    case SourcePreset::f3: return 0.5;
  }
  throw std::invalid_argument("unknown source preset");
}

std::string_view to_string(OperatorPreset preset) {
  switch (preset) {
    case OperatorPreset::a1: return "a1";
    case OperatorPreset::a2: return "a2";
    case OperatorPreset::a3: return "a3";
  }
  return "?";
}

std::string_view to_string(SourcePreset preset) {
  switch (preset) {
    case SourcePreset::f1: return "f1";
    case SourcePreset::f2: return "f2";
    case SourcePreset::f3: return "f3";
  }
  return "?";
}

OperatorPreset parse_operator(std::string_view name) {
  const std::string key = lowercase(name);
  if (key == "a1") return OperatorPreset::a1;
  if (key == "a2") return OperatorPreset::a2;
  if (key == "a3") return OperatorPreset::a3;
  throw std::invalid_argument("unknown operator '" + std::string(name) + "' (expected a1|a2|a3)");
}

SourcePreset parse_source(std::string_view name) {
  const std::string key = lowercase(name);
  if (key == "f1") return SourcePreset::f1;
  if (key == "f2") return SourcePreset::f2;
  if (key == "f3") return SourcePreset::f3;
  throw std::invalid_argument("unknown source '" + std::string(name) + "' (expected f1|f2|f3)");
}

}  // namespace fracquad
