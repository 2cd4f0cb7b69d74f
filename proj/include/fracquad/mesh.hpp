#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace fracquad {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform right-triangle triangulation of the unit square.
///
/// Grid node (i, j) sits at (i*h, j*h) and has index j*(n_div+1) + i. Every
/// cell is split along the diagonal from (i, j) to (i+1, j+1), so the mesh
/// with n_div = 2m contains the mesh with n_div = m as a nested refinement.
class MeshP1 {
 public:
  explicit MeshP1(int n_div);

  int n_div() const { return n_div_; }
  double h() const { return 1.0 / n_div_; }

  std::span<const Point> nodes() const { return nodes_; }
  std::span<const std::array<int, 3>> triangles() const { return triangles_; }

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int triangle_count() const { return static_cast<int>(triangles_.size()); }
  int node_index(int i, int j) const { return j * (n_div_ + 1) + i; }

  bool is_boundary(int node) const { return boundary_[node] != 0; }

  /// Interior degrees of freedom, numbered in node order skipping the boundary.
  int interior_count() const { return (n_div_ - 1) * (n_div_ - 1); }
  /// Dof index of a node, or -1 for boundary nodes.
  int interior_index(int node) const { return interior_index_[node]; }
  std::span<const int> interior_nodes() const { return interior_nodes_; }

  /// True when every vertex of this mesh is a vertex of `finer` (dyadic refinement).
  bool nests_into(const MeshP1& finer) const;

 private:
  int n_div_;
  std::vector<Point> nodes_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<char> boundary_;
  std::vector<int> interior_index_;
  std::vector<int> interior_nodes_;
};

/// Throws std::invalid_argument for n_div < 1.
std::shared_ptr<const MeshP1> build_mesh(int n_div);

}  // namespace fracquad
