#include "fracquad/mesh.hpp"

#include <stdexcept>
#include <string>

namespace fracquad {

MeshP1::MeshP1(int n_div) : n_div_(n_div) {
  if (n_div < 1) {
    throw std::invalid_argument("mesh needs at least one subdivision, got " +
                                std::to_string(n_div));
  }
  const int side = n_div + 1;
  nodes_.reserve(static_cast<std::size_t>(side) * side);
  boundary_.reserve(nodes_.capacity());
  interior_index_.reserve(nodes_.capacity());
  int next_dof = 0;
  for (int j = 0; j <= n_div; ++j) {
    for (int i = 0; i <= n_div; ++i) {
      nodes_.push_back({static_cast<double>(i) / n_div, static_cast<double>(j) / n_div});
      const bool on_boundary = i == 0 || j == 0 || i == n_div || j == n_div;
      boundary_.push_back(on_boundary ? 1 : 0);
      if (on_boundary) {
        interior_index_.push_back(-1);
      } else {
        interior_index_.push_back(next_dof++);
        interior_nodes_.push_back(node_index(i, j));
      }
    }
  }

  triangles_.reserve(2 * static_cast<std::size_t>(n_div) * n_div);
  for (int j = 0; j < n_div; ++j) {
    for (int i = 0; i < n_div; ++i) {
      const int a = node_index(i, j);
      const int b = node_index(i + 1, j);
      const int c = node_index(i, j + 1);
      const int d = node_index(i + 1, j + 1);
      // Both counter-clockwise.
      triangles_.push_back({a, b, d});
      triangles_.push_back({a, d, c});
    }
  }
}

bool MeshP1::nests_into(const MeshP1& finer) const {
  if (finer.n_div_ % n_div_ != 0) return false;
  int ratio = finer.n_div_ / n_div_;
  while (ratio % 2 == 0) ratio /= 2;
  return ratio == 1;
}

std::shared_ptr<const MeshP1> build_mesh(int n_div) {
  return std::make_shared<const MeshP1>(n_div);
}

}  // namespace fracquad
