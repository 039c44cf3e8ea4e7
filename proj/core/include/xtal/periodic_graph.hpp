#pragma once

#include <optional>
#include <span>
#include <vector>

#include "xtal/crystal.hpp"

namespace xtal {

/// Directed periodic edge: atom i sees the image of atom j displaced by
/// lattice offset k, i.e. the vector p_i + L k - p_j.
struct Edge {
  int i = 0;
  int j = 0;
  IVec3 k = IVec3::Zero();
  double d = 0.0;
  Vec3 u = Vec3::Zero();  // (p_i + L k - p_j) / d
};

/// Cutoff multi-graph over all periodic images. Edges are stored in both
/// orientations and sorted by (i, j, k_x, k_y, k_z).
class MultiGraph {
 public:
  MultiGraph() = default;
  MultiGraph(int n, double cutoff, std::vector<Edge> edges);

  int node_count() const { return n_; }
  double cutoff() const { return cutoff_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }

  std::span<const Edge> neighbors(int i) const;
  /// Index of edge (i, j, k), if present.
  std::optional<std::size_t> find(int i, int j, const IVec3& k) const;
  /// reverse_index()[e] is the index of the edge (j, i, -k) for edge e.
  std::vector<std::size_t> reverse_index() const;

 private:
  int n_ = 0;
  double cutoff_ = 0.0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> row_begin_;
};

/// Number of image shells to scan per lattice axis so that every pair within
/// `cutoff` is found once coordinates lie inside the cell.
IVec3 image_scan_bounds(const Mat3& lattice, double cutoff);

/// All (i, j, k) with 0 < |p_i + L k - p_j| <= cutoff. Coincident atoms
/// (distance below 1e-12) produce no edge.
MultiGraph build_multigraph(const Material& m, double cutoff);

std::span<const Edge> neighbor_list(const MultiGraph& g, int i);
std::vector<double> distance_multiset(const MultiGraph& g);

/// Smallest periodic interatomic distance (self images included, the atom
/// itself excluded); +inf when nothing lies within `search_radius`.
double min_periodic_distance(const Material& m, double search_radius);

}  // namespace xtal
