#include "xtal/periodic_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "xtal/error.hpp"

namespace xtal {

namespace {

constexpr double kCoincident = 1e-12;

auto edge_key(const Edge& e) { return std::make_tuple(e.i, e.j, e.k.x(), e.k.y(), e.k.z()); }

struct WrappedCell {
  Coords positions;   // wrapped Cartesian positions
  ShiftMatrix shifts; // wrapped = original + L * shift
};

WrappedCell wrap_positions(const Material& m) {
  WrappedCell w;
  const Coords frac = m.fractional();
  w.positions = m.lattice() * wrap_fractional(frac, &w.shifts);
  return w;
}

// Visits every (i, j, k) with |w_i + L k_w - w_j| <= radius; k_w is the
// offset between wrapped positions and k the offset relative to the original
// coordinates.
template <typename Visit>
void scan_images(const Material& m, double radius, Visit&& visit) {
  const WrappedCell w = wrap_positions(m);
  const IVec3 bound = image_scan_bounds(m.lattice(), radius);
  const Mat3& lat = m.lattice();
  const int n = m.size();
  const double r2 = radius * radius;
  for (int kx = -bound.x(); kx <= bound.x(); ++kx) {
    for (int ky = -bound.y(); ky <= bound.y(); ++ky) {
      for (int kz = -bound.z(); kz <= bound.z(); ++kz) {
        const IVec3 kw(kx, ky, kz);
        const Vec3 offset = lat * kw.cast<double>();
        for (int i = 0; i < n; ++i) {
          const Vec3 base = w.positions.col(i) + offset;
          for (int j = 0; j < n; ++j) {
            const Vec3 v = base - w.positions.col(j);
            const double d2 = v.squaredNorm();
            if (d2 > r2) continue;
            const IVec3 k = kw + w.shifts.col(i) - w.shifts.col(j);
            visit(i, j, kw, k, v, d2);
          }
        }
      }
    }
  }
}

}  // namespace

MultiGraph::MultiGraph(int n, double cutoff, std::vector<Edge> edges)
    : n_(n), cutoff_(cutoff), edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return edge_key(a) < edge_key(b); });
  row_begin_.assign(n_ + 1, 0);
  for (const auto& e : edges_) {
    if (e.i < 0 || e.i >= n_ || e.j < 0 || e.j >= n_) {
      throw InvalidArgument("edge endpoint out of range");
    }
    ++row_begin_[e.i + 1];
  }
  for (int i = 0; i < n_; ++i) row_begin_[i + 1] += row_begin_[i];
}

std::span<const Edge> MultiGraph::neighbors(int i) const {
  if (i < 0 || i >= n_) {
    throw InvalidArgument("node index " + std::to_string(i) + " out of range");
  }
  return std::span<const Edge>(edges_).subspan(row_begin_[i], row_begin_[i + 1] - row_begin_[i]);
}

std::optional<std::size_t> MultiGraph::find(int i, int j, const IVec3& k) const {
  if (i < 0 || i >= n_) return std::nullopt;
  Edge probe;
  probe.i = i;
  probe.j = j;
  probe.k = k;
  const auto first = edges_.begin() + static_cast<std::ptrdiff_t>(row_begin_[i]);
  const auto last = edges_.begin() + static_cast<std::ptrdiff_t>(row_begin_[i + 1]);
  const auto it = std::lower_bound(first, last, probe, [](const Edge& a, const Edge& b) {
    return edge_key(a) < edge_key(b);
  });
  if (it == last || edge_key(*it) != edge_key(probe)) return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

std::vector<std::size_t> MultiGraph::reverse_index() const {
  std::vector<std::size_t> rev(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto r = find(edges_[e].j, edges_[e].i, -edges_[e].k);
    if (!r) throw InvalidArgument("multigraph is not closed under edge reversal");
    rev[e] = *r;
  }
  return rev;
}

IVec3 image_scan_bounds(const Mat3& lattice, double cutoff) {
  const double volume = std::abs(lattice.determinant());
  IVec3 bound;
  for (int a = 0; a < 3; ++a) {
    const Vec3 cross = lattice.col((a + 1) % 3).cross(lattice.col((a + 2) % 3));
    const double height = volume / cross.norm();
    bound[a] = static_cast<int>(std::ceil(cutoff / height)) + 1;
  }
  return bound;
}

MultiGraph build_multigraph(const Material& m, double cutoff) {
  if (!(cutoff > 0.0) || !std::isfinite(cutoff)) {
    throw InvalidArgument("cutoff must be positive and finite");
  }
  std::vector<Edge> edges;
  // Each undirected edge is computed once and stored with its exact mirror,
  // so (i, j, k) and (j, i, -k) carry bit-identical distances.
  scan_images(m, cutoff,
              [&](int i, int j, const IVec3& kw, const IVec3& k, const Vec3& v, double d2) {
                const bool canonical =
                    i < j || (i == j && std::make_tuple(kw.x(), kw.y(), kw.z()) >
                                            std::make_tuple(0, 0, 0));
                if (!canonical) return;
                const double d = std::sqrt(d2);
                if (d < kCoincident) return;
                const Vec3 u = v / d;
                edges.push_back(Edge{i, j, k, d, u});
                edges.push_back(Edge{j, i, -k, d, -u});
              });
  return MultiGraph(m.size(), cutoff, std::move(edges));
}

std::span<const Edge> neighbor_list(const MultiGraph& g, int i) { return g.neighbors(i); }

std::vector<double> distance_multiset(const MultiGraph& g) {
  std::vector<double> d;
  d.reserve(g.edge_count());
  for (const auto& e : g.edges()) d.push_back(e.d);
  std::sort(d.begin(), d.end());
  return d;
}

double min_periodic_distance(const Material& m, double search_radius) {
  double best2 = std::numeric_limits<double>::infinity();
  scan_images(m, search_radius,
              [&](int i, int j, const IVec3&, const IVec3& k, const Vec3&, double d2) {
    if (i == j && k.isZero()) return;
    best2 = std::min(best2, d2);
  });
  return std::sqrt(best2);
}

}  // namespace xtal
