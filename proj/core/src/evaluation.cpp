#include "xtal/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "xtal/error.hpp"
#include "xtal/periodic_graph.hpp"

namespace xtal {

double density(const Material& m) {
  const ElementTable& table = ElementTable::builtin();
  double mass = 0.0;
  for (int z : m.atom_types()) mass += table.at(z).mass;
  return kDensityFactor * mass / m.volume();
}

bool structure_validity(const Material& m, double threshold) {
  return min_periodic_distance(m, threshold) > threshold;
}

CompositionVerdict composition_validity(const std::vector<int>& atom_types,
                                        const ElementTable& table) {
  if (atom_types.empty()) return CompositionVerdict::Invalid;
  std::map<int, int> counts;
  for (int z : atom_types) ++counts[z];
  std::vector<std::pair<int, const ElementInfo*>> elements;
  for (const auto& [z, n] : counts) {
    const ElementInfo* info = table.find(z);
    if (!info) return CompositionVerdict::UnknownElement;
    elements.emplace_back(n, info);
  }
  // Reachable partial charge sums after assigning a state to each element in turn.
  std::set<long> reachable{0};
  for (const auto& [n, info] : elements) {
    std::set<long> next;
    for (long s : reachable) {
      for (int state : info->oxidation_states) next.insert(s + static_cast<long>(n) * state);
    }
    reachable = std::move(next);
    if (reachable.empty()) return CompositionVerdict::Invalid;
  }
  return reachable.count(0) ? CompositionVerdict::Valid : CompositionVerdict::Invalid;
}

double emd_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("emd_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double x = std::min(a.front(), b.front());
  double total = 0.0;
  while (ia < a.size() || ib < b.size()) {
    double next;
    if (ib == b.size() || (ia < a.size() && a[ia] <= b[ib])) {
      next = a[ia];
    } else {
      next = b[ib];
    }
    total += std::abs(ia / na - ib / nb) * (next - x);
    x = next;
    while (ia < a.size() && a[ia] == x) ++ia;
    while (ib < b.size() && b[ib] == x) ++ib;
  }
  return total;
}

Eigen::VectorXd composition_fingerprint(const Material& m, int element_count) {
  Eigen::VectorXd fp = Eigen::VectorXd::Zero(element_count);
  for (int z : m.atom_types()) {
    if (z < 1 || z > element_count) throw InvalidArgument("element outside fingerprint range");
    fp(z - 1) += 1.0;
  }
  return fp;
}

Eigen::VectorXd structure_fingerprint(const Material& m, int bins, double cutoff) {
  if (bins < 1) throw InvalidArgument("structure fingerprint needs at least one bin");
  Eigen::VectorXd fp = Eigen::VectorXd::Zero(bins + 1);
  const MultiGraph g = build_multigraph(m, cutoff);
  for (const Edge& e : g.edges()) {
    const int b = std::min(bins - 1, static_cast<int>(e.d / cutoff * bins));
    fp(b) += 1.0;
  }
  if (g.edge_count() > 0) fp.head(bins) /= static_cast<double>(g.edge_count());
  fp(bins) = density(m);
  return fp;
}

std::pair<double, double> cov_metrics(const std::vector<Material>& gen,
                                      const std::vector<Material>& ref,
                                      const CoverageThresholds& th) {
  if (gen.empty() || ref.empty()) throw InvalidArgument("cov_metrics: empty material set");
  std::vector<Eigen::VectorXd> gc, gs, rc, rs;
  for (const auto& m : gen) {
    gc.push_back(composition_fingerprint(m));
    gs.push_back(structure_fingerprint(m));
  }
  for (const auto& m : ref) {
    rc.push_back(composition_fingerprint(m));
    rs.push_back(structure_fingerprint(m));
  }
  std::vector<char> ref_hit(ref.size(), 0), gen_hit(gen.size(), 0);
  for (std::size_t i = 0; i < gen.size(); ++i) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if ((gc[i] - rc[j]).norm() < th.composition && (gs[i] - rs[j]).norm() < th.structure) {
        gen_hit[i] = 1;
        ref_hit[j] = 1;
      }
    }
  }
  const double cov_r = std::count(ref_hit.begin(), ref_hit.end(), 1) / static_cast<double>(ref.size());
  const double cov_p = std::count(gen_hit.begin(), gen_hit.end(), 1) / static_cast<double>(gen.size());
  return {cov_r, cov_p};
}

double uniqueness(const std::vector<Material>& gen) {
  if (gen.empty()) throw InvalidArgument("uniqueness: empty material set");
  std::set<std::vector<int>> distinct;
  for (const auto& m : gen) {
    std::vector<int> a = m.atom_types();
    std::sort(a.begin(), a.end());
    distinct.insert(std::move(a));
  }
  return static_cast<double>(distinct.size()) / static_cast<double>(gen.size());
}

ReconstructionMetrics reconstruction_metrics(
    const std::vector<std::pair<Material, Material>>& pairs, double distance_cutoff) {
  ReconstructionMetrics r;
  if (pairs.empty()) return r;
  std::size_t matches = 0, dist_count = 0;
  double lat_se = 0.0, len_se = 0.0, dist_se = 0.0;
  for (const auto& [target, recon] : pairs) {
    std::vector<int> a = target.atom_types(), b = recon.atom_types();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a == b) ++matches;
    const LatticeParams pt = lattice_to_params(target.lattice());
    const LatticeParams pr = lattice_to_params(recon.lattice());
    for (std::size_t i = 0; i < 3; ++i) {
      const double dl = pt.lengths[i] - pr.lengths[i];
      const double da = pt.angles[i] - pr.angles[i];
      lat_se += dl * dl + da * da;
      len_se += dl * dl;
    }
    const auto dt = distance_multiset(build_multigraph(target, distance_cutoff));
    const auto dr = distance_multiset(build_multigraph(recon, distance_cutoff));
    const std::size_t n = std::min(dt.size(), dr.size());
    for (std::size_t i = 0; i < n; ++i) dist_se += (dt[i] - dr[i]) * (dt[i] - dr[i]);
    dist_count += n;
  }
  const double np = static_cast<double>(pairs.size());
  r.atom_type_match_rate = static_cast<double>(matches) / np;
  r.lattice_rmse = std::sqrt(lat_se / (6.0 * np));
  r.lattice_length_rmse = std::sqrt(len_se / (3.0 * np));
  r.distance_rmse = dist_count ? std::sqrt(dist_se / static_cast<double>(dist_count)) : 0.0;
  return r;
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

std::vector<std::pair<std::string, std::string>> MetricsReport::fields() const {
  return {{"composition_validity", fmt(composition_validity)},
          {"structure_validity", fmt(structure_validity)},
          {"unknown_element_count", std::to_string(unknown_element_count)},
          {"emd_element_count", fmt(emd_element_count)},
          {"emd_density", fmt(emd_density)},
          {"simplified_fingerprint_cov_r", fmt(cov_r)},
          {"simplified_fingerprint_cov_p", fmt(cov_p)},
          {"uniqueness", fmt(uniqueness)},
          {"generated_count", std::to_string(generated_count)},
          {"reference_count", std::to_string(reference_count)}};
}

void MetricsReport::write_key_value(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics to " + path);
  for (const auto& [k, v] : fields()) out << k << " = " << v << '\n';
  if (!out) throw IoError("failed writing metrics to " + path);
}

void MetricsReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics to " + path);
  const auto f = fields();
  for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << f[i].first;
  out << '\n';
  for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << f[i].second;
  out << '\n';
  if (!out) throw IoError("failed writing metrics to " + path);
}

MetricsReport evaluate(const std::vector<Material>& gen, const std::vector<Material>& ref,
                       const CoverageThresholds& thresholds) {
  if (gen.empty() || ref.empty()) throw InvalidArgument("evaluate: empty material set");
  MetricsReport r;
  r.generated_count = static_cast<long>(gen.size());
  r.reference_count = static_cast<long>(ref.size());
  long valid_comp = 0, valid_struct = 0;
  for (const auto& m : gen) {
    switch (composition_validity(m.atom_types())) {
      case CompositionVerdict::Valid: ++valid_comp; break;
      case CompositionVerdict::UnknownElement: ++r.unknown_element_count; break;
      case CompositionVerdict::Invalid: break;
    }
    if (structure_validity(m)) ++valid_struct;
  }
  const long known = r.generated_count - r.unknown_element_count;
  r.composition_validity = known ? static_cast<double>(valid_comp) / known : 0.0;
  r.structure_validity = static_cast<double>(valid_struct) / r.generated_count;

  auto distinct_elements = [](const Material& m) {
    return static_cast<double>(std::set<int>(m.atom_types().begin(), m.atom_types().end()).size());
  };
  std::vector<double> ge, re, gd, rd;
  for (const auto& m : gen) {
    ge.push_back(distinct_elements(m));
    gd.push_back(density(m));
  }
  for (const auto& m : ref) {
    re.push_back(distinct_elements(m));
    rd.push_back(density(m));
  }
  r.emd_element_count = emd_1d(ge, re);
  r.emd_density = emd_1d(gd, rd);
  std::tie(r.cov_r, r.cov_p) = cov_metrics(gen, ref, thresholds);
  r.uniqueness = uniqueness(gen);
  return r;
}

}  // namespace xtal
