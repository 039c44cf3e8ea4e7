#include "xtal/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "xtal/elements.hpp"
#include "xtal/error.hpp"
#include "xtal/evaluation.hpp"

namespace xtal {

namespace {

using json = nlohmann::json;

std::vector<double> real_list(const json& j, std::size_t expected, const char* what) {
  if (!j.is_array() || j.size() != expected) {
    throw InvalidArgument(std::string(what) + " must be a list of " + std::to_string(expected) +
                          " numbers");
  }
  std::vector<double> v;
  for (const auto& x : j) {
    if (!x.is_number()) throw InvalidArgument(std::string(what) + " holds a non-number");
    v.push_back(x.get<double>());
  }
  return v;
}

MaterialRecord parse_record(const std::string& line) {
  const json j = json::parse(line);
  if (!j.is_object()) throw InvalidArgument("record must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "id" && key != "atomic_numbers" && key != "lattice" && key != "frac_coords" &&
        key != "property") {
      throw InvalidArgument("unknown field '" + key + "'");
    }
  }
  for (const char* key : {"atomic_numbers", "lattice", "frac_coords"}) {
    if (!j.contains(key)) throw InvalidArgument(std::string("missing field '") + key + "'");
  }
  std::vector<int> types;
  const json& an = j.at("atomic_numbers");
  if (!an.is_array()) throw InvalidArgument("atomic_numbers must be a list");
  for (const auto& z : an) {
    if (!z.is_number_integer()) throw InvalidArgument("atomic_numbers holds a non-integer");
    types.push_back(z.get<int>());
  }
  const json& lat = j.at("lattice");
  if (!lat.is_array() || lat.size() != 3) throw InvalidArgument("lattice must hold 3 vectors");
  Mat3 l;
  for (int c = 0; c < 3; ++c) {
    const auto v = real_list(lat[static_cast<std::size_t>(c)], 3, "lattice vector");
    for (int r = 0; r < 3; ++r) l(r, c) = v[static_cast<std::size_t>(r)];
  }
  const json& fc = j.at("frac_coords");
  if (!fc.is_array() || fc.size() != types.size()) {
    throw InvalidArgument("frac_coords must hold one triple per atom");
  }
  Coords f(3, static_cast<Eigen::Index>(types.size()));
  for (std::size_t i = 0; i < fc.size(); ++i) {
    const auto v = real_list(fc[i], 3, "fractional coordinate");
    for (int r = 0; r < 3; ++r) {
      const double x = v[static_cast<std::size_t>(r)];
      if (!(x >= 0.0 && x < 1.0)) {
        throw InvalidArgument("fractional coordinate " + std::to_string(x) + " outside [0, 1)");
      }
      f(r, static_cast<Eigen::Index>(i)) = x;
    }
  }
  MaterialRecord rec{j.value("id", std::string()), Material::from_fractional(types, f, l), {}};
  if (j.contains("property")) {
    if (!j.at("property").is_number()) throw InvalidArgument("property must be a number");
    rec.property = j.at("property").get<double>();
  }
  return rec;
}

}  // namespace

std::vector<MaterialRecord> read_records(std::istream& in) {
  std::vector<MaterialRecord> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    try {
      out.push_back(parse_record(line));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), number);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), number);
    }
  }
  return out;
}

void write_records(std::ostream& out, const std::vector<MaterialRecord>& records) {
  for (const auto& rec : records) {
    const Material& m = rec.material;
    const Coords f = wrap_fractional(m.fractional());
    json j;
    if (!rec.id.empty()) j["id"] = rec.id;
    j["atomic_numbers"] = m.atom_types();
    json lat = json::array();
    for (int c = 0; c < 3; ++c) {
      lat.push_back({m.lattice()(0, c), m.lattice()(1, c), m.lattice()(2, c)});
    }
    j["lattice"] = lat;
    json fc = json::array();
    for (Eigen::Index i = 0; i < f.cols(); ++i) fc.push_back({f(0, i), f(1, i), f(2, i)});
    j["frac_coords"] = fc;
    if (rec.property) j["property"] = *rec.property;
    out << j.dump() << '\n';
  }
}

std::vector<MaterialRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path);
  return read_records(in);
}

std::vector<Material> load_dataset(const std::string& path) {
  std::vector<Material> out;
  for (auto& r : load_records(path)) out.push_back(std::move(r.material));
  return out;
}

void save_records(const std::string& path, const std::vector<MaterialRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset " + path);
  write_records(out, records);
  if (!out) throw IoError("failed writing dataset " + path);
}

void save_dataset(const std::string& path, const std::vector<Material>& materials) {
  std::vector<MaterialRecord> recs;
  for (std::size_t i = 0; i < materials.size(); ++i) {
    recs.push_back(MaterialRecord{"m" + std::to_string(i), materials[i], {}});
  }
  save_records(path, recs);
}

template <typename T>
Split<T> split_dataset(const std::vector<T>& items, std::uint64_t seed) {
  if (items.size() < 5) throw InvalidArgument("split_dataset: need at least 5 items");
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_val = items.size() / 5;
  const std::size_t n_test = items.size() / 5;
  const std::size_t n_train = items.size() - n_val - n_test;
  Split<T> s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const T& x = items[order[i]];
    if (i < n_train) {
      s.train.push_back(x);
    } else if (i < n_train + n_val) {
      s.val.push_back(x);
    } else {
      s.test.push_back(x);
    }
  }
  return s;
}

template Split<Material> split_dataset(const std::vector<Material>&, std::uint64_t);
template Split<MaterialRecord> split_dataset(const std::vector<MaterialRecord>&, std::uint64_t);

std::vector<Material> synth_perovskite_corpus(int count, double noise_scale, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("synth_perovskite_corpus: count must be >= 1");
  if (noise_scale < 0.0) throw InvalidArgument("synth_perovskite_corpus: negative noise scale");
  static constexpr int kA[] = {20, 38, 56};
  static constexpr int kB[] = {22, 40, 50};
  static constexpr int kX[] = {8, 16};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_a(0, 2), pick_b(0, 2), pick_x(0, 1);
  std::uniform_real_distribution<double> length(3.5, 4.5);
  std::normal_distribution<double> jitter(0.0, 1.0);
  Coords sites(3, 5);
  sites << 0.0, 0.5, 0.5, 0.5, 0.0,
           0.0, 0.5, 0.5, 0.0, 0.5,
           0.0, 0.5, 0.0, 0.5, 0.5;
  std::vector<Material> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    const int a = kA[pick_a(rng)];
    const int b = kB[pick_b(rng)];
    const int x = kX[pick_x(rng)];
    const double len = length(rng);
    const Mat3 lattice = len * Mat3::Identity();
    Coords p = lattice * sites;
    if (noise_scale > 0.0) {
      for (Eigen::Index i = 0; i < p.cols(); ++i) {
        for (int r = 0; r < 3; ++r) p(r, i) += noise_scale * jitter(rng);
      }
    }
    out.push_back(wrap_to_cell(Material({a, b, x, x, x}, std::move(p), lattice)));
  }
  return out;
}

std::string to_cif(const Material& m, const std::string& block_name) {
  const ElementTable& table = ElementTable::builtin();
  const LatticeParams p = lattice_to_params(m.lattice());
  constexpr double deg = 180.0 / std::numbers::pi;
  std::ostringstream s;
  s << std::setprecision(12);
  s << "data_" << block_name << '\n';
  s << "_symmetry_space_group_name_H-M   'P 1'\n";
  s << "_symmetry_Int_Tables_number      1\n";
  s << "_cell_length_a    " << p.lengths[0] << '\n';
  s << "_cell_length_b    " << p.lengths[1] << '\n';
  s << "_cell_length_c    " << p.lengths[2] << '\n';
  // CIF alpha is the angle between b and c, beta between a and c, gamma between a and b.
  s << "_cell_angle_alpha " << p.phi23() * deg << '\n';
  s << "_cell_angle_beta  " << p.phi13() * deg << '\n';
  s << "_cell_angle_gamma " << p.phi12() * deg << '\n';
  s << "_cell_volume      " << m.volume() << '\n';
  s << "loop_\n_symmetry_equiv_pos_as_xyz\n  'x, y, z'\n";
  s << "loop_\n_atom_site_label\n_atom_site_type_symbol\n"
       "_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\n_atom_site_occupancy\n";
  const Coords f = wrap_fractional(m.fractional());
  for (int i = 0; i < m.size(); ++i) {
    const std::string& sym = table.at(m.atom_types()[static_cast<std::size_t>(i)]).symbol;
    s << "  " << sym << i + 1 << ' ' << sym << ' ' << f(0, i) << ' ' << f(1, i) << ' ' << f(2, i)
      << " 1\n";
  }
  return s.str();
}

void export_cif(const Material& m, const std::string& path, const std::string& block_name) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write CIF " + path);
  out << to_cif(m, block_name);
  if (!out) throw IoError("failed writing CIF " + path);
}

}  // namespace xtal
