#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "xtal/error.hpp"
#include "xtal/evaluation.hpp"
#include "xtal/io.hpp"
#include "xtal/verify.hpp"

using namespace xtal;
using test::cubic;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "xtal_io_test";
  fs::create_directories(d);
  return d / name;
}

std::vector<MaterialRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return read_records(in);
}

int parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

/// Minimal P1 CIF reader using the crystallographic convention
/// a along x, b in the xy plane.
Material read_cif(const std::string& text) {
  std::istringstream in(text);
  std::map<std::string, double> cell;
  std::vector<int> types;
  std::vector<Vec3> frac;
  std::string line;
  bool atoms = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key.rfind("_cell_", 0) == 0) {
      double v;
      ls >> v;
      cell[key] = v;
    } else if (key == "_atom_site_occupancy") {
      atoms = true;
    } else if (atoms && !key.empty() && key[0] != '_') {
      std::string sym;
      Vec3 f;
      ls >> sym >> f(0) >> f(1) >> f(2);
      types.push_back(*ElementTable::builtin().atomic_number(sym));
      frac.push_back(f);
    }
  }
  const double deg = std::numbers::pi / 180.0;
  const double a = cell.at("_cell_length_a"), b = cell.at("_cell_length_b"), c = cell.at("_cell_length_c");
  const double al = cell.at("_cell_angle_alpha") * deg, be = cell.at("_cell_angle_beta") * deg,
               ga = cell.at("_cell_angle_gamma") * deg;
  Mat3 l;
  l.col(0) = Vec3(a, 0, 0);
  l.col(1) = Vec3(b * std::cos(ga), b * std::sin(ga), 0);
  const double cx = c * std::cos(be);
  const double cy = c * (std::cos(al) - std::cos(be) * std::cos(ga)) / std::sin(ga);
  l.col(2) = Vec3(cx, cy, std::sqrt(c * c - cx * cx - cy * cy));
  return test::from_frac(types, frac, l);
}

}  // namespace

TEST(Dataset, RoundTripThroughFile) {
  std::mt19937_64 rng(1);
  std::vector<Material> ms;
  for (int i = 0; i < 3; ++i) ms.push_back(wrap_to_cell(verify::random_material(rng)));
  const fs::path p = scratch("three.jsonl");
  save_dataset(p.string(), ms);
  const auto back = load_dataset(p.string());
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].atom_types(), ms[i].atom_types());
    EXPECT_EQ(back[i].lattice(), ms[i].lattice());
    EXPECT_LT(test::max_abs(back[i].coords() - ms[i].coords()), 1e-12);
  }
  const auto records = load_records(p.string());
  EXPECT_EQ(records[2].id, "m2");
  EXPECT_FALSE(records[0].property.has_value());
}

TEST(Dataset, RecordFieldsAndLatticeColumns) {
  const auto r = parse(
      R"({"id":"x","atomic_numbers":[11,17],"lattice":[[2,0,0],[1,3,0],[0,0,4]],)"
      R"("frac_coords":[[0,0,0],[0.5,0.5,0.5]],"property":1.25})"
      "\n\n");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].id, "x");
  EXPECT_EQ(*r[0].property, 1.25);
  // Each inner list is one lattice vector, i.e. one matrix column.
  EXPECT_EQ(r[0].material.lattice().col(1), Vec3(1, 3, 0));
  EXPECT_LT((r[0].material.coords().col(1) - Vec3(1.5, 1.5, 2)).norm(), 1e-15);
  std::ostringstream out;
  write_records(out, r);
  const auto again = parse(out.str());
  EXPECT_EQ(again[0].material.coords(), r[0].material.coords());
  EXPECT_EQ(again[0].property, r[0].property);
}

TEST(Dataset, ErrorsNameTheLine) {
  const std::string good =
      R"({"atomic_numbers":[1],"lattice":[[2,0,0],[0,2,0],[0,0,2]],"frac_coords":[[0,0,0]]})";
  EXPECT_EQ(parse_error_line(good + "\n" +
                             R"({"atomic_numbers":[1],"lattice":[[2,0,0],[0,2,0],[0,0,2]],"frac_coords":[[0,0]]})"),
            2);
  EXPECT_EQ(parse_error_line(R"({"atomic_numbers":[1],"lattice":[[2,0,0],[0,2,0],[0,0,2]],"frac_coords":[[1.0,0,0]]})"), 1);
  EXPECT_EQ(parse_error_line(R"({"atomic_numbers":[1],"lattice":[[2,0,0],[0,2,0],[0,0,2]],"frac_coords":[[-0.1,0,0]]})"), 1);
  EXPECT_EQ(parse_error_line(good + "\n\n{not json"), 3);
  EXPECT_EQ(parse_error_line(R"({"atomic_numbers":[1],"lattice":[[2,0,0],[0,2,0],[0,0,2]],"frac_coords":[[0,0,0]],"extra":1})"), 1);
  EXPECT_EQ(parse_error_line(R"({"atomic_numbers":[1],"lattice":[[2,0,0],[0,2,0]],"frac_coords":[[0,0,0]]})"), 1);
  EXPECT_EQ(parse_error_line(R"({"atomic_numbers":[1],"lattice":[[2,0,0],[4,0,0],[0,0,2]],"frac_coords":[[0,0,0]]})"), 1);
  EXPECT_EQ(parse_error_line(R"({"atomic_numbers":[1.5],"lattice":[[2,0,0],[0,2,0],[0,0,2]],"frac_coords":[[0,0,0]]})"), 1);
  EXPECT_EQ(parse_error_line(R"({"lattice":[[2,0,0],[0,2,0],[0,0,2]],"frac_coords":[[0,0,0]]})"), 1);
}

TEST(Dataset, EmptyFileAndMissingFile) {
  const fs::path p = scratch("empty.jsonl");
  { std::ofstream(p.string()); }
  EXPECT_TRUE(load_dataset(p.string()).empty());
  EXPECT_THROW(load_dataset(scratch("missing.jsonl").string() + "x"), IoError);
}

TEST(Split, SizesDeterminismAndUnion) {
  std::vector<Material> ms;
  for (int i = 0; i < 100; ++i) ms.push_back(test::single_atom(2.0 + 0.01 * i));
  const auto a = split_dataset(ms, 3);
  EXPECT_EQ(a.train.size(), 60u);
  EXPECT_EQ(a.val.size(), 20u);
  EXPECT_EQ(a.test.size(), 20u);
  const auto b = split_dataset(ms, 3);
  std::multiset<double> all, expected;
  auto key = [](const Material& m) { return m.lattice()(0, 0); };
  for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(key(a.train[i]), key(b.train[i]));
  for (const auto* part : {&a.train, &a.val, &a.test}) {
    for (const auto& m : *part) all.insert(key(m));
  }
  for (const auto& m : ms) expected.insert(key(m));
  EXPECT_EQ(all, expected);
  EXPECT_NE(key(split_dataset(ms, 4).train[0]) + key(split_dataset(ms, 4).train[1]),
            key(a.train[0]) + key(a.train[1]));
  EXPECT_THROW(split_dataset(std::vector<Material>(4, ms[0]), 1), InvalidArgument);

  const auto r = split_dataset(std::vector<MaterialRecord>(10, MaterialRecord{"a", ms[0], {}}), 1);
  EXPECT_EQ(r.train.size(), 6u);
}

TEST(SynthCorpus, TemplateAndValidity) {
  const auto ms = synth_perovskite_corpus(10, 0.02, 5);
  ASSERT_EQ(ms.size(), 10u);
  for (const auto& m : ms) {
    EXPECT_EQ(m.size(), 5);
    EXPECT_TRUE(structure_validity(m));
    const LatticeParams p = lattice_to_params(m.lattice());
    EXPECT_GE(p.lengths[0], 3.5);
    EXPECT_LE(p.lengths[0], 4.5);
    EXPECT_EQ(composition_validity(m.atom_types()), CompositionVerdict::Valid);
  }
  const auto exact = synth_perovskite_corpus(3, 0.0, 6);
  const Vec3 sites[5] = {Vec3(0, 0, 0), Vec3(0.5, 0.5, 0.5), Vec3(0.5, 0.5, 0), Vec3(0.5, 0, 0.5),
                         Vec3(0, 0.5, 0.5)};
  for (const auto& m : exact) {
    const Coords f = m.fractional();
    for (int i = 0; i < 5; ++i) EXPECT_LT((f.col(i) - sites[i]).norm(), 1e-12);
    EXPECT_EQ(m.atom_types()[2], m.atom_types()[3]);
    EXPECT_EQ(m.atom_types()[3], m.atom_types()[4]);
  }
  const auto again = synth_perovskite_corpus(10, 0.02, 5);
  EXPECT_EQ(again[7].coords(), ms[7].coords());
}

TEST(Cif, CubicCellHeader) {
  const std::string cif = to_cif(test::single_atom(3.0, 26), "fe");
  EXPECT_NE(cif.find("data_fe"), std::string::npos);
  EXPECT_NE(cif.find("_cell_length_a    3\n"), std::string::npos);
  EXPECT_NE(cif.find("_cell_length_c    3\n"), std::string::npos);
  EXPECT_NE(cif.find("_cell_angle_alpha 90\n"), std::string::npos);
  EXPECT_NE(cif.find("_cell_angle_gamma 90\n"), std::string::npos);
  EXPECT_NE(cif.find("Fe1 Fe 0 0 0 1"), std::string::npos);
}

TEST(Cif, ReimportPreservesGramAndDistances) {
  std::mt19937_64 rng(7);
  for (int c = 0; c < 20; ++c) {
    const Material m = verify::random_material(rng, 8, 90);
    const fs::path p = scratch("m.cif");
    export_cif(m, p.string(), "m");
    std::ifstream in(p);
    std::stringstream text;
    text << in.rdbuf();
    const Material r = read_cif(text.str());
    EXPECT_EQ(r.atom_types(), m.atom_types());
    const Mat3 g0 = m.lattice().transpose() * m.lattice();
    const Mat3 g1 = r.lattice().transpose() * r.lattice();
    EXPECT_LT(test::max_abs(g0 - g1), 1e-6);
    const auto d0 = distance_multiset(build_multigraph(m, 4.0));
    const auto d1 = distance_multiset(build_multigraph(r, 4.0));
    ASSERT_EQ(d0.size(), d1.size());
    for (std::size_t i = 0; i < d0.size(); ++i) EXPECT_NEAR(d0[i], d1[i], 1e-6);
  }
}
