#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "xtal/crystal.hpp"

namespace xtal {

/// One dataset line. See docs/formats.md for the grammar.
struct MaterialRecord {
  std::string id;
  Material material;
  std::optional<double> property;
};

std::vector<MaterialRecord> read_records(std::istream& in);
void write_records(std::ostream& out, const std::vector<MaterialRecord>& records);

std::vector<Material> load_dataset(const std::string& path);
std::vector<MaterialRecord> load_records(const std::string& path);
void save_dataset(const std::string& path, const std::vector<Material>& materials);
void save_records(const std::string& path, const std::vector<MaterialRecord>& records);

template <typename T>
struct Split {
  std::vector<T> train, val, test;
};

/// Seeded shuffle followed by a 3:1:1 cut (validation and test each get n / 5).
template <typename T>
Split<T> split_dataset(const std::vector<T>& items, std::uint64_t seed);

/// Cubic ABX3 cells: A at the corner, B at the body centre, X at the face
/// centres, plus Gaussian jitter of `noise_scale` angstrom per coordinate.
std::vector<Material> synth_perovskite_corpus(int count, double noise_scale, std::uint64_t seed);

/// Minimal P1 CIF text for `m`.
std::string to_cif(const Material& m, const std::string& block_name = "xtal");
void export_cif(const Material& m, const std::string& path, const std::string& block_name = "xtal");

}  // namespace xtal
