#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xtal {

/// Largest atomic number accepted anywhere in the library.
inline constexpr int kMaxElement = 100;

struct ElementInfo {
  int atomic_number = 0;
  std::string symbol;
  double mass = 0.0;                    // u
  std::vector<int> oxidation_states;    // ascending
};

/// Element symbols, masses and common oxidation states, parsed from the
/// bundled data/elements.txt (see that file for provenance).
class ElementTable {
 public:
  static const ElementTable& builtin();
  static ElementTable parse(std::string_view text);

  const ElementInfo* find(int atomic_number) const;
  const ElementInfo& at(int atomic_number) const;
  std::optional<int> atomic_number(std::string_view symbol) const;
  int size() const { return static_cast<int>(entries_.size()); }

 private:
  std::vector<ElementInfo> entries_;  // index = atomic_number - 1
};

}  // namespace xtal
