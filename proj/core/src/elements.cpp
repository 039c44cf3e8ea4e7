#include "xtal/elements.hpp"

#include <sstream>

#include "xtal/error.hpp"

namespace xtal {

namespace detail {
extern const char* const kElementData;
}

ElementTable ElementTable::parse(std::string_view text) {
  ElementTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    ElementInfo info;
    std::string states;
    if (!(fields >> info.atomic_number >> info.symbol >> info.mass >> states)) {
      throw ParseError("malformed element record", line_no);
    }
    if (info.atomic_number != table.size() + 1) {
      throw ParseError("element records must be consecutive from Z=1", line_no);
    }
    if (states != "-") {
      std::istringstream st(states);
      std::string tok;
      while (std::getline(st, tok, ',')) info.oxidation_states.push_back(std::stoi(tok));
    }
    table.entries_.push_back(std::move(info));
  }
  return table;
}

const ElementTable& ElementTable::builtin() {
  static const ElementTable table = parse(detail::kElementData);
  return table;
}

const ElementInfo* ElementTable::find(int atomic_number) const {
  if (atomic_number < 1 || atomic_number > size()) return nullptr;
  return &entries_[atomic_number - 1];
}

const ElementInfo& ElementTable::at(int atomic_number) const {
  const auto* e = find(atomic_number);
  if (!e) throw InvalidArgument("unknown element Z=" + std::to_string(atomic_number));
  return *e;
}

std::optional<int> ElementTable::atomic_number(std::string_view symbol) const {
  for (const auto& e : entries_) {
    if (e.symbol == symbol) return e.atomic_number;
  }
  return std::nullopt;
}

}  // namespace xtal
