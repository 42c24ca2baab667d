#pragma once

#include <compare>
#include <string>
#include <variant>
#include <vector>

namespace bciassist {

// Attribute values are flat: a symbol or a number.
using AttrValue = std::variant<std::string, double>;

std::string to_string(const AttrValue& v);

// Parses "3.5" as a number and anything else as a symbol.
AttrValue parse_attr_value(const std::string& text);

// The three kinds of shared references, in menu order.
struct IndividualRef {
  std::string name;
  auto operator<=>(const IndividualRef&) const = default;
};

struct TypenameRef {
  std::string type;
  auto operator<=>(const TypenameRef&) const = default;
};

struct RelationalRef {
  std::string key;
  AttrValue value;
  bool operator==(const RelationalRef&) const = default;
  std::strong_ordering operator<=>(const RelationalRef& o) const;
};

// One conjunct of a referring expression; each mentions the free variable.
using Constraint = std::variant<IndividualRef, TypenameRef, RelationalRef>;

// Orders by kind (individual, typename, relational), then lexically.
bool constraint_less(const Constraint& a, const Constraint& b);

// Human-readable menu label: "cup1", "cup", "content = water".
std::string label(const Constraint& c);

// Logical rendering with the free variable: "cup(x)", "content(x, water)".
std::string render(const Constraint& c, const std::string& var);

// Reserved relational key that refers to an object's placement location.
inline constexpr const char* kLocationKey = "location";

// Conjunctive referring expression with exactly one free variable.
struct Reference {
  std::string free_var = "x";
  std::vector<Constraint> conjuncts;

  bool contains(const Constraint& c) const;
  bool operator==(const Reference&) const = default;
};

std::string render(const Reference& ref);

}  // namespace bciassist
