#include "bciassist/reference.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

namespace bciassist {

std::string to_string(const AttrValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", std::get<double>(v));
  return buf;
}

AttrValue parse_attr_value(const std::string& text) {
  if (text.empty()) return std::string{};
  char* end = nullptr;
  const double d = std::strtod(text.c_str(), &end);
  if (end == text.c_str() + text.size()) return d;
  return text;
}

std::strong_ordering RelationalRef::operator<=>(const RelationalRef& o) const {
  if (auto c = key <=> o.key; c != 0) return c;
  if (auto c = value.index() <=> o.value.index(); c != 0) return c;
  if (const auto* s = std::get_if<std::string>(&value)) {
    return *s <=> std::get<std::string>(o.value);
  }
  const double a = std::get<double>(value);
  const double b = std::get<double>(o.value);
  if (a < b) return std::strong_ordering::less;
  if (b < a) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

bool constraint_less(const Constraint& a, const Constraint& b) {
  if (a.index() != b.index()) return a.index() < b.index();
  return std::visit(
      [&](const auto& lhs) {
        using T = std::decay_t<decltype(lhs)>;
        return lhs < std::get<T>(b);
      },
      a);
}

std::string label(const Constraint& c) {
  if (const auto* i = std::get_if<IndividualRef>(&c)) return i->name;
  if (const auto* t = std::get_if<TypenameRef>(&c)) return t->type;
  const auto& r = std::get<RelationalRef>(c);
  return r.key + " = " + to_string(r.value);
}

std::string render(const Constraint& c, const std::string& var) {
  if (const auto* i = std::get_if<IndividualRef>(&c)) {
    return "(" + var + " = " + i->name + ")";
  }
  if (const auto* t = std::get_if<TypenameRef>(&c)) {
    return t->type + "(" + var + ")";
  }
  const auto& r = std::get<RelationalRef>(c);
  return r.key + "(" + var + ", " + to_string(r.value) + ")";
}

bool Reference::contains(const Constraint& c) const {
  return std::find(conjuncts.begin(), conjuncts.end(), c) != conjuncts.end();
}

std::string render(const Reference& ref) {
  if (ref.conjuncts.empty()) return "true";
  std::string out;
  for (const auto& c : ref.conjuncts) {
    if (!out.empty()) out += " & ";
    out += render(c, ref.free_var);
  }
  return out;
}

}  // namespace bciassist
