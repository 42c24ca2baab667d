#pragma once

// Typed STRIPS subset of PDDL: :typing, :strips, :equality. Goals may be a
// conjunction wrapped in a single `exists`. No conditional effects, no
// numeric fluents, no negative preconditions other than (not (= a b)).

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bciassist/world_model.hpp"

namespace bciassist::pddl {

struct TypedName {
  std::string name;
  std::string type;
  bool operator==(const TypedName&) const = default;
};

// Atom whose arguments are variables ("?x") or object/constant names.
struct AtomPattern {
  std::string predicate;
  std::vector<std::string> args;
  bool operator==(const AtomPattern&) const = default;
};

struct Equality {
  std::string lhs;
  std::string rhs;
  bool negated = false;
  bool operator==(const Equality&) const = default;
};

struct Condition {
  std::vector<AtomPattern> atoms;
  std::vector<Equality> equalities;
  bool empty() const { return atoms.empty() && equalities.empty(); }
};

struct PredicateDecl {
  std::string name;
  std::vector<TypedName> params;
};

struct ActionSchema {
  std::string name;
  std::vector<TypedName> params;
  Condition precondition;
  std::vector<AtomPattern> add;
  std::vector<AtomPattern> del;
};

struct Domain {
  std::string name;
  TypeHierarchy types;
  std::map<std::string, std::string> constants;  // name -> type
  std::map<std::string, PredicateDecl> predicates;
  std::vector<ActionSchema> actions;

  const ActionSchema* find_action(const std::string& name) const;
  // Predicates that no action adds or deletes.
  std::set<std::string> static_predicates() const;
};

struct GroundAtom {
  std::string predicate;
  std::vector<std::string> args;

  auto operator<=>(const GroundAtom&) const = default;
  std::string str() const;  // "(at cup1 shelf1)"
};

// Existentially quantified variable. When `candidates` is set the variable
// ranges over that explicit set instead of all objects of `type`.
struct ExistsVar {
  std::string name;
  std::string type;
  std::optional<std::vector<std::string>> candidates;
};

struct Goal {
  std::vector<ExistsVar> exists;
  Condition condition;
};

std::string render(const Goal& goal);

struct Problem {
  std::string name;
  std::string domain_name;
  std::map<std::string, std::string> objects;  // name -> type
  std::set<GroundAtom> init;
  Goal goal;
};

// Objects of the problem plus constants of the domain.
std::map<std::string, std::string> all_objects(const Domain& d, const Problem& p);

Domain parse_domain(const std::string& text);
Problem parse_problem(const std::string& text, const Domain& domain);

// Parses a goal condition such as "(exists (?l - location) (and (at ?x ?l)))"
// in which `free_vars` may occur unbound. Object names are resolved against
// `objects` (problem objects) when given, else only domain constants.
Goal parse_goal_formula(const std::string& text, const Domain& domain,
                        const std::vector<TypedName>& free_vars,
                        const std::map<std::string, std::string>* objects = nullptr);

// Renders a problem back to PDDL text.
std::string to_pddl(const Problem& p);

}  // namespace bciassist::pddl
