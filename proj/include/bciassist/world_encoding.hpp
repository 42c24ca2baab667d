#pragma once

// Translation between knowledge-base objects and planner facts.
//
//   placement.location = l         <->  (at o l)
//   attribute k = v (symbol)       <->  (k o v)     for binary predicate k
//   attribute k = "true"           <->  (k o)       for unary predicate k
//
// Numeric attributes and attributes without a matching predicate are not
// visible to the planner.

#include <string>
#include <vector>

#include "bciassist/pddl.hpp"
#include "bciassist/planner.hpp"
#include "bciassist/world_model.hpp"

namespace bciassist {

inline constexpr const char* kPlacementPredicate = "at";
inline constexpr const char* kTrueSymbol = "true";

// Builds the schema (type hierarchy) the knowledge base validates against.
Schema schema_from_domain(const pddl::Domain& domain);

// Objects and initial facts of the current world; the goal is left empty.
pddl::Problem problem_from_world(const pddl::Domain& domain, const WorldState& state,
                                 const std::string& name = "world");

// Objects that change when `step` is applied to `state`, with the step's
// delete effects applied before its add effects.
std::vector<WorldObject> effects_on_world(const pddl::Domain& domain,
                                          const WorldState& state,
                                          const planner::PlanStep& step);

}  // namespace bciassist
