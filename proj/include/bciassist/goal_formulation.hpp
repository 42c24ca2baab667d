#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "bciassist/pddl.hpp"
#include "bciassist/planner.hpp"
#include "bciassist/reference.hpp"
#include "bciassist/world_model.hpp"

namespace bciassist {

struct RefinementOption {
  Constraint constraint;
  std::size_t resulting_count = 0;

  bool operator==(const RefinementOption&) const = default;
};

// Every constraint that strictly shrinks the candidate set without emptying
// it, ordered by kind and then lexically. Empty when already unique.
std::vector<RefinementOption> available_refinements(const Reference& ref,
                                                    const WorldState& state);

// Same, starting from an explicit candidate set.
std::vector<RefinementOption> refinements_for(const std::set<std::string>& candidates,
                                              const WorldState& state);

// Appends `c`; rejects anything that is not an available refinement.
Reference refine(const Reference& ref, const Constraint& c, const WorldState& state);

// A goal type offered in the menu, named after the action that achieves it.
// Goal formulas refer to parameters as ?vars and may carry their own
// existential quantifier.
struct GoalSchema {
  std::string name;
  std::vector<pddl::TypedName> params;
  pddl::Goal goal;
};

GoalSchema make_goal_schema(const std::string& name,
                            const std::vector<pddl::TypedName>& params,
                            const std::string& goal_formula, const pddl::Domain& domain);

enum class ParamResolution { open, unique, any_acceptable };

const char* to_string(ParamResolution r);

struct GoalTemplate {
  GoalSchema schema;
  std::vector<Reference> params;  // one per schema parameter
  std::vector<ParamResolution> resolved;

  const std::string& action_name() const { return schema.name; }
};

// Fresh template; each parameter starts as a typename reference.
GoalTemplate make_template(const GoalSchema& schema);

// Existentially quantified conjunctive goal for the planner. Unique
// parameters are substituted; any-acceptable parameters stay existential
// over their current candidates.
pddl::Goal finalize_goal(const GoalTemplate& tpl, const WorldState& state);

// Goal instances of `schema` for a concrete parameter binding.
pddl::Goal bind_goal(const GoalSchema& schema, const std::vector<std::string>& args);

struct FeasibilityBudget {
  std::size_t max_plan_length = 30;
  std::size_t max_expansions = 200'000;
};

struct FeasibleGoal {
  const GoalSchema* schema = nullptr;
  planner::Plan witness_plan;  // shortest plan to some not-yet-true instance
};

// Goal types for which some binding is not yet true and reachable within the
// budget. Multi-step goals are kept.
std::vector<FeasibleGoal> feasible_goal_types(const WorldState& state,
                                              const pddl::Domain& domain,
                                              const std::vector<GoalSchema>& schemas,
                                              const FeasibilityBudget& budget = {});

// Plans for an already finalized goal against the current world.
planner::PlanResult plan_for_goal(const WorldState& state, const pddl::Domain& domain,
                                  const pddl::Goal& goal, const planner::Budget& budget = {});

}  // namespace bciassist
