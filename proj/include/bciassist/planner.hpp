#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bciassist/pddl.hpp"

namespace bciassist::planner {

struct PlanStep {
  std::string action;
  std::vector<std::string> args;

  std::string str() const;  // "(grasp omnirob cup1 shelf1)"
  bool operator==(const PlanStep&) const = default;
};

struct Plan {
  std::vector<PlanStep> steps;
  std::size_t cost() const { return steps.size(); }
};

std::map<std::string, std::size_t> action_counts(const Plan& plan);

struct GroundAction {
  std::string schema;
  std::vector<std::string> args;
  std::vector<int> pre;
  std::vector<int> add;
  std::vector<int> del;

  PlanStep step() const { return {schema, args}; }
  std::string name() const { return step().str(); }
};

struct GroundingOptions {
  // Drops actions with false static preconditions, violated equalities or
  // relaxed-unreachable preconditions. Off yields every type-correct tuple.
  bool prune = true;
};

// Fixed-width bit set over the task's atom table.
using StateBits = std::vector<std::uint64_t>;

struct GroundTask {
  std::vector<pddl::GroundAtom> atoms;
  std::map<pddl::GroundAtom, int> atom_index;
  std::vector<GroundAction> actions;  // sorted by name()
  StateBits init;
  // Disjunction of ground conjunctions; existential goals are compiled into
  // one disjunct per witness binding.
  std::vector<std::vector<int>> goals;

  bool holds(const StateBits& s, int atom) const;
  bool applicable(const StateBits& s, const GroundAction& a) const;
  StateBits apply(const StateBits& s, const GroundAction& a) const;
  bool satisfies_goal(const StateBits& s) const;
};

GroundTask ground(const pddl::Domain& domain, const pddl::Problem& problem,
                  GroundingOptions options = {});

// Every binding of the goal's existential variables, as ground atom lists.
// Bindings that violate goal equalities are skipped.
std::vector<std::vector<pddl::GroundAtom>> goal_witnesses(
    const pddl::Domain& domain, const pddl::Problem& problem);

// Maps witness conjunctions onto the task's atom table. Conjunctions that
// mention an atom outside the table can never hold and are dropped.
std::vector<std::vector<int>> compile_goals(
    const GroundTask& task, const std::vector<std::vector<pddl::GroundAtom>>& witnesses);

struct Budget {
  std::size_t max_expansions = 2'000'000;
  std::optional<std::size_t> max_plan_length;
};

enum class PlanStatus {
  found,
  no_plan,            // reachable space exhausted
  horizon_exceeded,   // no plan within max_plan_length
  budget_exhausted,   // max_expansions hit first
};

const char* to_string(PlanStatus s);

struct PlanResult {
  PlanStatus status = PlanStatus::no_plan;
  Plan plan;
  std::size_t expanded = 0;

  bool found() const { return status == PlanStatus::found; }
};

// Optimal (minimum step count) A* search. Successors are generated in
// lexical order of ground action names, so plans are reproducible.
PlanResult plan(const GroundTask& task, const Budget& budget = {});
PlanResult plan(const pddl::Domain& domain, const pddl::Problem& problem,
                const Budget& budget = {});

struct Verdict {
  bool valid = false;
  // Index of the first step whose precondition fails, or plan size when the
  // final state misses the goal.
  std::optional<std::size_t> failing_step;
  std::string reason;
};

// Simulates the plan directly on the lifted schemas, independent of grounding.
Verdict validate_plan(const pddl::Domain& domain, const pddl::Problem& problem,
                      const Plan& plan);

std::string plan_to_text(const Plan& plan);
std::string plan_to_json(const Plan& plan, const PlanResult* result = nullptr);

}  // namespace bciassist::planner
