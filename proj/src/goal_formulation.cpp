#include "bciassist/goal_formulation.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "bciassist/common.hpp"
#include "bciassist/world_encoding.hpp"

namespace bciassist {

namespace {

struct ConstraintLess {
  bool operator()(const Constraint& a, const Constraint& b) const {
    return constraint_less(a, b);
  }
};

}  // namespace

std::vector<RefinementOption> refinements_for(const std::set<std::string>& candidates,
                                              const WorldState& state) {
  if (candidates.size() <= 1) return {};
  const Schema& schema = *state.schema;
  std::set<Constraint, ConstraintLess> pool;
  for (const auto& id : candidates) {
    const WorldObject& obj = state.at(id);
    if (schema.individually_referable(obj.type_name)) pool.insert(IndividualRef{id});
    for (const auto& t : schema.types.ancestors(obj.type_name)) pool.insert(TypenameRef{t});
    for (const auto& [k, v] : obj.attributes) pool.insert(RelationalRef{k, v});
    if (obj.placement && !obj.placement->location.empty()) {
      pool.insert(RelationalRef{kLocationKey, obj.placement->location});
    }
  }
  std::vector<RefinementOption> out;
  for (const auto& c : pool) {
    const auto count = static_cast<std::size_t>(
        std::count_if(candidates.begin(), candidates.end(), [&](const std::string& id) {
          return holds(c, state.at(id), schema);
        }));
    if (count >= 1 && count < candidates.size()) out.push_back({c, count});
  }
  return out;
}

std::vector<RefinementOption> available_refinements(const Reference& ref,
                                                    const WorldState& state) {
  const auto candidates = query(ref, state);
  if (candidates.empty()) {
    throw Error(ErrorCode::precondition_failed,
                "reference " + render(ref) + " refers to nothing");
  }
  auto options = refinements_for(candidates, state);
  std::erase_if(options, [&](const RefinementOption& o) { return ref.contains(o.constraint); });
  return options;
}

Reference refine(const Reference& ref, const Constraint& c, const WorldState& state) {
  if (ref.contains(c)) {
    throw Error(ErrorCode::precondition_failed,
                "constraint " + label(c) + " is already part of the reference");
  }
  const auto options = available_refinements(ref, state);
  const bool ok = std::any_of(options.begin(), options.end(),
                              [&](const RefinementOption& o) { return o.constraint == c; });
  if (!ok) {
    throw Error(ErrorCode::precondition_failed,
                "constraint " + label(c) + " does not refine " + render(ref));
  }
  Reference out = ref;
  out.conjuncts.push_back(c);
  return out;
}

GoalSchema make_goal_schema(const std::string& name,
                            const std::vector<pddl::TypedName>& params,
                            const std::string& goal_formula, const pddl::Domain& domain) {
  GoalSchema s{name, params, pddl::parse_goal_formula(goal_formula, domain, params)};
  return s;
}

const char* to_string(ParamResolution r) {
  switch (r) {
    case ParamResolution::open: return "open";
    case ParamResolution::unique: return "unique";
    case ParamResolution::any_acceptable: return "any-acceptable";
  }
  return "?";
}

GoalTemplate make_template(const GoalSchema& schema) {
  GoalTemplate t{schema, {}, {}};
  for (const auto& p : schema.params) {
    Reference r;
    r.free_var = p.name.size() > 1 && p.name[0] == '?' ? p.name.substr(1) : p.name;
    r.conjuncts.push_back(TypenameRef{p.type});
    t.params.push_back(std::move(r));
    t.resolved.push_back(ParamResolution::open);
  }
  return t;
}

namespace {

pddl::Goal substitute_params(const GoalSchema& schema,
                             const std::map<std::string, std::string>& binding) {
  pddl::Goal g = schema.goal;
  const auto sub = [&](std::string& term) {
    if (auto it = binding.find(term); it != binding.end()) term = it->second;
  };
  for (auto& a : g.condition.atoms) {
    for (auto& t : a.args) sub(t);
  }
  for (auto& e : g.condition.equalities) {
    sub(e.lhs);
    sub(e.rhs);
  }
  return g;
}

}  // namespace

pddl::Goal bind_goal(const GoalSchema& schema, const std::vector<std::string>& args) {
  if (args.size() != schema.params.size()) {
    throw Error(ErrorCode::invalid_argument,
                "goal '" + schema.name + "' takes " + std::to_string(schema.params.size()) +
                    " arguments");
  }
  std::map<std::string, std::string> binding;
  for (std::size_t i = 0; i < args.size(); ++i) binding[schema.params[i].name] = args[i];
  return substitute_params(schema, binding);
}

pddl::Goal finalize_goal(const GoalTemplate& tpl, const WorldState& state) {
  if (tpl.params.size() != tpl.schema.params.size() ||
      tpl.resolved.size() != tpl.schema.params.size()) {
    throw Error(ErrorCode::invalid_argument, "template arity does not match its schema");
  }
  std::map<std::string, std::string> binding;
  std::vector<pddl::ExistsVar> open_vars;
  for (std::size_t i = 0; i < tpl.params.size(); ++i) {
    const auto& param = tpl.schema.params[i];
    const auto candidates = query(tpl.params[i], state);
    switch (tpl.resolved[i]) {
      case ParamResolution::open:
        throw Error(ErrorCode::precondition_failed,
                    "parameter " + param.name + " of '" + tpl.schema.name + "' is still open");
      case ParamResolution::unique:
        if (candidates.size() != 1) {
          throw Error(ErrorCode::precondition_failed,
                      "parameter " + param.name + " is marked unique but has " +
                          std::to_string(candidates.size()) + " candidates");
        }
        binding[param.name] = *candidates.begin();
        break;
      case ParamResolution::any_acceptable:
        if (candidates.empty()) {
          throw Error(ErrorCode::precondition_failed,
                      "parameter " + param.name + " has no candidates");
        }
        open_vars.push_back({param.name, param.type,
                             std::vector<std::string>(candidates.begin(), candidates.end())});
        break;
    }
  }
  pddl::Goal g = substitute_params(tpl.schema, binding);
  g.exists.insert(g.exists.begin(), open_vars.begin(), open_vars.end());
  return g;
}

std::vector<FeasibleGoal> feasible_goal_types(const WorldState& state,
                                              const pddl::Domain& domain,
                                              const std::vector<GoalSchema>& schemas,
                                              const FeasibilityBudget& budget) {
  const pddl::Problem base = problem_from_world(domain, state);
  planner::GroundTask task = planner::ground(domain, base);
  std::vector<FeasibleGoal> out;

  for (const auto& schema : schemas) {
    std::vector<std::vector<std::string>> domains;
    for (const auto& p : schema.params) {
      std::vector<std::string> objs;
      for (const auto& [name, type] : base.objects) {
        if (domain.types.is_subtype(type, p.type)) objs.push_back(name);
      }
      domains.push_back(std::move(objs));
    }
    std::vector<std::vector<pddl::GroundAtom>> targets;
    std::vector<std::string> args(schema.params.size());
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == args.size()) {
        pddl::Problem p = base;
        p.goal = bind_goal(schema, args);
        auto witnesses = planner::goal_witnesses(domain, p);
        const bool already = std::any_of(
            witnesses.begin(), witnesses.end(), [&](const std::vector<pddl::GroundAtom>& w) {
              return std::all_of(w.begin(), w.end(), [&](const pddl::GroundAtom& a) {
                return base.init.count(a) != 0;
              });
            });
        if (!already) targets.insert(targets.end(), witnesses.begin(), witnesses.end());
        return;
      }
      for (const auto& o : domains[i]) {
        args[i] = o;
        rec(i + 1);
      }
    };
    rec(0);
    if (targets.empty()) continue;

    task.goals = planner::compile_goals(task, targets);
    const auto result = planner::plan(
        task, planner::Budget{budget.max_expansions, budget.max_plan_length});
    if (result.found()) out.push_back({&schema, result.plan});
  }
  return out;
}

planner::PlanResult plan_for_goal(const WorldState& state, const pddl::Domain& domain,
                                  const pddl::Goal& goal, const planner::Budget& budget) {
  pddl::Problem p = problem_from_world(domain, state);
  p.goal = goal;
  return planner::plan(domain, p, budget);
}

}  // namespace bciassist
