#include "bciassist/planner.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "bciassist/common.hpp"

namespace bciassist::planner {

using pddl::AtomPattern;
using pddl::GroundAtom;

std::string PlanStep::str() const {
  std::string s = "(" + action;
  for (const auto& a : args) s += " " + a;
  return s + ")";
}

std::map<std::string, std::size_t> action_counts(const Plan& plan) {
  std::map<std::string, std::size_t> out;
  for (const auto& s : plan.steps) ++out[s.action];
  return out;
}

const char* to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::found: return "found";
    case PlanStatus::no_plan: return "no_plan";
    case PlanStatus::horizon_exceeded: return "horizon_exceeded";
    case PlanStatus::budget_exhausted: return "budget_exhausted";
  }
  return "?";
}

bool GroundTask::holds(const StateBits& s, int atom) const {
  return (s[atom >> 6] >> (atom & 63)) & 1U;
}

bool GroundTask::applicable(const StateBits& s, const GroundAction& a) const {
  return std::all_of(a.pre.begin(), a.pre.end(), [&](int p) { return holds(s, p); });
}

StateBits GroundTask::apply(const StateBits& s, const GroundAction& a) const {
  StateBits out = s;
  for (int d : a.del) out[d >> 6] &= ~(std::uint64_t{1} << (d & 63));
  for (int p : a.add) out[p >> 6] |= std::uint64_t{1} << (p & 63);
  return out;
}

bool GroundTask::satisfies_goal(const StateBits& s) const {
  return std::any_of(goals.begin(), goals.end(), [&](const std::vector<int>& g) {
    return std::all_of(g.begin(), g.end(), [&](int a) { return holds(s, a); });
  });
}

namespace {

using Binding = std::map<std::string, std::string>;

std::string resolve(const std::string& term, const Binding& b) {
  if (auto it = b.find(term); it != b.end()) return it->second;
  return term;
}

GroundAtom substitute(const AtomPattern& a, const Binding& b) {
  GroundAtom g{a.predicate, {}};
  for (const auto& t : a.args) g.args.push_back(resolve(t, b));
  return g;
}

bool equalities_hold(const std::vector<pddl::Equality>& eqs, const Binding& b) {
  return std::all_of(eqs.begin(), eqs.end(), [&](const pddl::Equality& e) {
    const bool same = resolve(e.lhs, b) == resolve(e.rhs, b);
    return e.negated ? !same : same;
  });
}

bool all_bound(const AtomPattern& a, const Binding& b) {
  return std::all_of(a.args.begin(), a.args.end(), [&](const std::string& t) {
    return t.empty() || t[0] != '?' || b.count(t);
  });
}

std::vector<std::string> objects_of_type(const pddl::Domain& domain,
                                         const std::map<std::string, std::string>& objects,
                                         const std::string& type) {
  std::vector<std::string> out;
  for (const auto& [name, t] : objects) {
    if (domain.types.is_subtype(t, type)) out.push_back(name);
  }
  return out;
}

struct LiftedAction {
  const pddl::ActionSchema* schema;
  Binding binding;
};

void enumerate_bindings(const pddl::Domain& domain,
                        const std::map<std::string, std::string>& objects,
                        const pddl::ActionSchema& schema, bool prune,
                        const std::set<std::string>& statics,
                        const std::set<GroundAtom>& init,
                        std::vector<LiftedAction>& out) {
  std::vector<std::vector<std::string>> domains;
  for (const auto& p : schema.params) {
    domains.push_back(objects_of_type(domain, objects, p.type));
  }
  Binding b;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (prune) {
      for (const auto& a : schema.precondition.atoms) {
        if (statics.count(a.predicate) && all_bound(a, b) && !init.count(substitute(a, b))) {
          return;
        }
      }
    }
    if (i == schema.params.size()) {
      if (prune && !equalities_hold(schema.precondition.equalities, b)) return;
      out.push_back({&schema, b});
      return;
    }
    for (const auto& obj : domains[i]) {
      b[schema.params[i].name] = obj;
      rec(i + 1);
    }
    b.erase(schema.params[i].name);
  };
  rec(0);
}

}  // namespace

std::vector<std::vector<GroundAtom>> goal_witnesses(const pddl::Domain& domain,
                                                    const pddl::Problem& problem) {
  const auto objects = pddl::all_objects(domain, problem);
  const auto& goal = problem.goal;
  std::vector<std::vector<std::string>> domains;
  for (const auto& v : goal.exists) {
    domains.push_back(v.candidates ? *v.candidates
                                   : objects_of_type(domain, objects, v.type));
  }
  std::vector<std::vector<GroundAtom>> out;
  Binding b;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == goal.exists.size()) {
      if (!equalities_hold(goal.condition.equalities, b)) return;
      std::vector<GroundAtom> atoms;
      for (const auto& a : goal.condition.atoms) atoms.push_back(substitute(a, b));
      std::sort(atoms.begin(), atoms.end());
      atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
      out.push_back(std::move(atoms));
      return;
    }
    for (const auto& obj : domains[i]) {
      b[goal.exists[i].name] = obj;
      rec(i + 1);
    }
    b.erase(goal.exists[i].name);
  };
  rec(0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

GroundTask ground(const pddl::Domain& domain, const pddl::Problem& problem,
                  GroundingOptions options) {
  const auto objects = pddl::all_objects(domain, problem);
  const auto statics = domain.static_predicates();

  std::vector<LiftedAction> lifted;
  for (const auto& schema : domain.actions) {
    enumerate_bindings(domain, objects, schema, options.prune, statics, problem.init,
                       lifted);
  }

  struct Instantiated {
    const pddl::ActionSchema* schema;
    std::vector<std::string> args;
    std::vector<GroundAtom> pre, add, del;
  };
  std::vector<Instantiated> inst;
  inst.reserve(lifted.size());
  for (const auto& la : lifted) {
    Instantiated i{la.schema, {}, {}, {}, {}};
    for (const auto& p : la.schema->params) i.args.push_back(la.binding.at(p.name));
    for (const auto& a : la.schema->precondition.atoms) i.pre.push_back(substitute(a, la.binding));
    for (const auto& a : la.schema->add) i.add.push_back(substitute(a, la.binding));
    for (const auto& a : la.schema->del) i.del.push_back(substitute(a, la.binding));
    inst.push_back(std::move(i));
  }

  std::vector<bool> keep(inst.size(), true);
  if (options.prune) {
    // Relaxed reachability fixpoint.
    std::set<GroundAtom> reached = problem.init;
    std::fill(keep.begin(), keep.end(), false);
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t k = 0; k < inst.size(); ++k) {
        if (keep[k]) continue;
        const bool ok = std::all_of(inst[k].pre.begin(), inst[k].pre.end(),
                                    [&](const GroundAtom& a) { return reached.count(a) != 0; });
        if (!ok) continue;
        keep[k] = true;
        changed = true;
        for (const auto& a : inst[k].add) reached.insert(a);
      }
    }
  }

  std::set<GroundAtom> atom_set = problem.init;
  for (std::size_t k = 0; k < inst.size(); ++k) {
    if (!keep[k]) continue;
    for (const auto* list : {&inst[k].pre, &inst[k].add, &inst[k].del}) {
      atom_set.insert(list->begin(), list->end());
    }
  }

  GroundTask task;
  task.atoms.assign(atom_set.begin(), atom_set.end());
  for (std::size_t i = 0; i < task.atoms.size(); ++i) {
    task.atom_index[task.atoms[i]] = static_cast<int>(i);
  }
  const auto idx = [&](const GroundAtom& a) { return task.atom_index.at(a); };
  for (std::size_t k = 0; k < inst.size(); ++k) {
    if (!keep[k]) continue;
    GroundAction ga{inst[k].schema->name, inst[k].args, {}, {}, {}};
    for (const auto& a : inst[k].pre) ga.pre.push_back(idx(a));
    for (const auto& a : inst[k].add) ga.add.push_back(idx(a));
    for (const auto& a : inst[k].del) ga.del.push_back(idx(a));
    for (auto* v : {&ga.pre, &ga.add, &ga.del}) {
      std::sort(v->begin(), v->end());
      v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    task.actions.push_back(std::move(ga));
  }
  std::sort(task.actions.begin(), task.actions.end(),
            [](const GroundAction& a, const GroundAction& b) { return a.name() < b.name(); });

  task.init.assign((task.atoms.size() + 63) / 64, 0);
  for (const auto& a : problem.init) {
    const int i = idx(a);
    task.init[i >> 6] |= std::uint64_t{1} << (i & 63);
  }

  task.goals = compile_goals(task, goal_witnesses(domain, problem));
  return task;
}

std::vector<std::vector<int>> compile_goals(
    const GroundTask& task, const std::vector<std::vector<GroundAtom>>& witnesses) {
  std::set<std::vector<int>> goal_set;
  for (const auto& witness : witnesses) {
    std::vector<int> conj;
    bool possible = true;
    for (const auto& a : witness) {
      auto it = task.atom_index.find(a);
      if (it == task.atom_index.end()) {
        possible = false;
        break;
      }
      conj.push_back(it->second);
    }
    if (!possible) continue;
    std::sort(conj.begin(), conj.end());
    goal_set.insert(std::move(conj));
  }
  return {goal_set.begin(), goal_set.end()};
}

namespace {

struct BitsHash {
  std::size_t operator()(const StateBits& s) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto w : s) {
      h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

PlanResult plan(const GroundTask& task, const Budget& budget) {
  PlanResult result;
  if (task.goals.empty()) {
    result.status = PlanStatus::no_plan;
    return result;
  }

  // Admissible goal count: one action achieves at most `per_action` goal atoms.
  std::set<int> goal_atoms;
  for (const auto& g : task.goals) goal_atoms.insert(g.begin(), g.end());
  std::size_t per_action = 1;
  for (const auto& a : task.actions) {
    const auto n = static_cast<std::size_t>(std::count_if(
        a.add.begin(), a.add.end(), [&](int p) { return goal_atoms.count(p) != 0; }));
    per_action = std::max(per_action, n);
  }
  const auto heuristic = [&](const StateBits& s) {
    std::size_t best = SIZE_MAX;
    for (const auto& g : task.goals) {
      const auto unsat = static_cast<std::size_t>(
          std::count_if(g.begin(), g.end(), [&](int a) { return !task.holds(s, a); }));
      best = std::min(best, (unsat + per_action - 1) / per_action);
    }
    return best;
  };

  struct Node {
    StateBits state;
    int parent;
    int action;
    std::uint32_t g;
  };
  std::vector<Node> nodes;
  std::unordered_map<StateBits, std::uint32_t, BitsHash> best_g;
  using Entry = std::tuple<std::size_t, std::size_t, std::size_t, int>;  // f, h, seq, node
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  std::size_t seq = 0;
  nodes.push_back({task.init, -1, -1, 0});
  best_g[task.init] = 0;
  const auto h0 = heuristic(task.init);
  open.emplace(h0, h0, seq++, 0);
  bool horizon_pruned = false;

  while (!open.empty()) {
    const auto [f, h, s, idx] = open.top();
    open.pop();
    const Node node = nodes[idx];
    if (best_g.at(node.state) < node.g) continue;
    if (task.satisfies_goal(node.state)) {
      std::vector<PlanStep> steps;
      for (int n = idx; nodes[n].parent >= 0; n = nodes[n].parent) {
        steps.push_back(task.actions[nodes[n].action].step());
      }
      std::reverse(steps.begin(), steps.end());
      result.status = PlanStatus::found;
      result.plan.steps = std::move(steps);
      return result;
    }
    if (result.expanded >= budget.max_expansions) {
      result.status = PlanStatus::budget_exhausted;
      return result;
    }
    ++result.expanded;
    const std::uint32_t g2 = node.g + 1;
    if (budget.max_plan_length && g2 > *budget.max_plan_length) {
      horizon_pruned = true;
      continue;
    }
    for (std::size_t a = 0; a < task.actions.size(); ++a) {
      if (!task.applicable(node.state, task.actions[a])) continue;
      StateBits next = task.apply(node.state, task.actions[a]);
      auto [it, inserted] = best_g.try_emplace(next, g2);
      if (!inserted) {
        if (it->second <= g2) continue;
        it->second = g2;
      }
      const auto h2 = heuristic(next);
      nodes.push_back({std::move(next), idx, static_cast<int>(a), g2});
      open.emplace(g2 + h2, h2, seq++, static_cast<int>(nodes.size() - 1));
    }
  }
  result.status = horizon_pruned ? PlanStatus::horizon_exceeded : PlanStatus::no_plan;
  return result;
}

PlanResult plan(const pddl::Domain& domain, const pddl::Problem& problem,
                const Budget& budget) {
  return plan(ground(domain, problem), budget);
}

Verdict validate_plan(const pddl::Domain& domain, const pddl::Problem& problem,
                      const Plan& plan) {
  const auto objects = pddl::all_objects(domain, problem);
  std::set<GroundAtom> state = problem.init;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& step = plan.steps[i];
    const auto* schema = domain.find_action(step.action);
    const auto invalid = [&](const std::string& why) {
      return Verdict{false, i, "step " + std::to_string(i) + " " + step.str() + ": " + why};
    };
    if (!schema) return invalid("unknown action");
    if (schema->params.size() != step.args.size()) return invalid("wrong arity");
    Binding b;
    for (std::size_t k = 0; k < step.args.size(); ++k) {
      auto it = objects.find(step.args[k]);
      if (it == objects.end()) return invalid("unknown object '" + step.args[k] + "'");
      if (!domain.types.is_subtype(it->second, schema->params[k].type)) {
        return invalid("'" + step.args[k] + "' is not a " + schema->params[k].type);
      }
      b[schema->params[k].name] = step.args[k];
    }
    if (!equalities_hold(schema->precondition.equalities, b)) {
      return invalid("equality constraint violated");
    }
    for (const auto& a : schema->precondition.atoms) {
      const auto g = substitute(a, b);
      if (!state.count(g)) return invalid("precondition " + g.str() + " is false");
    }
    for (const auto& a : schema->del) state.erase(substitute(a, b));
    for (const auto& a : schema->add) state.insert(substitute(a, b));
  }
  for (const auto& witness : goal_witnesses(domain, problem)) {
    if (std::all_of(witness.begin(), witness.end(),
                    [&](const GroundAtom& a) { return state.count(a) != 0; })) {
      return Verdict{true, std::nullopt, "valid"};
    }
  }
  return Verdict{false, plan.steps.size(), "goal not satisfied after last step"};
}

std::string plan_to_text(const Plan& plan) {
  std::string out;
  for (const auto& s : plan.steps) out += s.str() + "\n";
  return out;
}

std::string plan_to_json(const Plan& plan, const PlanResult* result) {
  nlohmann::json j;
  if (result) {
    j["status"] = to_string(result->status);
    j["expanded"] = result->expanded;
  }
  j["cost"] = plan.cost();
  j["steps"] = nlohmann::json::array();
  for (const auto& s : plan.steps) {
    j["steps"].push_back({{"action", s.action}, {"args", s.args}});
  }
  return j.dump(2);
}

}  // namespace bciassist::planner
