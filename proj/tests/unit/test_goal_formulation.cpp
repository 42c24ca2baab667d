#include "doctest.h"

#include <functional>
#include <random>

#include "bciassist/goal_formulation.hpp"
#include "bciassist/world_encoding.hpp"
#include "test_support.hpp"

using namespace bciassist;
using test_support::data;

namespace {

struct Fixture {
  Scenario sc = load_scenario(data("scenarios/fetch_and_carry.json"));
  std::shared_ptr<KnowledgeBase> kb = make_knowledge_base(sc);
  std::shared_ptr<const WorldState> s = kb->snapshot();

  const GoalSchema& goal(const std::string& name) const {
    for (const auto& g : sc.goal_types) {
      if (g.name == name) return g;
    }
    throw std::runtime_error("no goal " + name);
  }
};

Reference typed(const std::string& t) { return Reference{"x", {TypenameRef{t}}}; }

}  // namespace

TEST_CASE("content refinements split the cups") {
  Fixture f;
  const auto opts = available_refinements(typed("cup"), *f.s);
  const RefinementOption water{RelationalRef{"content", std::string("water")}, 1};
  const RefinementOption juice{RelationalRef{"content", std::string("apple-juice")}, 1};
  CHECK(std::find(opts.begin(), opts.end(), water) != opts.end());
  CHECK(std::find(opts.begin(), opts.end(), juice) != opts.end());

  const auto refined = refine(typed("cup"), water.constraint, *f.s);
  CHECK(query(refined, *f.s) == std::set<std::string>{"cup1"});
  CHECK(available_refinements(refined, *f.s).empty());
  CHECK_THROWS_AS(refine(refined, water.constraint, *f.s), Error);
  CHECK_THROWS_AS(refine(typed("cup"), RelationalRef{"content", std::string("oil")}, *f.s),
                  Error);
}

TEST_CASE("individual references pin a named object") {
  Fixture f;
  const auto opts = available_refinements(typed("location"), *f.s);
  CHECK(opts.front().constraint == Constraint{IndividualRef{"seat"}});
  const auto r = refine(typed("location"), IndividualRef{"shelf1"}, *f.s);
  CHECK(query(r, *f.s) == std::set<std::string>{"shelf1"});
  // cups are anonymous in this scenario
  for (const auto& o : available_refinements(typed("cup"), *f.s)) {
    CHECK_FALSE(std::holds_alternative<IndividualRef>(o.constraint));
  }
}

TEST_CASE("single candidate has no refinements") {
  Fixture f;
  CHECK(available_refinements(typed("bottle"), *f.s).empty());
}

TEST_CASE("option lists are sorted, strictly shrinking and never empty the set") {
  Fixture f;
  std::mt19937_64 rng(3);
  const std::vector<std::string> locs = {"shelf1", "shelf2", "table", "seat"};
  const std::vector<std::string> contents = {"water", "apple-juice", "empty"};
  for (int trial = 0; trial < 100; ++trial) {
    WorldState st = *f.s;
    const int extra = static_cast<int>(rng() % 8);
    for (int i = 0; i < extra; ++i) {
      WorldObject o{"c" + std::to_string(i), rng() % 2 ? "cup" : "bottle", {}, std::nullopt};
      o.attributes["content"] = contents[rng() % 3];
      o.placement = Placement{locs[rng() % 4], {}};
      st.objects[o.id] = o;
    }
    for (const std::string t : {"graspable", "cup", "location", "object"}) {
      Reference ref = typed(t);
      for (int depth = 0; depth < 6; ++depth) {
        const auto before = query(ref, st);
        const auto opts = available_refinements(ref, st);
        CHECK(opts == available_refinements(ref, st));  // deterministic
        for (std::size_t i = 1; i < opts.size(); ++i) {
          CHECK(constraint_less(opts[i - 1].constraint, opts[i].constraint));
        }
        for (const auto& o : opts) {
          CHECK(o.resulting_count >= 1);
          CHECK(o.resulting_count < before.size());
          Reference r2 = ref;
          r2.conjuncts.push_back(o.constraint);
          CHECK(query(r2, st).size() == o.resulting_count);
        }
        if (opts.empty()) {
          // unique, or the remaining anonymous candidates are indistinguishable
          for (const auto& id : before) {
            const auto& a = st.at(id);
            const auto& b = st.at(*before.begin());
            CHECK(a.type_name == b.type_name);
            CHECK(a.attributes == b.attributes);
            CHECK(a.placement.has_value() == b.placement.has_value());
            if (a.placement && b.placement) CHECK(a.placement->location == b.placement->location);
            if (before.size() > 1) CHECK_FALSE(f.s->schema->individually_referable(a.type_name));
          }
          break;
        }
        ref = refine(ref, opts[rng() % opts.size()].constraint, st);
        CHECK(query(ref, st).size() < before.size());
      }
    }
  }
}

TEST_CASE("finalize_goal keeps any-acceptable parameters existential") {
  Fixture f;
  GoalTemplate t = make_template(f.goal("put"));
  CHECK(t.params.size() == 2);
  CHECK_THROWS_AS(finalize_goal(t, *f.s), Error);  // still open

  t.params[0] = refine(t.params[0], RelationalRef{"content", std::string("water")}, *f.s);
  t.params[0] = refine(t.params[0], TypenameRef{"cup"}, *f.s);
  t.resolved[0] = ParamResolution::unique;
  t.params[1] = refine(t.params[1], TypenameRef{"shelf"}, *f.s);
  t.resolved[1] = ParamResolution::any_acceptable;
  const auto g = finalize_goal(t, *f.s);
  REQUIRE(g.exists.size() == 1);
  CHECK(g.exists[0].name == "?y");
  CHECK(*g.exists[0].candidates == std::vector<std::string>{"shelf1", "shelf2"});
  REQUIRE(g.condition.atoms.size() == 1);
  CHECK(g.condition.atoms[0].args == std::vector<std::string>{"cup1", "?y"});

  // cup1 is already on shelf1, so the existential goal holds immediately
  const auto r = plan_for_goal(*f.s, f.sc.domain, g);
  REQUIRE(r.found());
  CHECK(r.plan.steps.empty());

  t.params[1] = refine(make_template(f.goal("put")).params[1], IndividualRef{"table"}, *f.s);
  t.resolved[1] = ParamResolution::unique;
  const auto ground = finalize_goal(t, *f.s);
  CHECK(ground.exists.empty());
  CHECK(pddl::render(ground).find("(at cup1 table)") != std::string::npos);
}

TEST_CASE("feasible goal types") {
  Fixture f;
  const auto feasible = feasible_goal_types(*f.s, f.sc.domain, f.sc.goal_types);
  std::map<std::string, const FeasibleGoal*> by_name;
  for (const auto& fg : feasible) by_name[fg.schema->name] = &fg;
  REQUIRE(by_name.count("put"));
  CHECK(by_name["put"]->witness_plan.cost() == 4);
  REQUIRE(by_name.count("drink"));
  CHECK(by_name["drink"]->witness_plan.cost() > 1);
  // no cup is empty, but drinking from cup2 empties it first
  REQUIRE(by_name.count("pour"));
  CHECK(planner::action_counts(by_name["pour"]->witness_plan).count("drink"));

  // every witness plan validates against some binding of the goal
  for (const auto& fg : feasible) {
    pddl::Problem p = problem_from_world(f.sc.domain, *f.s);
    bool any = false;
    std::vector<std::string> args;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == fg.schema->params.size()) {
        p.goal = bind_goal(*fg.schema, args);
        any = any || planner::validate_plan(f.sc.domain, p, fg.witness_plan).valid;
        return;
      }
      for (const auto& [o, t] : pddl::all_objects(f.sc.domain, p)) {
        if (!f.sc.domain.types.is_subtype(t, fg.schema->params[i].type)) continue;
        args.push_back(o);
        rec(i + 1);
        args.pop_back();
      }
    };
    rec(0);
    CHECK(any);
  }
}

TEST_CASE("pour is offered only while a bottle exists") {
  const auto sc = load_scenario(data("scenarios/drinking.json"));
  const auto s = make_knowledge_base(sc)->snapshot();
  const auto names = [&](const WorldState& st) {
    std::set<std::string> out;
    for (const auto& fg : feasible_goal_types(st, sc.domain, sc.goal_types)) {
      out.insert(fg.schema->name);
    }
    return out;
  };
  CHECK(names(*s).count("pour"));
  WorldState no_bottle = *s;
  no_bottle.objects.erase("bottle1");
  CHECK_FALSE(names(no_bottle).count("pour"));
}

TEST_CASE("drink goal in the drinking scenario needs the full 16-step plan") {
  const auto sc = load_scenario(data("scenarios/drinking.json"));
  const auto kb = make_knowledge_base(sc);
  const auto feasible = feasible_goal_types(*kb->snapshot(), sc.domain, sc.goal_types);
  bool found = false;
  for (const auto& fg : feasible) {
    if (fg.schema->name == "drink") {
      found = true;
      CHECK(fg.witness_plan.cost() == 16);
    }
  }
  CHECK(found);
}
