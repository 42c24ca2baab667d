#include "doctest.h"

#include <deque>
#include <functional>
#include <random>

#include "bciassist/planner.hpp"
#include "bciassist/world_encoding.hpp"
#include "test_support.hpp"

using namespace bciassist;
using namespace bciassist::planner;
using test_support::data;
using test_support::domain_text;
using test_support::read_file;

namespace {

pddl::Domain service_domain() { return pddl::parse_domain(domain_text()); }

std::vector<std::string> names(const Plan& p) {
  std::vector<std::string> out;
  for (const auto& s : p.steps) out.push_back(s.action);
  return out;
}

// Lifted breadth-first search over explicit atom sets. Independent of the
// grounder: enumerates type-correct tuples and checks schemas directly.
std::optional<std::size_t> bfs_length(const pddl::Domain& d, const pddl::Problem& p) {
  const auto objects = pddl::all_objects(d, p);
  using State = std::set<pddl::GroundAtom>;
  const auto goal_holds = [&](const State& s) {
    const auto& g = p.goal;
    std::map<std::string, std::string> b;
    std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
      if (i == g.exists.size()) {
        const auto sub = [&](const std::string& t) {
          auto it = b.find(t);
          return it == b.end() ? t : it->second;
        };
        for (const auto& e : g.condition.equalities) {
          if ((sub(e.lhs) == sub(e.rhs)) == e.negated) return false;
        }
        for (const auto& a : g.condition.atoms) {
          pddl::GroundAtom ga{a.predicate, {}};
          for (const auto& t : a.args) ga.args.push_back(sub(t));
          if (!s.count(ga)) return false;
        }
        return true;
      }
      for (const auto& [o, t] : objects) {
        if (!d.types.is_subtype(t, g.exists[i].type)) continue;
        b[g.exists[i].name] = o;
        if (rec(i + 1)) return true;
      }
      return false;
    };
    return rec(0);
  };

  std::map<State, std::size_t> dist;
  std::deque<State> queue;
  dist[p.init] = 0;
  queue.push_back(p.init);
  while (!queue.empty()) {
    State s = queue.front();
    queue.pop_front();
    if (goal_holds(s)) return dist[s];
    for (const auto& a : d.actions) {
      std::vector<std::string> args(a.params.size());
      std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == args.size()) {
          std::map<std::string, std::string> b;
          for (std::size_t k = 0; k < args.size(); ++k) b[a.params[k].name] = args[k];
          const auto g = [&](const pddl::AtomPattern& ap) {
            pddl::GroundAtom ga{ap.predicate, {}};
            for (const auto& t : ap.args) ga.args.push_back(b.count(t) ? b[t] : t);
            return ga;
          };
          for (const auto& e : a.precondition.equalities) {
            const auto l = b.count(e.lhs) ? b[e.lhs] : e.lhs;
            const auto r = b.count(e.rhs) ? b[e.rhs] : e.rhs;
            if ((l == r) == e.negated) return;
          }
          for (const auto& ap : a.precondition.atoms) {
            if (!s.count(g(ap))) return;
          }
          State next = s;
          for (const auto& ap : a.del) next.erase(g(ap));
          for (const auto& ap : a.add) next.insert(g(ap));
          if (!dist.count(next)) {
            dist[next] = dist[s] + 1;
            queue.push_back(next);
          }
          return;
        }
        for (const auto& [o, t] : objects) {
          if (!d.types.is_subtype(t, a.params[i].type)) continue;
          args[i] = o;
          rec(i + 1);
        }
      };
      rec(0);
    }
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("reference domain parses with five action schemas") {
  const auto d = service_domain();
  CHECK(d.name == "service-robot");
  REQUIRE(d.actions.size() == 5);
  std::set<std::string> got;
  for (const auto& a : d.actions) got.insert(a.name);
  CHECK(got == std::set<std::string>{"approach", "drink", "drop", "grasp", "pour"});
  CHECK(d.types.is_subtype("cup", "graspable"));
  CHECK(d.static_predicates() ==
        std::set<std::string>{"drinkable", "pour-station", "user-seat"});
}

TEST_CASE("parse errors carry position and name the culprit") {
  const std::string bad = R"((define (domain d)
  (:requirements :strips)
  (:predicates (p ?x))
  (:action a :parameters (?x)
    :precondition (q ?x)
    :effect (p ?x))))";
  try {
    pddl::parse_domain(bad);
    FAIL("expected error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("'q'") != std::string::npos);
    CHECK(msg.find("5:") != std::string::npos);
  }
  CHECK_THROWS_AS(pddl::parse_domain("(define (domain d)"), Error);
  const auto d = service_domain();
  CHECK_THROWS_AS(pddl::parse_problem(R"((define (problem p) (:domain service-robot)
    (:objects r - robot) (:init (holding r)) (:goal (and))))",
                                      d),
                  Error);
}

TEST_CASE("empty goal and already-satisfied goal give empty plans") {
  const auto d = service_domain();
  auto p = pddl::parse_problem(read_file(data("problems/fetch_and_carry.pddl")), d);
  p.goal = {};
  auto r = plan(d, p);
  REQUIRE(r.found());
  CHECK(r.plan.steps.empty());
  p.goal = pddl::parse_goal_formula("(at cup1 shelf1)", d, {}, &p.objects);
  r = plan(d, p);
  REQUIRE(r.found());
  CHECK(r.plan.steps.empty());
  CHECK(validate_plan(d, p, r.plan).valid);
}

TEST_CASE("fetch-and-carry plan is approach, grasp, approach, drop") {
  const auto d = service_domain();
  const auto p = pddl::parse_problem(read_file(data("problems/fetch_and_carry.pddl")), d);
  const auto r = plan(d, p);
  REQUIRE(r.found());
  CHECK(plan_to_text(r.plan) ==
        "(approach omnirob shelf1)\n(grasp omnirob cup1 shelf1)\n"
        "(approach omnirob table)\n(drop omnirob cup1 table)\n");
  CHECK(validate_plan(d, p, r.plan).valid);

  auto swapped = r.plan;
  std::swap(swapped.steps[0], swapped.steps[1]);
  const auto v = validate_plan(d, p, swapped);
  CHECK_FALSE(v.valid);
  REQUIRE(v.failing_step);
  CHECK(*v.failing_step == 0);
}

TEST_CASE("drinking plan has the scheduled action counts") {
  const auto d = service_domain();
  const auto p = pddl::parse_problem(read_file(data("problems/drinking.pddl")), d);
  const auto r = plan(d, p);
  REQUIRE(r.found());
  CHECK(r.plan.cost() == 16);
  const auto counts = action_counts(r.plan);
  CHECK(counts.at("approach") == 8);
  CHECK(counts.at("grasp") == 3);
  CHECK(counts.at("drop") == 3);
  CHECK(counts.at("pour") == 1);
  CHECK(counts.at("drink") == 1);
  CHECK(validate_plan(d, p, r.plan).valid);
  CHECK(bfs_length(d, p) == std::optional<std::size_t>(16));
}

TEST_CASE("scenario world encodes to the shipped problem files") {
  for (const std::string name : {"fetch_and_carry", "drinking"}) {
    const auto sc = load_scenario(data("scenarios/" + name + ".json"));
    auto kb = make_knowledge_base(sc);
    const auto from_world = problem_from_world(sc.domain, *kb->snapshot());
    const auto from_file =
        pddl::parse_problem(read_file(data("problems/" + name + ".pddl")), sc.domain);
    CHECK(from_world.objects == from_file.objects);
    CHECK(from_world.init == from_file.init);
  }
}

TEST_CASE("grounding without pruning equals brute-force instantiation") {
  const auto d = service_domain();
  const auto p = pddl::parse_problem(read_file(data("problems/fetch_and_carry.pddl")), d);
  const auto task = ground(d, p, GroundingOptions{false});
  const auto objects = pddl::all_objects(d, p);
  std::set<std::string> expected;
  for (const auto& a : d.actions) {
    std::vector<std::string> args(a.params.size());
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == args.size()) {
        expected.insert(PlanStep{a.name, args}.str());
        return;
      }
      for (const auto& [o, t] : objects) {
        if (d.types.is_subtype(t, a.params[i].type)) {
          args[i] = o;
          rec(i + 1);
        }
      }
    };
    rec(0);
  }
  std::set<std::string> got;
  for (const auto& ga : task.actions) got.insert(ga.name());
  CHECK(got == expected);
  CHECK(got.size() == task.actions.size());

  // pruning only removes actions that can never fire
  const auto pruned = ground(d, p);
  CHECK(pruned.actions.size() < task.actions.size());
  CHECK(plan(pruned).plan.steps == plan(task).plan.steps);
}

TEST_CASE("plan length matches BFS on random small instances") {
  const auto d = service_domain();
  const auto base = pddl::parse_problem(read_file(data("problems/drinking.pddl")), d);
  std::mt19937_64 rng(5);
  const std::vector<std::string> locs = {"shelf1", "shelf2", "table", "seat"};
  const std::vector<std::string> graspables = {"cup1", "bottle1"};
  for (int trial = 0; trial < 25; ++trial) {
    auto p = base;
    std::erase_if(p.init, [](const pddl::GroundAtom& a) { return a.predicate == "at"; });
    for (const auto& g : graspables) p.init.insert({"at", {g, locs[rng() % 4]}});
    if (trial % 3 == 0) {
      p.goal = pddl::parse_goal_formula(
          "(and (at cup1 " + locs[rng() % 4] + ") (at bottle1 " + locs[rng() % 4] + "))", d, {},
          &p.objects);
    } else if (trial % 3 == 1) {
      p.goal = pddl::parse_goal_formula(
          "(exists (?l - location) (and (at cup1 ?l) (at bottle1 ?l)))", d, {}, &p.objects);
    } else {
      p.goal = pddl::parse_goal_formula("(content cup1 water)", d, {}, &p.objects);
    }
    const auto r = plan(d, p);
    const auto oracle = bfs_length(d, p);
    REQUIRE(r.found() == oracle.has_value());
    if (oracle) {
      CHECK(r.plan.cost() == *oracle);
      CHECK(validate_plan(d, p, r.plan).valid);
    }
  }
}

TEST_CASE("verdicts: no plan, horizon and budget are distinct") {
  const auto d = service_domain();
  auto p = pddl::parse_problem(read_file(data("problems/drinking.pddl")), d);
  // no pour station: the cup can never hold water
  p.init.erase({"pour-station", {"table"}});
  p.goal = pddl::parse_goal_formula("(content cup1 water)", d, {}, &p.objects);
  CHECK(plan(d, p).status == PlanStatus::no_plan);

  p = pddl::parse_problem(read_file(data("problems/drinking.pddl")), d);
  CHECK(plan(d, p, Budget{2'000'000, 10}).status == PlanStatus::horizon_exceeded);
  CHECK(plan(d, p, Budget{5, std::nullopt}).status == PlanStatus::budget_exhausted);
}

TEST_CASE("equality and negated equality in preconditions") {
  const std::string dom = R"((define (domain swap)
    (:requirements :strips :typing :equality)
    (:types token)
    (:predicates (on ?a - token) (linked ?a - token ?b - token))
    (:action move :parameters (?a - token ?b - token)
      :precondition (and (on ?a) (linked ?a ?b) (not (= ?a ?b)))
      :effect (and (not (on ?a)) (on ?b)))))";
  const auto d = pddl::parse_domain(dom);
  const auto p = pddl::parse_problem(R"((define (problem s) (:domain swap)
    (:objects a b c - token)
    (:init (on a) (linked a a) (linked a b) (linked b c))
    (:goal (on c))))",
                                     d);
  const auto r = plan(d, p);
  REQUIRE(r.found());
  CHECK(plan_to_text(r.plan) == "(move a b)\n(move b c)\n");
  CHECK(names(r.plan).size() == 2);
}

TEST_CASE("plan JSON output") {
  Plan p{{{"approach", {"omnirob", "shelf1"}}}};
  const auto j = nlohmann::json::parse(plan_to_json(p));
  CHECK(j["steps"][0]["action"] == "approach");
  CHECK(j["cost"] == 1);
}
