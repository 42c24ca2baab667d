#include "bciassist/world_encoding.hpp"

#include <map>

#include "bciassist/common.hpp"

namespace bciassist {

Schema schema_from_domain(const pddl::Domain& domain) {
  Schema s;
  s.types = domain.types;
  for (const auto& [name, decl] : domain.predicates) {
    if (name != kPlacementPredicate && !decl.params.empty() && decl.params.size() <= 2) {
      s.attribute_keys.insert(name);
    }
  }
  return s;
}

pddl::Problem problem_from_world(const pddl::Domain& domain, const WorldState& state,
                                 const std::string& name) {
  pddl::Problem p;
  p.name = name;
  p.domain_name = domain.name;
  for (const auto& [id, obj] : state.objects) {
    if (domain.constants.count(id)) continue;
    if (!domain.types.contains(obj.type_name)) {
      throw Error(ErrorCode::unknown_type,
                  "object '" + id + "' has type '" + obj.type_name + "' unknown to the domain");
    }
    p.objects[id] = obj.type_name;
  }
  const auto objects = pddl::all_objects(domain, p);
  const auto check_arg = [&](const std::string& pred, const std::string& value) {
    if (!objects.count(value)) {
      throw Error(ErrorCode::unknown_symbol,
                  "value '" + value + "' of '" + pred + "' is not an object or constant");
    }
  };

  const auto placement_pred = domain.predicates.find(kPlacementPredicate);
  // Constants may be stored as world objects too (e.g. substances carrying
  // drinkable=true); only their attribute facts are emitted.
  for (const auto& [id, obj] : state.objects) {
    if (!p.objects.count(id) && !domain.constants.count(id)) continue;
    if (placement_pred != domain.predicates.end() && obj.placement &&
        !obj.placement->location.empty()) {
      const auto& decl = placement_pred->second;
      if (decl.params.size() == 2 &&
          domain.types.is_subtype(obj.type_name, decl.params[0].type)) {
        check_arg(kPlacementPredicate, obj.placement->location);
        p.init.insert({kPlacementPredicate, {id, obj.placement->location}});
      }
    }
    for (const auto& [key, value] : obj.attributes) {
      auto it = domain.predicates.find(key);
      if (it == domain.predicates.end() || key == kPlacementPredicate) continue;
      const auto* sym = std::get_if<std::string>(&value);
      if (!sym) continue;
      const auto& decl = it->second;
      if (decl.params.size() == 1) {
        if (*sym == kTrueSymbol) p.init.insert({key, {id}});
      } else if (decl.params.size() == 2) {
        check_arg(key, *sym);
        p.init.insert({key, {id, *sym}});
      }
    }
  }
  return p;
}

std::vector<WorldObject> effects_on_world(const pddl::Domain& domain,
                                          const WorldState& state,
                                          const planner::PlanStep& step) {
  const auto* schema = domain.find_action(step.action);
  if (!schema) {
    throw Error(ErrorCode::unknown_symbol, "unknown action '" + step.action + "'");
  }
  if (schema->params.size() != step.args.size()) {
    throw Error(ErrorCode::invalid_argument, "wrong arity for " + step.str());
  }
  std::map<std::string, std::string> binding;
  for (std::size_t i = 0; i < step.args.size(); ++i) {
    binding[schema->params[i].name] = step.args[i];
  }
  const auto ground = [&](const pddl::AtomPattern& a) {
    std::vector<std::string> args;
    for (const auto& t : a.args) {
      auto it = binding.find(t);
      args.push_back(it == binding.end() ? t : it->second);
    }
    return args;
  };

  std::map<std::string, WorldObject> changed;
  const auto object = [&](const std::string& id) -> WorldObject& {
    auto it = changed.find(id);
    if (it == changed.end()) it = changed.emplace(id, state.at(id)).first;
    return it->second;
  };

  for (const auto& a : schema->del) {
    const auto args = ground(a);
    if (!state.find(args[0])) continue;  // constants carry no state
    WorldObject& obj = object(args[0]);
    if (a.predicate == kPlacementPredicate) {
      if (obj.placement && obj.placement->location == args[1]) obj.placement.reset();
    } else if (args.size() == 2) {
      if (const auto* v = obj.attribute(a.predicate); v && *v == AttrValue{args[1]}) {
        obj.attributes.erase(a.predicate);
      }
    } else {
      obj.attributes.erase(a.predicate);
    }
  }
  for (const auto& a : schema->add) {
    const auto args = ground(a);
    if (!state.find(args[0])) continue;
    WorldObject& obj = object(args[0]);
    if (a.predicate == kPlacementPredicate) {
      Placement placement{args[1], {}};
      if (const auto* loc = state.find(args[1]); loc && loc->placement) {
        placement.pose = loc->placement->pose;
      }
      obj.placement = placement;
    } else if (args.size() == 2) {
      obj.attributes[a.predicate] = args[1];
    } else {
      obj.attributes[a.predicate] = std::string(kTrueSymbol);
    }
  }

  std::vector<WorldObject> out;
  for (auto& [id, obj] : changed) {
    if (!(obj == state.at(id))) out.push_back(std::move(obj));
  }
  return out;
}

}  // namespace bciassist
