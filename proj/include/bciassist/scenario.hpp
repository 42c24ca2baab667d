#pragma once

// Scenario files: JSON describing the domain file, the initial objects, the
// goal types offered in the menu, and per-module configuration blocks.
//
//   {
//     "name": "fetch_and_carry",
//     "domain": "../domain/service_robot.pddl",      (relative to the file)
//     "anonymous_types": ["cup", "bottle"],
//     "objects": [
//       {"id": "shelf1", "type": "shelf", "pose": [1.0, 3.0, 1.57]},
//       {"id": "cup1", "type": "cup", "location": "shelf1",
//        "attributes": {"content": "water"}}
//     ],
//     "goal_types": [
//       {"name": "put", "params": [["?x", "graspable"], ["?y", "location"]],
//        "goal": "(at ?x ?y)"}
//     ],
//     "goals": ["put cup(content=water) table"],
//     "randomize": {"objects": ["cup1"], "locations": ["shelf1", "shelf2"]},
//     "workspace": {...}, "channel": {...}, "liquid": {...}, "mission": {...}
//   }
//
// Attribute values may be strings, numbers or `true` (stored as "true").
// An object with a location but no pose inherits the location's pose.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "bciassist/common.hpp"
#include "bciassist/goal_formulation.hpp"
#include "bciassist/pddl.hpp"
#include "bciassist/world_model.hpp"

namespace bciassist {

struct Scenario {
  std::string name;
  std::string domain_text;
  pddl::Domain domain;
  std::shared_ptr<const Schema> schema;
  std::vector<WorldObject> objects;
  std::vector<GoalSchema> goal_types;
  std::vector<std::string> goals;  // goal specs for headless runs

  std::vector<std::string> random_objects;
  std::vector<std::string> random_locations;

  // Module configuration, parsed by the respective modules.
  nlohmann::json workspace;
  nlohmann::json channel;
  nlohmann::json liquid;
  nlohmann::json mission;
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir);

// Knowledge base populated with the scenario objects (one revision each).
std::shared_ptr<KnowledgeBase> make_knowledge_base(const Scenario& scenario);

// Moves each randomized object to a uniformly drawn location, keeping the
// object's other attributes. Returns the relocated objects.
std::vector<WorldObject> randomize_placements(const Scenario& scenario,
                                              std::vector<WorldObject>& objects, Rng& rng);

// Data directory: $BCIASSIST_DATA_DIR if set, else the source tree's data/.
std::filesystem::path data_dir();

// Resolves a scenario argument: an existing path, or a name under
// data/scenarios (with or without ".json").
std::filesystem::path resolve_scenario_path(const std::string& arg);

nlohmann::json to_json(const WorldObject& obj);
nlohmann::json to_json(const WorldState& state);

}  // namespace bciassist
