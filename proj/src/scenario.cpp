#include "bciassist/scenario.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bciassist/world_encoding.hpp"

namespace bciassist {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

AttrValue attr_from_json(const std::string& key, const json& v) {
  if (v.is_boolean()) {
    if (!v.get<bool>()) {
      throw Error(ErrorCode::invalid_argument, "attribute '" + key + "': omit false flags");
    }
    return std::string("true");
  }
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  throw Error(ErrorCode::invalid_argument, "attribute '" + key + "' must be flat");
}

Pose2D pose_from_json(const json& j) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3) {
    throw Error(ErrorCode::invalid_argument, "pose must be [x, y] or [x, y, theta]");
  }
  return Pose2D(j[0].get<double>(), j[1].get<double>(), j.size() == 3 ? j[2].get<double>() : 0.0);
}

}  // namespace

Scenario parse_scenario(const json& j, const fs::path& base_dir) {
  Scenario s;
  try {
    s.name = j.value("name", "scenario");
    const fs::path domain_path = base_dir / j.at("domain").get<std::string>();
    s.domain_text = read_file(domain_path);
    s.domain = pddl::parse_domain(s.domain_text);

    Schema schema = schema_from_domain(s.domain);
    for (const auto& t : j.value("anonymous_types", json::array())) {
      const auto name = t.get<std::string>();
      if (!schema.types.contains(name)) {
        throw Error(ErrorCode::unknown_type, "anonymous type '" + name + "' is not declared");
      }
      schema.anonymous_types.insert(name);
    }
    s.schema = std::make_shared<const Schema>(std::move(schema));

    std::map<std::string, Pose2D> poses;
    for (const auto& o : j.at("objects")) {
      WorldObject obj;
      obj.id = o.at("id").get<std::string>();
      obj.type_name = o.at("type").get<std::string>();
      if (!s.schema->types.contains(obj.type_name)) {
        throw Error(ErrorCode::unknown_type,
                    "object '" + obj.id + "' has unknown type '" + obj.type_name + "'");
      }
      const json attrs = o.value("attributes", json::object());
      for (const auto& [k, v] : attrs.items()) {
        obj.attributes[k] = attr_from_json(k, v);
      }
      if (o.contains("location") || o.contains("pose")) {
        Placement p;
        p.location = o.value("location", "");
        if (o.contains("pose")) {
          p.pose = pose_from_json(o.at("pose"));
        } else if (auto it = poses.find(p.location); it != poses.end()) {
          p.pose = it->second;
        } else {
          throw Error(ErrorCode::invalid_argument,
                      "object '" + obj.id + "' needs a pose or a previously posed location");
        }
        poses[obj.id] = p.pose;
        obj.placement = p;
      }
      s.objects.push_back(std::move(obj));
    }

    for (const auto& g : j.value("goal_types", json::array())) {
      std::vector<pddl::TypedName> params;
      for (const auto& p : g.at("params")) {
        params.push_back({p.at(0).get<std::string>(), p.at(1).get<std::string>()});
      }
      s.goal_types.push_back(make_goal_schema(g.at("name").get<std::string>(), params,
                                              g.at("goal").get<std::string>(), s.domain));
    }
    s.goals = j.value("goals", std::vector<std::string>{});
    if (j.contains("randomize")) {
      s.random_objects = j["randomize"].value("objects", std::vector<std::string>{});
      s.random_locations = j["randomize"].value("locations", std::vector<std::string>{});
    }
    s.workspace = j.value("workspace", json::object());
    s.channel = j.value("channel", json::object());
    s.liquid = j.value("liquid", json::object());
    s.mission = j.value("mission", json::object());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("scenario: ") + e.what());
  }
  return s;
}

Scenario load_scenario(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
  return parse_scenario(j, path.parent_path());
}

std::shared_ptr<KnowledgeBase> make_knowledge_base(const Scenario& scenario) {
  auto kb = std::make_shared<KnowledgeBase>(scenario.schema);
  for (const auto& obj : scenario.objects) kb->upsert_object(obj);
  return kb;
}

std::vector<WorldObject> randomize_placements(const Scenario& scenario,
                                              std::vector<WorldObject>& objects, Rng& rng) {
  std::vector<WorldObject> moved;
  if (scenario.random_locations.empty()) return moved;
  std::map<std::string, Pose2D> poses;
  for (const auto& o : objects) {
    if (o.placement) poses[o.id] = o.placement->pose;
  }
  std::uniform_int_distribution<std::size_t> pick(0, scenario.random_locations.size() - 1);
  for (const auto& id : scenario.random_objects) {
    auto it = std::find_if(objects.begin(), objects.end(),
                           [&](const WorldObject& o) { return o.id == id; });
    if (it == objects.end()) {
      throw Error(ErrorCode::not_found, "randomized object '" + id + "' does not exist");
    }
    const std::string& loc = scenario.random_locations[pick(rng)];
    it->placement = Placement{loc, poses.count(loc) ? poses[loc] : Pose2D{}};
    moved.push_back(*it);
  }
  return moved;
}

fs::path data_dir() {
  if (const char* env = std::getenv("BCIASSIST_DATA_DIR"); env && *env) return env;
#ifdef BCIASSIST_DATA_DIR
  return BCIASSIST_DATA_DIR;
#else
  return "data";
#endif
}

fs::path resolve_scenario_path(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  fs::path p = data_dir() / "scenarios" / arg;
  if (fs::exists(p)) return p;
  p += ".json";
  if (fs::exists(p)) return p;
  throw Error(ErrorCode::io_error, "scenario '" + arg + "' not found");
}

json to_json(const WorldObject& obj) {
  json j;
  j["id"] = obj.id;
  j["type"] = obj.type_name;
  json attrs = json::object();
  for (const auto& [k, v] : obj.attributes) {
    if (const auto* d = std::get_if<double>(&v)) {
      attrs[k] = *d;
    } else {
      attrs[k] = std::get<std::string>(v);
    }
  }
  j["attributes"] = attrs;
  if (obj.placement) {
    if (!obj.placement->location.empty()) j["location"] = obj.placement->location;
    j["pose"] = {obj.placement->pose.x, obj.placement->pose.y, obj.placement->pose.theta};
  }
  return j;
}

json to_json(const WorldState& state) {
  json objects = json::array();
  for (const auto& [id, obj] : state.objects) objects.push_back(to_json(obj));
  return {{"revision", state.revision}, {"objects", objects}};
}

}  // namespace bciassist
