#include "bciassist/simulator.hpp"

#include <algorithm>
#include <random>

#include "bciassist/goal_formulation.hpp"

namespace bciassist {

using nlohmann::json;

const char* to_string(SessionPhase p) {
  switch (p) {
    case SessionPhase::goal_selection: return "goal_selection";
    case SessionPhase::confirmation: return "confirmation";
    case SessionPhase::executing: return "executing";
    case SessionPhase::finished: return "finished";
  }
  return "?";
}

SimConfig SimConfig::from_scenario(const Scenario& sc) {
  SimConfig c;
  if (sc.channel.is_object()) c.channel = ChannelConfig::from_json(sc.channel);
  if (sc.mission.is_object()) {
    c.mission = MissionConfig::from_json(sc.mission);
    if (sc.mission.contains("outcomes")) c.outcomes = OutcomeModel::from_json(sc.mission["outcomes"]);
  }
  return c;
}

namespace {

std::shared_ptr<KnowledgeBase> fresh_world(const Scenario& sc, bool randomize, Rng& rng) {
  std::vector<WorldObject> objects = sc.objects;
  if (randomize) randomize_placements(sc, objects, rng);
  auto kb = std::make_shared<KnowledgeBase>(sc.schema);
  for (const auto& o : objects) kb->upsert_object(o);
  return kb;
}

}  // namespace

AssistSession::AssistSession(std::shared_ptr<const Scenario> scenario, const SimConfig& config,
                             std::optional<std::string> goal_spec, std::uint64_t seed)
    : sc_(std::move(scenario)),
      config_(config),
      goal_spec_(std::move(goal_spec)),
      seed_(seed),
      channel_(config.channel, derive_seed(seed, 1)) {
  Rng rng(derive_seed(seed, 0));
  kb_ = fresh_world(*sc_, config_.randomize, rng);
  sub_ = kb_->subscribe();
  if (config_.motion) {
    motion_ = std::make_shared<MotionContext>(
        MotionContext::from_scenario(sc_->workspace, sc_->liquid, sc_->mission));
  }
  log_.seed = seed;
  log_.goal = goal_spec_.value_or("");
  rebuild_menu();
  if (user_) {
    const auto d = user_->oracle().distance(*menu_);
    log_.minimal_steps = d.value_or(0);
  }
  last_status_ = to_string(phase());
}

void AssistSession::rebuild_menu() {
  const auto world = kb_->snapshot();
  std::vector<GoalSchema> offered;
  for (const auto& fg : feasible_goal_types(*world, sc_->domain, sc_->goal_types)) {
    offered.push_back(*fg.schema);
  }
  ctx_ = std::make_shared<const MenuContext>(world, std::move(offered));
  menu_.emplace(ctx_);
  user_.reset();
  if (goal_spec_) user_.emplace(ctx_, parse_goal_spec(*goal_spec_, *ctx_));
}

SessionPhase AssistSession::phase() const {
  if (!mission_) return SessionPhase::goal_selection;
  if (mission_->finished()) return SessionPhase::finished;
  return mission_->status() == SessionStatus::executing ? SessionPhase::executing
                                                          : SessionPhase::confirmation;
}

GuiCommand AssistSession::scripted_intent() const {
  if (!mission_) {
    if (!user_) throw Error(ErrorCode::precondition_failed, "session has no instructed goal");
    return user_->next(*menu_);
  }
  return ScriptedUser::during_execution(mission_->status() != SessionStatus::executing);
}

void AssistSession::emit(json j) {
  if (listener_) listener_(j);
}

void AssistSession::finish_selection() {
  mission_.emplace(kb_, sc_->domain, menu_->goal(), config_.outcomes, config_.mission,
                   derive_seed(seed_, 2));
  if (motion_) mission_->set_motion(motion_);
  mission_->start(now());
}

DecodedEvent AssistSession::submit(GuiCommand intended) {
  if (phase() == SessionPhase::finished) {
    throw Error(ErrorCode::session_finished, std::string("session is ") + to_string(mission_->status()));
  }
  LoggedEvent le;
  if (!mission_) {
    le.phase = Phase::goal_selection;
    if (user_) le.distance_before = user_->oracle().distance(*menu_);
    le.decoded = channel_.decode(intended);
    menu_->apply(le.decoded.emitted);
    if (user_) le.distance_after = user_->oracle().distance(*menu_);
    log_.events.push_back(le);
    emit({{"type", "decoded"}, {"event", to_json(le.decoded)}, {"phase", to_string(le.phase)}});
    emit({{"type", "menu"}, {"menu", menu_view()}});
    if (menu_->confirmed()) finish_selection();
  } else {
    // the user formed the intent on what the screen showed before the cycle
    le.phase = mission_->status() == SessionStatus::executing ? Phase::execution : Phase::confirmation;
    le.decoded = channel_.decode(intended);
    if (mission_->status() == SessionStatus::executing) {
      const double end = mission_->launch_time() + mission_->pending_runtime();
      if (le.decoded.timestamp >= end) {
        mission_->complete_action(end);
        sync();
      }
    }
    if (!mission_->finished()) mission_->step(le.decoded.emitted, le.decoded.timestamp);
    log_.events.push_back(le);
    emit({{"type", "decoded"}, {"event", to_json(le.decoded)}, {"phase", to_string(le.phase)}});
  }
  sync();
  const std::string status = mission_ ? to_string(mission_->status()) : to_string(phase());
  if (status != last_status_) {
    last_status_ = status;
    emit({{"type", "session"}, {"status", status_json()}});
  }
  return le.decoded;
}

void AssistSession::sync() {
  bool unexpected = false;
  for (const auto& e : sub_.drain()) {
    emit({{"type", "world"},
          {"revision", e.revision},
          {"kind", to_string(e.kind)},
          {"object", e.object_id},
          {"expected", e.expected}});
    if (mission_) {
      mission_->on_world_change(e, now());
    } else {
      unexpected = unexpected || !e.expected;
    }
  }
  if (unexpected) {
    rebuild_menu();
    emit({{"type", "menu"}, {"menu", menu_view()}});
  }
}

json AssistSession::menu_view() const {
  json j;
  const auto p = phase();
  j["phase"] = to_string(p);
  j["revision"] = kb_->revision();
  json items = json::array();
  if (p == SessionPhase::goal_selection) {
    for (const auto& it : menu_->items()) items.push_back(it.label);
    j["cursor"] = menu_->cursor();
    j["breadcrumb"] = menu_->breadcrumb();
  } else {
    if (const auto* step = mission_->current_step(); step && p != SessionPhase::finished) {
      items.push_back(step->str());
    }
    j["cursor"] = 0;
    j["breadcrumb"] = json::array({menu_->goal_label()});
    j["status"] = to_string(mission_->status());
  }
  j["items"] = items;
  return j;
}

json AssistSession::status_json() const {
  json j;
  j["phase"] = to_string(phase());
  j["time"] = now();
  j["seed"] = seed_;
  j["events"] = log_.events.size();
  if (goal_spec_) j["goal_spec"] = *goal_spec_;
  if (mission_) {
    j["status"] = to_string(mission_->status());
    j["goal"] = menu_->goal_label();
    j["cursor"] = mission_->cursor();
    json plan = json::array();
    for (const auto& s : mission_->plan().steps) plan.push_back(s.str());
    j["plan"] = plan;
    j["plan_valid"] = mission_->plan_valid();
    j["interruptions"] = mission_->interruptions();
    j["goal_reached"] = mission_->status() == SessionStatus::done && mission_->goal_satisfied();
    j["actions"] = to_json(mission_->stats());
  }
  return j;
}

// ---- headless runs --------------------------------------------------------------

namespace {

// Moves a random object that sits on a location to a different location.
std::optional<std::string> move_random_object(KnowledgeBase& kb, Rng& rng) {
  const auto world = kb.snapshot();
  std::vector<const WorldObject*> placed;
  std::vector<const WorldObject*> locations;
  for (const auto& [id, o] : world->objects) {
    if (o.placement && !o.placement->location.empty()) placed.push_back(&o);
    if (world->schema && world->schema->types.is_subtype(o.type_name, "location")) locations.push_back(&o);
  }
  if (placed.empty() || locations.size() < 2) return std::nullopt;
  WorldObject o = *placed[std::uniform_int_distribution<std::size_t>(0, placed.size() - 1)(rng)];
  const WorldObject* to = nullptr;
  do {
    to = locations[std::uniform_int_distribution<std::size_t>(0, locations.size() - 1)(rng)];
  } while (to->id == o.placement->location);
  o.placement = Placement{to->id, to->placement ? to->placement->pose : Pose2D{}};
  kb.upsert_object(o);
  return o.id;
}

}  // namespace

SimRun simulate_run(std::shared_ptr<const Scenario> scenario, const RunOptions& opt, std::uint64_t seed) {
  AssistSession s(std::move(scenario), opt.config, opt.goal_spec, seed);
  SimRun r;
  Rng inject_rng(derive_seed(seed, 3));
  std::optional<double> exec_start;
  std::size_t n = 0;
  while (s.phase() != SessionPhase::finished && n < opt.max_events) {
    if (opt.inject_change_after && !r.injection && s.mission()) {
      if (!exec_start) exec_start = s.now();
      const auto* m = s.mission();
      if (m->status() == SessionStatus::executing && s.now() - *exec_start >= *opt.inject_change_after) {
        InjectionRecord rec;
        rec.time = s.now();
        rec.event_index = n;
        rec.status_before = m->status();
        if (auto id = move_random_object(*s.kb(), inject_rng)) {
          rec.object = *id;
          s.sync();
          rec.status_after = s.mission()->status();
          rec.plan_valid_after = s.mission()->plan_valid();
          r.injection = rec;
        }
      }
    }
    s.submit(s.scripted_intent());
    ++n;
  }
  r.log = s.log();
  r.selected = s.mission() != nullptr;
  r.end_time = s.now();
  if (r.selected) {
    rate_run(r.log);
    r.metrics = metrics(r.log);
    const auto& m = *s.mission();
    r.status = m.status();
    r.goal_reached = m.status() == SessionStatus::done && m.goal_satisfied();
    r.interruptions = m.interruptions();
    r.stats = m.stats();
    r.transcript = m.transcript();
    r.pour = m.last_pour();
  }
  return r;
}

std::vector<SimRun> simulate_batch(std::shared_ptr<const Scenario> scenario, const RunOptions& options,
                                   std::size_t runs, std::uint64_t seed) {
  std::vector<SimRun> out;
  out.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) out.push_back(simulate_run(scenario, options, derive_seed(seed, i)));
  return out;
}

std::vector<RunMetrics> run_metrics(const std::vector<SimRun>& runs) {
  std::vector<RunMetrics> out;
  for (const auto& r : runs) {
    if (r.metrics) out.push_back(*r.metrics);
  }
  return out;
}

}  // namespace bciassist
