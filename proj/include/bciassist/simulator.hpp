#pragma once

// One assistance session end to end: goal selection through the menu, then
// confirmation and execution of the plan, all driven by decoded commands on
// a simulated clock. The headless runner and the gateway share this class.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bciassist/command_channel.hpp"
#include "bciassist/evaluation.hpp"
#include "bciassist/menu.hpp"
#include "bciassist/mission_control.hpp"
#include "bciassist/scenario.hpp"

namespace bciassist {

enum class SessionPhase { goal_selection, confirmation, executing, finished };

const char* to_string(SessionPhase p);

struct SimConfig {
  ChannelConfig channel;
  OutcomeModel outcomes = OutcomeModel::preset("ideal");
  MissionConfig mission;
  bool motion = false;     // run the geometric layer for every action
  bool randomize = true;   // draw object placements from the scenario's list

  // channel, outcomes and mission from the scenario blocks
  static SimConfig from_scenario(const Scenario& sc);
};

class AssistSession {
 public:
  // `goal_spec` (optional) instructs the scripted user and enables the menu
  // distance bookkeeping used for rating.
  AssistSession(std::shared_ptr<const Scenario> scenario, const SimConfig& config,
                std::optional<std::string> goal_spec, std::uint64_t seed);

  SessionPhase phase() const;
  double now() const { return channel_.now(); }
  const GoalMenu& menu() const { return *menu_; }
  const Session* mission() const { return mission_ ? &*mission_ : nullptr; }
  std::shared_ptr<KnowledgeBase> kb() const { return kb_; }
  const RunLog& log() const { return log_; }
  const ScriptedUser* user() const { return user_ ? &*user_ : nullptr; }
  std::uint64_t seed() const { return seed_; }

  // What the scripted user intends next.
  GuiCommand scripted_intent() const;

  // One channel cycle: the intent passes the channel, the emitted command is
  // applied, and any action whose runtime has elapsed completes first.
  // Throws session_finished once finished.
  DecodedEvent submit(GuiCommand intended);

  // Routes pending knowledge-base events into the mission; in goal selection
  // an unexpected change rebuilds the menu on the new world.
  void sync();

  // Menu view for clients.
  nlohmann::json menu_view() const;
  nlohmann::json status_json() const;

  // Receives {"type": ..., ...} records: decoded, world, session, menu.
  void set_listener(std::function<void(const nlohmann::json&)> fn) { listener_ = std::move(fn); }

 private:
  void rebuild_menu();
  void finish_selection();
  void emit(nlohmann::json j);

  std::shared_ptr<const Scenario> sc_;
  SimConfig config_;
  std::optional<std::string> goal_spec_;
  std::uint64_t seed_;
  std::shared_ptr<KnowledgeBase> kb_;
  Subscription sub_;
  CommandChannel channel_;
  std::shared_ptr<const MenuContext> ctx_;
  std::optional<GoalMenu> menu_;
  std::optional<ScriptedUser> user_;
  std::optional<Session> mission_;
  std::shared_ptr<MotionContext> motion_;
  RunLog log_;
  std::function<void(const nlohmann::json&)> listener_;
  std::string last_status_;
};

struct RunOptions {
  SimConfig config;
  std::string goal_spec;
  std::size_t max_events = 4000;
  // Moves a random placed object to another location once this many seconds
  // of execution have passed (unexpected change).
  std::optional<double> inject_change_after;
};

struct InjectionRecord {
  double time = 0.0;
  std::string object;
  std::size_t event_index = 0;          // channel cycle of the injection
  SessionStatus status_before = SessionStatus::executing;
  SessionStatus status_after = SessionStatus::executing;
  bool plan_valid_after = true;
};

struct SimRun {
  RunLog log;
  std::optional<RunMetrics> metrics;  // unset when goal selection did not finish
  bool selected = false;
  SessionStatus status = SessionStatus::aborted;
  bool goal_reached = false;
  double end_time = 0.0;
  std::size_t interruptions = 0;
  std::map<std::string, ActionStats> stats;
  std::vector<TranscriptEntry> transcript;
  std::optional<PourResult> pour;
  std::optional<InjectionRecord> injection;
};

SimRun simulate_run(std::shared_ptr<const Scenario> scenario, const RunOptions& options,
                    std::uint64_t seed);

// Runs are seeded with derive_seed(seed, i).
std::vector<SimRun> simulate_batch(std::shared_ptr<const Scenario> scenario,
                                   const RunOptions& options, std::size_t runs, std::uint64_t seed);

// Per-run metrics of the runs that finished goal selection.
std::vector<RunMetrics> run_metrics(const std::vector<SimRun>& runs);

}  // namespace bciassist
