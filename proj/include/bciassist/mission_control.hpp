#pragma once

// Discrete-event plan execution: every action needs a user confirmation,
// outcomes are sampled from per-action models, a failed action may be
// repeated once on command, and unexpected world changes interrupt.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bciassist/common.hpp"
#include "bciassist/gui_command.hpp"
#include "bciassist/motion_planner.hpp"
#include "bciassist/pddl.hpp"
#include "bciassist/perception_sim.hpp"
#include "bciassist/planner.hpp"
#include "bciassist/world_model.hpp"

namespace bciassist {

struct ActionOutcome {
  double success = 1.0;
  double runtime_mean = 30.0;  // s
  double runtime_std = 0.0;
};

class OutcomeModel {
 public:
  OutcomeModel() = default;

  // "fetch_and_carry" or "drinking": success rates and runtimes of the
  // respective experiment tables. "ideal" never fails.
  static OutcomeModel preset(const std::string& name);
  // A preset name, or {"preset": name, "actions": {"grasp": {...}}}.
  static OutcomeModel from_json(const nlohmann::json& j);

  void set(const std::string& action, ActionOutcome o);
  // Throws not_found for actions without a model.
  const ActionOutcome& at(const std::string& action) const;
  const std::map<std::string, ActionOutcome>& actions() const { return actions_; }

  // Normal runtime truncated below at 10% of the mean.
  double sample_runtime(const std::string& action, Rng& rng) const;
  bool sample_success(const std::string& action, Rng& rng) const;

 private:
  std::map<std::string, ActionOutcome> actions_;
};

enum class SessionStatus { awaiting_confirmation, executing, interrupted, recovering, done, aborted };

const char* to_string(SessionStatus s);

struct ActionStats {
  std::size_t scheduled = 0;
  std::size_t executed = 0;   // launches, including repeats
  std::size_t succeeded = 0;
  std::size_t relaunched = 0;  // repeats after a failure or an interruption
  std::size_t never_launched = 0;  // scheduled, then dropped by an abort
  std::size_t interrupted = 0;     // launches cut short by the user or a world change
  std::vector<double> runtimes;
};

struct TranscriptEntry {
  double time = 0.0;
  std::string event;
  std::string detail;
};

// Optional geometric layer: when present, actions also run the motion and
// perception routines, and a routine failure fails the action.
struct MotionContext {
  Workspace workspace;
  RrtConfig rrt;
  PourConfig pour;
  double mouth_noise = 0.01;
  double mouth_tolerance = 0.03;
  double mouth_height = 1.2;
  std::size_t grasp_samples = 32;
  std::size_t roadmap_nodes = 150;

  static MotionContext from_scenario(const nlohmann::json& workspace, const nlohmann::json& liquid,
                                     const nlohmann::json& mission);
};

struct MissionConfig {
  std::size_t retries = 1;  // user-commanded repeats per failed action
  planner::Budget budget;

  static MissionConfig from_json(const nlohmann::json& j);
};

class Session {
 public:
  Session(std::shared_ptr<KnowledgeBase> kb, const pddl::Domain& domain, pddl::Goal goal,
          OutcomeModel outcomes, MissionConfig config, std::uint64_t seed);

  // Plans against the current world. Ends `done` for an already satisfied
  // goal and `aborted` when no plan exists.
  void start(double now = 0.0);

  SessionStatus status() const { return status_; }
  bool finished() const { return status_ == SessionStatus::done || status_ == SessionStatus::aborted; }
  const planner::Plan& plan() const { return plan_; }
  std::size_t cursor() const { return cursor_; }
  bool plan_valid() const { return plan_valid_; }
  const planner::PlanStep* current_step() const;
  // Runtime of the running action, sampled at launch.
  double pending_runtime() const { return pending_runtime_; }
  double launch_time() const { return launch_time_; }

  // User command. awaiting_confirmation: select launches, go_back declines
  // (interrupted). executing: go_back interrupts. recovering: select repeats
  // the failed action, go_back aborts. interrupted: select returns to the
  // confirmation of the current step (replanning first if needed), go_back
  // aborts. Everything else is a logged no-op. Throws session_finished.
  void step(GuiCommand command, double now);

  // Ends the running action: samples the outcome, runs the motion layer,
  // applies the effects as expected changes on success.
  void complete_action(double now);

  // Expected events are ignored; anything else invalidates the plan and
  // interrupts unless the session has finished.
  void on_world_change(const ChangeEvent& event, double now);

  // Plans again from the current world after an invalidation.
  void replan(double now);

  const std::map<std::string, ActionStats>& stats() const { return stats_; }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  std::size_t interruptions() const { return interruptions_; }
  bool goal_satisfied() const;

  void set_motion(std::shared_ptr<MotionContext> motion) { motion_ = std::move(motion); }
  const std::optional<PourResult>& last_pour() const { return last_pour_; }

 private:
  void log(double now, std::string event, std::string detail = {});
  void adopt(planner::Plan plan, double now);
  void unschedule_remaining();
  void launch(double now);
  bool run_motion(const planner::PlanStep& step, std::string& detail);
  void require_active() const;

  std::shared_ptr<KnowledgeBase> kb_;
  const pddl::Domain* domain_;
  pddl::Goal goal_;
  OutcomeModel outcomes_;
  MissionConfig config_;
  Rng rng_;

  SessionStatus status_ = SessionStatus::awaiting_confirmation;
  planner::Plan plan_;
  std::size_t cursor_ = 0;
  bool plan_valid_ = false;
  bool launched_ = false;       // current step has been launched at least once
  std::size_t failures_ = 0;    // failed attempts of the current step
  double pending_runtime_ = 0.0;
  double launch_time_ = 0.0;
  std::size_t interruptions_ = 0;

  std::map<std::string, ActionStats> stats_;
  std::vector<TranscriptEntry> transcript_;
  std::shared_ptr<MotionContext> motion_;
  std::optional<PourResult> last_pour_;
};

// Table-style aggregate: action, executed (scheduled), success %, runtime
// mean and std, interrupted launches. Success counts over all launches.
std::map<std::string, ActionStats> merge_stats(const std::vector<std::map<std::string, ActionStats>>& runs);
std::string format_action_table(const std::map<std::string, ActionStats>& stats);
nlohmann::json to_json(const std::map<std::string, ActionStats>& stats);

// Closed-form probability that a plan completes when each action may be
// repeated `retries` times after failing.
double analytic_task_success(const planner::Plan& plan, const OutcomeModel& outcomes,
                             std::size_t retries);

}  // namespace bciassist
