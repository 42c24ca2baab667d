#include "bciassist/mission_control.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "bciassist/goal_formulation.hpp"
#include "bciassist/world_encoding.hpp"

namespace bciassist {

using nlohmann::json;

// ---- outcome model -------------------------------------------------------------

OutcomeModel OutcomeModel::preset(const std::string& name) {
  OutcomeModel m;
  // drinking experiment numbers; also the fallback for actions the fetch
  // experiment never ran
  m.set("grasp", {0.91, 40.42, 10.31});
  m.set("drop", {0.97, 37.59, 4.83});
  m.set("approach", {1.00, 20.91, 7.68});
  m.set("pour", {1.00, 62.90, 7.19});
  m.set("drink", {0.77, 57.10, 8.20});
  if (name == "drinking") return m;
  if (name == "fetch_and_carry") {
    m.set("grasp", {0.90, 37.56, 4.62});
    m.set("drop", {0.89, 34.13, 5.75});
    m.set("approach", {1.00, 33.05, 18.48});
    return m;
  }
  if (name == "ideal") {
    for (auto& [a, o] : m.actions_) o.success = 1.0;
    return m;
  }
  throw Error(ErrorCode::not_found, "unknown outcome preset '" + name + "'");
}

OutcomeModel OutcomeModel::from_json(const json& j) {
  if (j.is_string()) return preset(j.get<std::string>());
  if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "outcome model must be a name or object");
  OutcomeModel m = preset(j.value("preset", "ideal"));
  if (j.contains("actions")) {
    for (const auto& [a, o] : j["actions"].items()) {
      m.set(a, {o.at("success").get<double>(), o.at("runtime_mean").get<double>(),
                o.value("runtime_std", 0.0)});
    }
  }
  return m;
}

void OutcomeModel::set(const std::string& action, ActionOutcome o) {
  if (!(o.success >= 0.0 && o.success <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "success probability must be in [0, 1]");
  }
  if (!(o.runtime_mean > 0.0) || o.runtime_std < 0.0) {
    throw Error(ErrorCode::invalid_argument, "runtimes must be positive");
  }
  actions_[action] = o;
}

const ActionOutcome& OutcomeModel::at(const std::string& action) const {
  auto it = actions_.find(action);
  if (it == actions_.end()) throw Error(ErrorCode::not_found, "no outcome model for '" + action + "'");
  return it->second;
}

double OutcomeModel::sample_runtime(const std::string& action, Rng& rng) const {
  const auto& o = at(action);
  if (o.runtime_std == 0.0) return o.runtime_mean;
  std::normal_distribution<double> d(o.runtime_mean, o.runtime_std);
  return std::max(0.1 * o.runtime_mean, d(rng));
}

bool OutcomeModel::sample_success(const std::string& action, Rng& rng) const {
  const double p = at(action).success;
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::awaiting_confirmation: return "awaiting_confirmation";
    case SessionStatus::executing: return "executing";
    case SessionStatus::interrupted: return "interrupted";
    case SessionStatus::recovering: return "recovering";
    case SessionStatus::done: return "done";
    case SessionStatus::aborted: return "aborted";
  }
  return "?";
}

MotionContext MotionContext::from_scenario(const json& workspace, const json& liquid,
                                           const json& mission) {
  MotionContext m;
  m.workspace = Workspace::from_json(workspace);
  if (liquid.is_object() && !liquid.empty()) m.pour = PourConfig::from_json(liquid);
  if (mission.is_object()) {
    m.mouth_noise = mission.value("mouth_noise", m.mouth_noise);
    m.mouth_tolerance = mission.value("mouth_tolerance", m.mouth_tolerance);
  }
  return m;
}

MissionConfig MissionConfig::from_json(const json& j) {
  MissionConfig c;
  if (j.is_object()) c.retries = j.value("retries", c.retries);
  return c;
}

// ---- session -------------------------------------------------------------------

Session::Session(std::shared_ptr<KnowledgeBase> kb, const pddl::Domain& domain, pddl::Goal goal,
                 OutcomeModel outcomes, MissionConfig config, std::uint64_t seed)
    : kb_(std::move(kb)),
      domain_(&domain),
      goal_(std::move(goal)),
      outcomes_(std::move(outcomes)),
      config_(config),
      rng_(seed) {}

void Session::log(double now, std::string event, std::string detail) {
  transcript_.push_back({now, std::move(event), std::move(detail)});
}

const planner::PlanStep* Session::current_step() const {
  return cursor_ < plan_.steps.size() ? &plan_.steps[cursor_] : nullptr;
}

void Session::require_active() const {
  if (finished()) {
    throw Error(ErrorCode::session_finished,
                std::string("session is ") + to_string(status_));
  }
}

void Session::adopt(planner::Plan plan, double now) {
  plan_ = std::move(plan);
  cursor_ = 0;
  launched_ = false;
  failures_ = 0;
  plan_valid_ = true;
  for (const auto& s : plan_.steps) {
    outcomes_.at(s.action);  // every action needs a model
    ++stats_[s.action].scheduled;
  }
  log(now, "plan", std::to_string(plan_.steps.size()) + " steps");
  status_ = plan_.steps.empty() ? SessionStatus::done : SessionStatus::awaiting_confirmation;
}

void Session::unschedule_remaining() {
  for (std::size_t i = cursor_ + (launched_ ? 1 : 0); i < plan_.steps.size(); ++i) {
    --stats_[plan_.steps[i].action].scheduled;
  }
}

void Session::start(double now) {
  if (plan_valid_ || !transcript_.empty()) {
    throw Error(ErrorCode::precondition_failed, "session already started");
  }
  const auto r = plan_for_goal(*kb_->snapshot(), *domain_, goal_, config_.budget);
  if (!r.found()) {
    log(now, "no_plan", to_string(r.status));
    status_ = SessionStatus::aborted;
    return;
  }
  adopt(r.plan, now);
}

void Session::launch(double now) {
  auto& st = stats_[plan_.steps[cursor_].action];
  ++st.executed;
  if (launched_) ++st.relaunched;
  launched_ = true;
  pending_runtime_ = outcomes_.sample_runtime(plan_.steps[cursor_].action, rng_);
  launch_time_ = now;
  status_ = SessionStatus::executing;
  log(now, "launch", plan_.steps[cursor_].str());
}

void Session::step(GuiCommand c, double now) {
  require_active();
  const auto noop = [&] { log(now, "noop", std::string(to_string(c)) + " while " + to_string(status_)); };
  const auto abort = [&](const char* why) {
    for (std::size_t i = cursor_ + (launched_ ? 1 : 0); i < plan_.steps.size(); ++i) {
      ++stats_[plan_.steps[i].action].never_launched;
    }
    status_ = SessionStatus::aborted;
    log(now, "abort", why);
  };
  switch (status_) {
    case SessionStatus::awaiting_confirmation:
      if (c == GuiCommand::select) {
        launch(now);
      } else if (c == GuiCommand::go_back) {
        status_ = SessionStatus::interrupted;
        log(now, "declined", plan_.steps[cursor_].str());
      } else {
        noop();
      }
      break;
    case SessionStatus::executing:
      if (c == GuiCommand::go_back) {
        status_ = SessionStatus::interrupted;
        ++interruptions_;
        ++stats_[plan_.steps[cursor_].action].interrupted;
        log(now, "interrupted", "user command");
      } else {
        noop();
      }
      break;
    case SessionStatus::recovering:
      if (c == GuiCommand::select) {
        launch(now);
      } else if (c == GuiCommand::go_back) {
        abort("user gave up recovery");
      } else {
        noop();
      }
      break;
    case SessionStatus::interrupted:
      if (c == GuiCommand::select) {
        if (!plan_valid_) {
          replan(now);
        } else {
          status_ = SessionStatus::awaiting_confirmation;
          log(now, "resume", plan_.steps[cursor_].str());
        }
      } else if (c == GuiCommand::go_back) {
        abort("user cancelled");
      } else {
        noop();
      }
      break;
    case SessionStatus::done:
    case SessionStatus::aborted:
      break;
  }
}

namespace {

EffectorWorld surface_world(const Workspace& ws, const std::string& location,
                            const Eigen::Vector3d& base, double reach) {
  EffectorWorld w;
  w.base = base;
  w.reach = reach;
  if (auto it = ws.surfaces().find(location); it != ws.surfaces().end()) {
    const auto& s = it->second;
    w.obstacles.push_back({Eigen::Vector3d(s.center.x() - 0.5 * s.size.x(), s.center.y() - 0.5 * s.size.y(), 0.0),
                           Eigen::Vector3d(s.center.x() + 0.5 * s.size.x(), s.center.y() + 0.5 * s.size.y(), s.height)});
  }
  return w;
}

constexpr double kReach = 1.6;

}  // namespace

bool Session::run_motion(const planner::PlanStep& step, std::string& detail) {
  const auto world = kb_->snapshot();
  const auto& m = *motion_;
  const auto pose_of = [&](const std::string& id) -> Pose2D {
    const auto* o = world->find(id);
    if (!o || !o->placement) throw Error(ErrorCode::not_found, "no pose for '" + id + "'");
    return o->placement->pose;
  };
  try {
    if (step.action == "approach") {
      const Pose2D from = pose_of(step.args[0]), to = pose_of(step.args[1]);
      if (se2_distance(from, to) < 1e-9) return true;
      const auto r = bi2rrt_star(from, to, m.workspace, m.rrt, rng_());
      std::ostringstream os;
      os << "path cost " << std::setprecision(4) << r.final_cost;
      detail = os.str();
      return true;
    }
    if (step.action == "grasp" || step.action == "drop") {
      const Pose2D base2 = pose_of(step.args[0]);
      const std::string& loc = step.args[2];
      const auto sit = m.workspace.surfaces().find(loc);
      if (sit == m.workspace.surfaces().end()) return true;  // no geometry for this place
      const auto& surf = sit->second;
      const Eigen::Vector3d base(base2.x, base2.y, 1.0);
      const EffectorWorld ew = surface_world(m.workspace, loc, base, kReach);
      std::vector<EffectorPose> targets;
      if (step.action == "grasp") {
        const Eigen::Vector3d obj(surf.center.x(), surf.center.y(), surf.height + 0.06);
        targets = sample_grasp_poses(obj, 0.15, m.grasp_samples, rng_, ew);
      } else {
        Workspace only(m.workspace.lo(), m.workspace.hi(), 0.0);
        only.add_surface(loc, surf);
        const auto cloud = surface_point_cloud(only, 0.04, 0.001, rng_);
        for (const auto& d : sample_drop_poses(cloud, 0.1, rng_).poses) {
          if (ew.pose_free(d.pose)) targets.push_back(d.pose);
        }
        if (targets.empty()) throw Error(ErrorCode::infeasible, "no reachable drop pose");
      }
      const Eigen::Vector3d lo = base - Eigen::Vector3d(kReach, kReach, 0.6);
      const Eigen::Vector3d hi = base + Eigen::Vector3d(kReach, kReach, 0.6);
      const auto valid = [&](const EffectorPose& a, const EffectorPose& b) {
        return ew.pose_free(a) && ew.pose_free(b);
      };
      const auto map = Roadmap::random(m.roadmap_nodes, 8, lo, hi, rng_, valid);
      EffectorPose home;
      home.position = base + Eigen::Vector3d(0.2 * std::cos(base2.theta), 0.2 * std::sin(base2.theta), 0.2);
      PrmQueryConfig q;
      q.connect_radius = 1.5;
      q.segment_valid = valid;
      const auto path = prm_query(map, home, targets.front(), q);
      std::ostringstream os;
      os << path.poses.size() << " poses, cost " << std::setprecision(4) << path.cost;
      detail = os.str();
      return true;
    }
    if (step.action == "pour") {
      last_pour_ = pour_session(m.pour, rng_());
      std::ostringstream os;
      os << "level error " << std::setprecision(3) << 1000.0 * last_pour_->final_error << " mm";
      detail = os.str();
      return true;
    }
    if (step.action == "drink") {
      const Pose2D seat = pose_of(step.args[3]);
      const Eigen::Vector3d mouth(seat.x + 0.6 * std::cos(seat.theta), seat.y + 0.6 * std::sin(seat.theta),
                                  m.mouth_height);
      const auto estimate = localize_mouth(mouth, m.mouth_noise, rng_);
      const double err = (estimate - mouth).norm();
      std::ostringstream os;
      os << "mouth error " << std::setprecision(3) << 1000.0 * err << " mm";
      detail = os.str();
      return within_tolerance(estimate, mouth, m.mouth_tolerance);
    }
  } catch (const Error& e) {
    detail = e.what();
    return false;
  }
  return true;
}

void Session::complete_action(double now) {
  require_active();
  if (status_ != SessionStatus::executing) {
    throw Error(ErrorCode::precondition_failed, "no action is running");
  }
  const auto step = plan_.steps[cursor_];
  auto& st = stats_[step.action];
  st.runtimes.push_back(pending_runtime_);

  bool ok = outcomes_.sample_success(step.action, rng_);
  std::string detail;
  if (motion_ && !run_motion(step, detail)) ok = false;

  if (ok) {
    const auto world = kb_->snapshot();
    auto changed = effects_on_world(*domain_, *world, step);
    if (step.action == "approach") {
      // the base now stands at the approached location
      const auto* loc = world->find(step.args[1]);
      for (auto& o : changed) {
        if (o.id == step.args[0] && o.placement && loc && loc->placement) {
          o.placement->pose = loc->placement->pose;
        }
      }
    }
    std::vector<ExpectedChange> expected;
    for (const auto& o : changed) expected.push_back({o.id, ChangeKind::modified, o});
    kb_->declare_expected(std::move(expected));
    for (const auto& o : changed) kb_->upsert_object(o);
    kb_->clear_expected();

    ++st.succeeded;
    log(now, "success", step.str() + (detail.empty() ? "" : " (" + detail + ")"));
    ++cursor_;
    launched_ = false;
    failures_ = 0;
    status_ = cursor_ == plan_.steps.size() ? SessionStatus::done : SessionStatus::awaiting_confirmation;
    if (status_ == SessionStatus::done) log(now, "done");
    return;
  }

  ++failures_;
  log(now, "failure", step.str() + (detail.empty() ? "" : " (" + detail + ")"));
  if (failures_ <= config_.retries) {
    status_ = SessionStatus::recovering;
  } else {
    for (std::size_t i = cursor_ + 1; i < plan_.steps.size(); ++i) {
      ++stats_[plan_.steps[i].action].never_launched;
    }
    status_ = SessionStatus::aborted;
    log(now, "abort", "recovery failed");
  }
}

void Session::on_world_change(const ChangeEvent& e, double now) {
  if (e.expected) return;
  const std::string what = std::string(to_string(e.kind)) + " " + e.object_id;
  if (finished()) {
    log(now, "world_change", what);
    return;
  }
  plan_valid_ = false;
  if (status_ == SessionStatus::executing) {
    ++interruptions_;
    ++stats_[plan_.steps[cursor_].action].interrupted;
  }
  status_ = SessionStatus::interrupted;
  log(now, "unexpected_change", what);
}

void Session::replan(double now) {
  require_active();
  unschedule_remaining();
  // Docking at a location is an execution artifact: after an interruption
  // the base has to approach again, so the positioning is released first.
  std::vector<WorldObject> released;
  for (const auto& [id, o] : kb_->snapshot()->objects) {
    auto it = o.attributes.find("positioned");
    if (o.type_name == "robot" && it != o.attributes.end() && it->second != AttrValue{std::string("nowhere")}) {
      WorldObject r = o;
      r.attributes["positioned"] = "nowhere";
      released.push_back(std::move(r));
    }
  }
  if (!released.empty()) {
    std::vector<ExpectedChange> expected;
    for (const auto& o : released) expected.push_back({o.id, ChangeKind::modified, o});
    kb_->declare_expected(std::move(expected));
    for (const auto& o : released) kb_->upsert_object(o);
    kb_->clear_expected();
  }
  const auto r = plan_for_goal(*kb_->snapshot(), *domain_, goal_, config_.budget);
  if (!r.found()) {
    plan_.steps.clear();
    cursor_ = 0;
    launched_ = false;
    status_ = SessionStatus::aborted;
    log(now, "abort", std::string("replanning failed: ") + to_string(r.status));
    return;
  }
  adopt(r.plan, now);
}

bool Session::goal_satisfied() const {
  const auto r = plan_for_goal(*kb_->snapshot(), *domain_, goal_, config_.budget);
  return r.found() && r.plan.steps.empty();
}

// ---- aggregates -----------------------------------------------------------------

std::map<std::string, ActionStats> merge_stats(const std::vector<std::map<std::string, ActionStats>>& runs) {
  std::map<std::string, ActionStats> out;
  for (const auto& run : runs) {
    for (const auto& [a, s] : run) {
      auto& o = out[a];
      o.scheduled += s.scheduled;
      o.executed += s.executed;
      o.succeeded += s.succeeded;
      o.relaunched += s.relaunched;
      o.never_launched += s.never_launched;
      o.interrupted += s.interrupted;
      o.runtimes.insert(o.runtimes.end(), s.runtimes.begin(), s.runtimes.end());
    }
  }
  return out;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0};
}

}  // namespace

std::string format_action_table(const std::map<std::string, ActionStats>& stats) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "action" << std::setw(16) << "executed(sched)" << std::right
     << std::setw(10) << "success%" << std::setw(10) << "mean[s]" << std::setw(10) << "std[s]"
     << std::setw(13) << "interrupted" << "\n";
  ActionStats total;
  const auto row = [&](const std::string& name, const ActionStats& s) {
    const auto [mean, sd] = mean_std(s.runtimes);
    const double rate = s.executed ? 100.0 * static_cast<double>(s.succeeded) / static_cast<double>(s.executed) : 0.0;
    std::ostringstream ex;
    ex << s.executed << " (" << s.scheduled << ")";
    os << std::left << std::setw(10) << name << std::setw(16) << ex.str() << std::right << std::fixed
       << std::setprecision(2) << std::setw(10) << rate << std::setw(10) << mean << std::setw(10) << sd
       << std::setw(13) << s.interrupted << "\n";
  };
  for (const auto& [a, s] : stats) {
    row(a, s);
    total.scheduled += s.scheduled;
    total.executed += s.executed;
    total.succeeded += s.succeeded;
    total.interrupted += s.interrupted;
    total.runtimes.insert(total.runtimes.end(), s.runtimes.begin(), s.runtimes.end());
  }
  row("total", total);
  return os.str();
}

json to_json(const std::map<std::string, ActionStats>& stats) {
  json j = json::object();
  for (const auto& [a, s] : stats) {
    const auto [mean, sd] = mean_std(s.runtimes);
    j[a] = {{"scheduled", s.scheduled},
            {"executed", s.executed},
            {"succeeded", s.succeeded},
            {"relaunched", s.relaunched},
            {"never_launched", s.never_launched},
            {"interrupted", s.interrupted},
            {"success_rate", s.executed ? static_cast<double>(s.succeeded) / static_cast<double>(s.executed) : 0.0},
            {"runtime_mean", mean},
            {"runtime_std", sd}};
  }
  return j;
}

double analytic_task_success(const planner::Plan& plan, const OutcomeModel& outcomes, std::size_t retries) {
  double p = 1.0;
  for (const auto& s : plan.steps) {
    const double fail = 1.0 - outcomes.at(s.action).success;
    p *= 1.0 - std::pow(fail, static_cast<double>(retries + 1));
  }
  return p;
}

}  // namespace bciassist
