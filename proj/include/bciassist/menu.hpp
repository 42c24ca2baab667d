#pragma once

// Goal-formulation menu: a root page listing goal types, one page per goal
// parameter listing refinements (plus "any of these" when several candidates
// remain), and a final confirmation page. Parameters whose reference is
// already unique are skipped automatically. `go_back` undoes the last
// selection and restores that page's cursor.

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "bciassist/goal_formulation.hpp"
#include "bciassist/gui_command.hpp"

namespace bciassist {

struct MenuItem {
  enum class Kind { goal_type, refinement, any_acceptable, confirm };

  Kind kind = Kind::goal_type;
  std::string label;
  std::size_t goal_type = 0;
  std::optional<Constraint> constraint;
  std::size_t count = 0;  // candidates left after choosing this item
};

// Derived data for one world snapshot, shared by every menu state built on it.
class MenuContext {
 public:
  MenuContext(std::shared_ptr<const WorldState> world, std::vector<GoalSchema> goal_types);

  const WorldState& world() const { return *world_; }
  std::shared_ptr<const WorldState> world_ptr() const { return world_; }
  const std::vector<GoalSchema>& goal_types() const { return goal_types_; }

  std::set<std::string> candidates(const Reference& ref) const;
  std::vector<RefinementOption> refinements(const std::set<std::string>& candidates) const;

 private:
  std::shared_ptr<const WorldState> world_;
  std::vector<GoalSchema> goal_types_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::set<std::string>> candidate_cache_;
  mutable std::map<std::set<std::string>, std::vector<RefinementOption>> refinement_cache_;
};

struct MenuState {
  std::optional<std::size_t> goal_type;  // unset on the root page
  std::optional<GoalTemplate> tpl;
  std::size_t param = 0;  // == arity on the confirmation page
  std::size_t cursor = 0;
  bool confirmed = false;
};

std::vector<MenuItem> page_items(const MenuContext& ctx, const MenuState& state);

// State after selecting item `index` of the current page.
MenuState select_item(const MenuContext& ctx, const MenuState& state, std::size_t index);

// Identifies the page (not the cursor): goal type, parameter index and each
// parameter's resolution and candidate set.
std::string page_key(const MenuContext& ctx, const MenuState& state);

class GoalMenu {
 public:
  explicit GoalMenu(std::shared_ptr<const MenuContext> ctx);

  std::vector<MenuItem> items() const { return page_items(*ctx_, state_); }
  std::size_t cursor() const { return state_.cursor; }
  bool confirmed() const { return state_.confirmed; }
  const MenuState& state() const { return state_; }
  const std::vector<MenuState>& history() const { return history_; }
  const MenuContext& context() const { return *ctx_; }

  // Returns true when the menu state changed.
  bool apply(GuiCommand command);

  std::vector<std::string> breadcrumb() const;
  const GoalTemplate* goal_template() const {
    return state_.tpl ? &*state_.tpl : nullptr;
  }
  // Requires confirmed().
  pddl::Goal goal() const;
  std::string goal_label() const;

 private:
  std::shared_ptr<const MenuContext> ctx_;
  MenuState state_;
  std::vector<MenuState> history_;
};

// What the instructed user wants: a goal type and, per parameter, the set of
// objects they would accept.
struct MenuTarget {
  std::string goal_type;
  std::vector<std::set<std::string>> acceptable;
};

// Shortest command sequences through the menu graph toward a target.
class MenuOracle {
 public:
  MenuOracle(std::shared_ptr<const MenuContext> ctx, MenuTarget target);

  const MenuTarget& target() const { return target_; }

  // Commands still needed to confirm the target; nullopt if unreachable.
  std::optional<std::size_t> distance(const MenuState& state,
                                      const std::vector<MenuState>& history) const;
  std::optional<std::size_t> distance(const GoalMenu& menu) const {
    return distance(menu.state(), menu.history());
  }

  // First command of a shortest path (ties: stay on page, then lower index).
  std::optional<GuiCommand> next_command(const GoalMenu& menu) const;

  bool reached(const MenuState& state) const;

 private:
  static constexpr std::size_t kInf = static_cast<std::size_t>(-1) / 4;

  // (item index, 1 + remaining cost after selecting it) for viable items.
  const std::vector<std::pair<std::size_t, std::size_t>>& page_costs(
      const MenuState& state) const;
  std::size_t cost_down(const MenuState& state) const;
  bool params_match(const MenuState& state, std::size_t upto) const;

  std::shared_ptr<const MenuContext> ctx_;
  MenuTarget target_;
  mutable std::unordered_map<std::string, std::vector<std::pair<std::size_t, std::size_t>>>
      memo_;
};

// Resolves a textual goal spec such as `put cup(content=water) table` into a
// menu target. Each argument is an object id, a type name, or
// `type(key=value,...)`.
MenuTarget parse_goal_spec(const std::string& spec, const MenuContext& ctx);

}  // namespace bciassist
