#include "bciassist/menu.hpp"

#include <algorithm>
#include <sstream>

#include "bciassist/common.hpp"

namespace bciassist {

MenuContext::MenuContext(std::shared_ptr<const WorldState> world,
                         std::vector<GoalSchema> goal_types)
    : world_(std::move(world)), goal_types_(std::move(goal_types)) {
  if (!world_) throw Error(ErrorCode::invalid_argument, "menu needs a world snapshot");
}

std::set<std::string> MenuContext::candidates(const Reference& ref) const {
  const std::string key = render(ref);
  {
    std::lock_guard lock(mutex_);
    if (auto it = candidate_cache_.find(key); it != candidate_cache_.end()) return it->second;
  }
  auto result = query(ref, *world_);
  std::lock_guard lock(mutex_);
  return candidate_cache_.emplace(key, std::move(result)).first->second;
}

std::vector<RefinementOption> MenuContext::refinements(
    const std::set<std::string>& candidates) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = refinement_cache_.find(candidates); it != refinement_cache_.end()) {
      return it->second;
    }
  }
  auto result = refinements_for(candidates, *world_);
  std::lock_guard lock(mutex_);
  return refinement_cache_.emplace(candidates, std::move(result)).first->second;
}

namespace {

// Skips parameters that are already unique.
void advance(const MenuContext& ctx, MenuState& s) {
  auto& tpl = *s.tpl;
  while (s.param < tpl.params.size()) {
    if (ctx.candidates(tpl.params[s.param]).size() != 1) break;
    tpl.resolved[s.param] = ParamResolution::unique;
    ++s.param;
  }
}

std::string param_label(const MenuContext& ctx, const GoalTemplate& tpl, std::size_t i) {
  if (tpl.resolved[i] == ParamResolution::unique) {
    return *ctx.candidates(tpl.params[i]).begin();
  }
  std::string out = tpl.resolved[i] == ParamResolution::any_acceptable ? "any " : "";
  for (std::size_t k = 0; k < tpl.params[i].conjuncts.size(); ++k) {
    if (k) out += " & ";
    out += label(tpl.params[i].conjuncts[k]);
  }
  return out;
}

std::string template_label(const MenuContext& ctx, const GoalTemplate& tpl) {
  std::string out = tpl.schema.name + "(";
  for (std::size_t i = 0; i < tpl.params.size(); ++i) {
    if (i) out += ", ";
    out += param_label(ctx, tpl, i);
  }
  return out + ")";
}

}  // namespace

std::vector<MenuItem> page_items(const MenuContext& ctx, const MenuState& state) {
  std::vector<MenuItem> out;
  if (state.confirmed) return out;
  if (!state.goal_type) {
    const auto& types = ctx.goal_types();
    for (std::size_t i = 0; i < types.size(); ++i) {
      MenuItem item;
      item.kind = MenuItem::Kind::goal_type;
      item.label = types[i].name;
      item.goal_type = i;
      out.push_back(std::move(item));
    }
    return out;
  }
  const auto& tpl = *state.tpl;
  if (state.param >= tpl.params.size()) {
    MenuItem item;
    item.kind = MenuItem::Kind::confirm;
    item.label = "confirm " + template_label(ctx, tpl);
    item.goal_type = *state.goal_type;
    out.push_back(std::move(item));
    return out;
  }
  const auto& ref = tpl.params[state.param];
  const auto cands = ctx.candidates(ref);
  for (const auto& opt : ctx.refinements(cands)) {
    if (ref.contains(opt.constraint)) continue;
    MenuItem item;
    item.kind = MenuItem::Kind::refinement;
    item.label = label(opt.constraint);
    item.goal_type = *state.goal_type;
    item.constraint = opt.constraint;
    item.count = opt.resulting_count;
    out.push_back(std::move(item));
  }
  if (cands.size() > 1) {
    MenuItem item;
    item.kind = MenuItem::Kind::any_acceptable;
    item.label = "any of " + std::to_string(cands.size());
    item.goal_type = *state.goal_type;
    item.count = cands.size();
    out.push_back(std::move(item));
  }
  return out;
}

MenuState select_item(const MenuContext& ctx, const MenuState& state, std::size_t index) {
  const auto items = page_items(ctx, state);
  if (index >= items.size()) {
    throw Error(ErrorCode::invalid_argument, "no menu item " + std::to_string(index));
  }
  const MenuItem& item = items[index];
  MenuState next = state;
  next.cursor = 0;
  switch (item.kind) {
    case MenuItem::Kind::goal_type:
      next.goal_type = item.goal_type;
      next.tpl = make_template(ctx.goal_types()[item.goal_type]);
      next.param = 0;
      advance(ctx, next);
      break;
    case MenuItem::Kind::refinement:
      next.tpl->params[next.param].conjuncts.push_back(*item.constraint);
      advance(ctx, next);
      break;
    case MenuItem::Kind::any_acceptable:
      next.tpl->resolved[next.param] = ParamResolution::any_acceptable;
      ++next.param;
      advance(ctx, next);
      break;
    case MenuItem::Kind::confirm:
      next.confirmed = true;
      break;
  }
  return next;
}

std::string page_key(const MenuContext& ctx, const MenuState& state) {
  if (!state.goal_type) return "root";
  std::ostringstream os;
  os << *state.goal_type << '|' << state.param << '|' << state.confirmed;
  const auto& tpl = *state.tpl;
  for (std::size_t i = 0; i < tpl.params.size(); ++i) {
    os << '|' << static_cast<int>(tpl.resolved[i]) << ':';
    for (const auto& id : ctx.candidates(tpl.params[i])) os << id << ',';
  }
  return os.str();
}

GoalMenu::GoalMenu(std::shared_ptr<const MenuContext> ctx) : ctx_(std::move(ctx)) {
  if (!ctx_) throw Error(ErrorCode::invalid_argument, "menu needs a context");
}

bool GoalMenu::apply(GuiCommand command) {
  if (state_.confirmed) return false;
  const std::size_t n = items().size();
  switch (command) {
    case GuiCommand::go_up:
      if (state_.cursor == 0) return false;
      --state_.cursor;
      return true;
    case GuiCommand::go_down:
      if (state_.cursor + 1 >= n) return false;
      ++state_.cursor;
      return true;
    case GuiCommand::select:
      if (n == 0) return false;
      history_.push_back(state_);
      state_ = select_item(*ctx_, state_, state_.cursor);
      return true;
    case GuiCommand::go_back:
      if (history_.empty()) return false;
      state_ = std::move(history_.back());
      history_.pop_back();
      return true;
    case GuiCommand::do_nothing:
      return false;
  }
  return false;
}

std::vector<std::string> GoalMenu::breadcrumb() const {
  std::vector<std::string> out;
  if (!state_.tpl) return out;
  const auto& tpl = *state_.tpl;
  out.push_back(tpl.schema.name);
  for (std::size_t i = 0; i < tpl.params.size() && i <= state_.param; ++i) {
    out.push_back(tpl.params[i].free_var + ": " + param_label(*ctx_, tpl, i));
  }
  return out;
}

pddl::Goal GoalMenu::goal() const {
  if (!state_.confirmed) throw Error(ErrorCode::precondition_failed, "goal not confirmed yet");
  return finalize_goal(*state_.tpl, ctx_->world());
}

std::string GoalMenu::goal_label() const {
  return state_.tpl ? template_label(*ctx_, *state_.tpl) : std::string();
}

MenuOracle::MenuOracle(std::shared_ptr<const MenuContext> ctx, MenuTarget target)
    : ctx_(std::move(ctx)), target_(std::move(target)) {
  const auto& types = ctx_->goal_types();
  auto it = std::find_if(types.begin(), types.end(),
                         [&](const GoalSchema& s) { return s.name == target_.goal_type; });
  if (it == types.end()) {
    throw Error(ErrorCode::not_found, "goal type '" + target_.goal_type + "' is not offered");
  }
  if (it->params.size() != target_.acceptable.size()) {
    throw Error(ErrorCode::invalid_argument, "target arity does not match goal type");
  }
}

bool MenuOracle::params_match(const MenuState& s, std::size_t upto) const {
  const auto& tpl = *s.tpl;
  if (tpl.schema.name != target_.goal_type) return false;
  for (std::size_t i = 0; i < upto && i < tpl.params.size(); ++i) {
    const auto c = ctx_->candidates(tpl.params[i]);
    if (c.empty()) return false;
    if (!std::includes(target_.acceptable[i].begin(), target_.acceptable[i].end(), c.begin(),
                       c.end())) {
      return false;
    }
  }
  return true;
}

bool MenuOracle::reached(const MenuState& s) const {
  return s.confirmed && s.tpl && params_match(s, s.tpl->params.size());
}

std::size_t MenuOracle::cost_down(const MenuState& s) const {
  if (s.confirmed) return reached(s) ? 0 : kInf;
  std::size_t best = kInf;
  for (const auto& [i, c] : page_costs(s)) {
    const std::size_t moves = i > s.cursor ? i - s.cursor : s.cursor - i;
    best = std::min(best, moves + c);
  }
  return best;
}

const std::vector<std::pair<std::size_t, std::size_t>>& MenuOracle::page_costs(
    const MenuState& s) const {
  const std::string key = page_key(*ctx_, s);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  std::vector<std::pair<std::size_t, std::size_t>> costs;
  const auto items = page_items(*ctx_, s);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const MenuState child = select_item(*ctx_, s, i);
    if (child.tpl) {
      // prune branches that can no longer lead to the target
      if (!params_match(child, child.param)) continue;
      if (child.param < child.tpl->params.size()) {
        const auto c = ctx_->candidates(child.tpl->params[child.param]);
        const auto& ok = target_.acceptable[child.param];
        if (std::none_of(c.begin(), c.end(), [&](const std::string& id) { return ok.count(id); }))
          continue;
      }
    }
    const std::size_t rest = cost_down(child);
    if (rest < kInf) costs.emplace_back(i, 1 + rest);
  }
  return memo_.emplace(key, std::move(costs)).first->second;
}

std::optional<std::size_t> MenuOracle::distance(const MenuState& state,
                                                const std::vector<MenuState>& history) const {
  if (state.confirmed) {
    if (reached(state)) return 0;
    return std::nullopt;  // a confirmed menu accepts no further commands
  }
  std::size_t best = cost_down(state);
  for (std::size_t k = 1; k <= history.size(); ++k) {
    best = std::min(best, k + cost_down(history[history.size() - k]));
  }
  if (best >= kInf) return std::nullopt;
  return best;
}

std::optional<GuiCommand> MenuOracle::next_command(const GoalMenu& menu) const {
  const MenuState& s = menu.state();
  if (s.confirmed) return std::nullopt;
  std::size_t stay = kInf;
  std::size_t target_item = 0;
  for (const auto& [i, c] : page_costs(s)) {
    const std::size_t moves = i > s.cursor ? i - s.cursor : s.cursor - i;
    if (moves + c < stay) {
      stay = moves + c;
      target_item = i;
    }
  }
  const auto& history = menu.history();
  std::size_t back = kInf;
  for (std::size_t k = 1; k <= history.size(); ++k) {
    back = std::min(back, k + cost_down(history[history.size() - k]));
  }
  if (stay >= kInf && back >= kInf) return std::nullopt;
  if (back < stay) return GuiCommand::go_back;
  if (target_item < s.cursor) return GuiCommand::go_up;
  if (target_item > s.cursor) return GuiCommand::go_down;
  return GuiCommand::select;
}

namespace {

std::vector<std::string> split_spec(const std::string& spec) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char ch : spec) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (depth == 0 && std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur += ch;
    }
  }
  if (depth != 0) throw Error(ErrorCode::parse_error, "unbalanced parentheses in '" + spec + "'");
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

MenuTarget parse_goal_spec(const std::string& spec, const MenuContext& ctx) {
  const auto tokens = split_spec(spec);
  if (tokens.empty()) throw Error(ErrorCode::parse_error, "empty goal spec");
  const auto& types = ctx.goal_types();
  auto it = std::find_if(types.begin(), types.end(),
                         [&](const GoalSchema& s) { return s.name == tokens[0]; });
  if (it == types.end()) {
    throw Error(ErrorCode::not_found, "goal type '" + tokens[0] + "' is not offered");
  }
  if (tokens.size() - 1 != it->params.size()) {
    throw Error(ErrorCode::invalid_argument, "goal '" + it->name + "' takes " +
                                                 std::to_string(it->params.size()) +
                                                 " arguments");
  }
  MenuTarget target{it->name, {}};
  for (std::size_t i = 0; i < it->params.size(); ++i) {
    const std::string& tok = tokens[i + 1];
    Reference ref;
    ref.conjuncts.push_back(TypenameRef{it->params[i].type});
    const auto open = tok.find('(');
    if (open == std::string::npos && ctx.world().find(tok)) {
      ref.conjuncts.push_back(IndividualRef{tok});
    } else {
      const std::string type = tok.substr(0, open);
      ref.conjuncts.push_back(TypenameRef{type});
      if (open != std::string::npos) {
        if (tok.back() != ')') throw Error(ErrorCode::parse_error, "bad argument '" + tok + "'");
        std::stringstream body(tok.substr(open + 1, tok.size() - open - 2));
        std::string kv;
        while (std::getline(body, kv, ',')) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos || eq == 0) {
            throw Error(ErrorCode::parse_error, "expected key=value in '" + tok + "'");
          }
          ref.conjuncts.push_back(
              RelationalRef{kv.substr(0, eq), parse_attr_value(kv.substr(eq + 1))});
        }
      }
    }
    auto acceptable = query(ref, ctx.world());
    if (acceptable.empty()) {
      throw Error(ErrorCode::infeasible, "argument '" + tok + "' matches no object");
    }
    target.acceptable.push_back(std::move(acceptable));
  }
  return target;
}

}  // namespace bciassist
