#include "bciassist/gui_command.hpp"

#include <string>

namespace bciassist {

std::string_view to_string(GuiCommand c) {
  switch (c) {
    case GuiCommand::go_up: return "go_up";
    case GuiCommand::go_down: return "go_down";
    case GuiCommand::select: return "select";
    case GuiCommand::go_back: return "go_back";
    case GuiCommand::do_nothing: return "do_nothing";
  }
  return "?";
}

std::string_view to_string(MentalTask t) {
  switch (t) {
    case MentalTask::right_hand: return "right_hand";
    case MentalTask::feet: return "feet";
    case MentalTask::rotation: return "rotation";
    case MentalTask::word_generation: return "word_generation";
    case MentalTask::rest: return "rest";
  }
  return "?";
}

std::optional<GuiCommand> parse_command(std::string_view s) {
  std::string t(s);
  for (auto& ch : t) {
    if (ch == '-' || ch == ' ') ch = '_';
  }
  for (auto c : kAllCommands) {
    if (to_string(c) == t) return c;
  }
  // short aliases used by the CLI and the HTTP API
  if (t == "up") return GuiCommand::go_up;
  if (t == "down") return GuiCommand::go_down;
  if (t == "back") return GuiCommand::go_back;
  if (t == "nothing" || t == "rest") return GuiCommand::do_nothing;
  return std::nullopt;
}

}  // namespace bciassist
