#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace bciassist {

// The five GUI actions, one per decoded mental task.
enum class GuiCommand { go_up = 0, go_down, select, go_back, do_nothing };

inline constexpr std::size_t kCommandCount = 5;

inline constexpr std::array<GuiCommand, kCommandCount> kAllCommands = {
    GuiCommand::go_up, GuiCommand::go_down, GuiCommand::select, GuiCommand::go_back,
    GuiCommand::do_nothing};

enum class MentalTask { right_hand = 0, feet, rotation, word_generation, rest };

constexpr std::size_t index(GuiCommand c) { return static_cast<std::size_t>(c); }

constexpr MentalTask task_for(GuiCommand c) { return static_cast<MentalTask>(index(c)); }
constexpr GuiCommand command_for(MentalTask t) { return static_cast<GuiCommand>(t); }

std::string_view to_string(GuiCommand c);
std::string_view to_string(MentalTask t);
std::optional<GuiCommand> parse_command(std::string_view s);

}  // namespace bciassist
