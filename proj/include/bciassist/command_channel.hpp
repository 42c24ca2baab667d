#pragma once

// Simulated BCI decoder: intended mental tasks pass through a confusion
// matrix and come out as GUI commands at a jittered step rate.

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "json.hpp"

#include "bciassist/common.hpp"
#include "bciassist/gui_command.hpp"
#include "bciassist/menu.hpp"

namespace bciassist {

// Rows are intended classes, columns emitted classes, both in GuiCommand order.
class ConfusionMatrix {
 public:
  using Row = std::array<double, kCommandCount>;

  ConfusionMatrix();  // identity
  explicit ConfusionMatrix(const std::array<Row, kCommandCount>& rows);

  // Diagonal 1 - e, off-diagonal e/4.
  static ConfusionMatrix symmetric(double error_rate);
  // Accepts a bare 5x5 array or {"matrix": [[...], ...]}.
  static ConfusionMatrix from_json(const nlohmann::json& j);
  static ConfusionMatrix load(const std::filesystem::path& path);

  double operator()(GuiCommand intended, GuiCommand emitted) const {
    return rows_[index(intended)][index(emitted)];
  }
  const std::array<Row, kCommandCount>& rows() const { return rows_; }
  // Mean diagonal, i.e. accuracy under uniformly distributed intents.
  double mean_accuracy() const;
  nlohmann::json to_json() const;

 private:
  std::array<Row, kCommandCount> rows_{};
};

GuiCommand emit(GuiCommand intended, const ConfusionMatrix& m, Rng& rng);

struct DecodedEvent {
  double timestamp = 0.0;                 // seconds, simulated
  std::optional<GuiCommand> intended;     // unset when free-running
  GuiCommand emitted = GuiCommand::do_nothing;
};

nlohmann::json to_json(const DecodedEvent& e);

struct ChannelConfig {
  double error_rate = 0.2;
  double step_interval = 9.0;  // mean seconds per decoded command
  double step_jitter = 2.0;    // std of the interval
  double min_interval = 0.5;
  std::optional<ConfusionMatrix> custom_matrix;

  ConfusionMatrix matrix() const;
  static ChannelConfig from_json(const nlohmann::json& j);
};

// One decoded-command stream with its own simulated clock.
class CommandChannel {
 public:
  CommandChannel(const ChannelConfig& config, std::uint64_t seed);

  double now() const { return now_; }
  const ConfusionMatrix& matrix() const { return matrix_; }

  DecodedEvent decode(GuiCommand intended);
  // No intent: the user rests, so the rest row of the matrix applies.
  DecodedEvent free_run();
  // Lets simulated time pass without decoding (e.g. robot motion).
  void advance(double seconds);

 private:
  double next_interval();

  ChannelConfig config_;
  ConfusionMatrix matrix_;
  Rng rng_;
  double now_ = 0.0;
};

// Cued training paradigm: cue image, mental task until the end marker
// (1-7 s after cue onset), marker disk for 0.2 s, GUI action at marker onset.
struct ParadigmTrial {
  MentalTask task = MentalTask::rest;
  double cue_onset = 0.0;
  double cue_end = 0.0;
  double marker_onset = 0.0;
  double marker_end = 0.0;
  GuiCommand performed = GuiCommand::do_nothing;  // after error injection
};

struct ParadigmConfig {
  double cue_duration = 0.5;
  double min_interval = 1.0;
  double max_interval = 7.0;
  double marker_duration = 0.2;
};

// `trials_per_class` cues of each task in shuffled order.
std::vector<ParadigmTrial> paradigm_schedule(std::size_t trials_per_class,
                                             const ConfusionMatrix& errors, std::uint64_t seed,
                                             const ParadigmConfig& config = {});

// Instructed user: always takes a shortest menu path toward the target from
// the current (possibly corrupted) menu state.
class ScriptedUser {
 public:
  // Throws infeasible when the target cannot be reached from the root page.
  ScriptedUser(std::shared_ptr<const MenuContext> ctx, MenuTarget target);

  const MenuOracle& oracle() const { return oracle_; }

  GuiCommand next(const GoalMenu& menu) const;
  // During execution: confirm pending actions, otherwise rest.
  static GuiCommand during_execution(bool awaiting_confirmation) {
    return awaiting_confirmation ? GuiCommand::select : GuiCommand::do_nothing;
  }

 private:
  MenuOracle oracle_;
};

}  // namespace bciassist
