#include "bciassist/command_channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace bciassist {

using nlohmann::json;

ConfusionMatrix::ConfusionMatrix() {
  for (std::size_t i = 0; i < kCommandCount; ++i) rows_[i][i] = 1.0;
}

ConfusionMatrix::ConfusionMatrix(const std::array<Row, kCommandCount>& rows) : rows_(rows) {
  for (std::size_t i = 0; i < kCommandCount; ++i) {
    double sum = 0.0;
    for (double p : rows_[i]) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw Error(ErrorCode::invalid_argument, "confusion matrix entries must be >= 0");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(ErrorCode::invalid_argument,
                  "confusion matrix row " + std::to_string(i) + " sums to " +
                      std::to_string(sum));
    }
  }
}

ConfusionMatrix ConfusionMatrix::symmetric(double error_rate) {
  if (!(error_rate >= 0.0 && error_rate < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "error rate must be in [0, 1)");
  }
  std::array<Row, kCommandCount> rows{};
  for (std::size_t i = 0; i < kCommandCount; ++i) {
    for (std::size_t j = 0; j < kCommandCount; ++j) {
      rows[i][j] = i == j ? 1.0 - error_rate : error_rate / (kCommandCount - 1);
    }
  }
  return ConfusionMatrix(rows);
}

ConfusionMatrix ConfusionMatrix::from_json(const json& j) {
  const json& m = j.is_object() ? j.at("matrix") : j;
  if (!m.is_array() || m.size() != kCommandCount) {
    throw Error(ErrorCode::invalid_argument, "confusion matrix must be 5x5");
  }
  std::array<Row, kCommandCount> rows{};
  for (std::size_t i = 0; i < kCommandCount; ++i) {
    if (!m[i].is_array() || m[i].size() != kCommandCount) {
      throw Error(ErrorCode::invalid_argument, "confusion matrix must be 5x5");
    }
    for (std::size_t k = 0; k < kCommandCount; ++k) rows[i][k] = m[i][k].get<double>();
  }
  return ConfusionMatrix(rows);
}

ConfusionMatrix ConfusionMatrix::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
}

double ConfusionMatrix::mean_accuracy() const {
  double s = 0.0;
  for (std::size_t i = 0; i < kCommandCount; ++i) s += rows_[i][i];
  return s / kCommandCount;
}

json ConfusionMatrix::to_json() const {
  json m = json::array();
  for (const auto& r : rows_) m.push_back(std::vector<double>(r.begin(), r.end()));
  return {{"matrix", m}};
}

GuiCommand emit(GuiCommand intended, const ConfusionMatrix& m, Rng& rng) {
  const auto& row = m.rows()[index(intended)];
  // inverse-CDF draw; keeps the mapping from rng output explicit
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t j = 0; j < kCommandCount; ++j) {
    acc += row[j];
    if (u < acc) return kAllCommands[j];
  }
  for (std::size_t j = kCommandCount; j-- > 0;) {
    if (row[j] > 0.0) return kAllCommands[j];
  }
  return intended;
}

json to_json(const DecodedEvent& e) {
  json j{{"t", e.timestamp}, {"emitted", std::string(to_string(e.emitted))}};
  j["intended"] = e.intended ? json(std::string(to_string(*e.intended))) : json(nullptr);
  return j;
}

ConfusionMatrix ChannelConfig::matrix() const {
  return custom_matrix ? *custom_matrix : ConfusionMatrix::symmetric(error_rate);
}

ChannelConfig ChannelConfig::from_json(const json& j) {
  ChannelConfig c;
  c.error_rate = j.value("error_rate", c.error_rate);
  c.step_interval = j.value("step_interval", c.step_interval);
  c.step_jitter = j.value("step_jitter", c.step_jitter);
  c.min_interval = j.value("min_interval", c.min_interval);
  if (j.contains("matrix")) c.custom_matrix = ConfusionMatrix::from_json(j.at("matrix"));
  if (c.step_interval <= 0.0 || c.step_jitter < 0.0 || c.min_interval <= 0.0) {
    throw Error(ErrorCode::invalid_argument, "channel timing must be positive");
  }
  ConfusionMatrix::symmetric(c.error_rate);  // range check
  return c;
}

CommandChannel::CommandChannel(const ChannelConfig& config, std::uint64_t seed)
    : config_(config), matrix_(config.matrix()), rng_(seed) {}

double CommandChannel::next_interval() {
  if (config_.step_jitter == 0.0) return std::max(config_.min_interval, config_.step_interval);
  std::normal_distribution<double> d(config_.step_interval, config_.step_jitter);
  return std::max(config_.min_interval, d(rng_));
}

DecodedEvent CommandChannel::decode(GuiCommand intended) {
  now_ += next_interval();
  return {now_, intended, emit(intended, matrix_, rng_)};
}

DecodedEvent CommandChannel::free_run() {
  now_ += next_interval();
  return {now_, std::nullopt, emit(GuiCommand::do_nothing, matrix_, rng_)};
}

void CommandChannel::advance(double seconds) {
  if (seconds < 0.0) throw Error(ErrorCode::invalid_argument, "time cannot run backwards");
  now_ += seconds;
}

std::vector<ParadigmTrial> paradigm_schedule(std::size_t trials_per_class,
                                             const ConfusionMatrix& errors, std::uint64_t seed,
                                             const ParadigmConfig& config) {
  if (config.cue_duration <= 0.0 || config.marker_duration <= 0.0 ||
      config.min_interval <= config.cue_duration || config.max_interval < config.min_interval) {
    throw Error(ErrorCode::invalid_argument, "invalid paradigm timing");
  }
  Rng rng(seed);
  std::vector<MentalTask> tasks;
  for (std::size_t i = 0; i < trials_per_class; ++i) {
    for (auto c : kAllCommands) tasks.push_back(task_for(c));
  }
  std::shuffle(tasks.begin(), tasks.end(), rng);

  std::uniform_real_distribution<double> interval(config.min_interval, config.max_interval);
  std::vector<ParadigmTrial> out;
  double t = 0.0;
  for (auto task : tasks) {
    ParadigmTrial tr;
    tr.task = task;
    tr.cue_onset = t;
    tr.cue_end = t + config.cue_duration;
    tr.marker_onset = t + interval(rng);
    tr.marker_end = tr.marker_onset + config.marker_duration;
    tr.performed = emit(command_for(task), errors, rng);
    out.push_back(tr);
    t = tr.marker_end;
  }
  return out;
}

ScriptedUser::ScriptedUser(std::shared_ptr<const MenuContext> ctx, MenuTarget target)
    : oracle_(ctx, std::move(target)) {
  GoalMenu root(ctx);
  if (!oracle_.distance(root)) {
    throw Error(ErrorCode::infeasible,
                "goal '" + oracle_.target().goal_type + "' cannot be reached in the menu");
  }
}

GuiCommand ScriptedUser::next(const GoalMenu& menu) const {
  if (menu.confirmed()) return GuiCommand::do_nothing;
  const auto c = oracle_.next_command(menu);
  if (!c) {
    throw Error(ErrorCode::infeasible, "target became unreachable from the current menu");
  }
  return *c;
}

}  // namespace bciassist
