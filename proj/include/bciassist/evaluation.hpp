#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bciassist/command_channel.hpp"

namespace bciassist {

// ---- run rating and metrics ------------------------------------------------

enum class Phase { goal_selection, confirmation, execution };
enum class Rating { unrated, correct, incorrect, ignored };

const char* to_string(Phase p);
const char* to_string(Rating r);

struct LoggedEvent {
  DecodedEvent decoded;
  Phase phase = Phase::goal_selection;
  // Menu distance to the instructed goal before/after the event (goal
  // selection only).
  std::optional<std::size_t> distance_before;
  std::optional<std::size_t> distance_after;
  Rating rating = Rating::unrated;
};

struct RunLog {
  std::uint64_t seed = 0;
  std::string goal;
  std::size_t minimal_steps = 0;  // shortest menu path for the instructed goal
  std::vector<LoggedEvent> events;
};

// Goal selection: a command is correct iff it brings the menu one step closer
// to the instructed goal (this also covers remediation of earlier errors);
// rest is ignored. Confirmation: select is correct, anything else incorrect.
// Execution: rest is correct, anything else incorrect.
void rate_run(RunLog& log);

struct RunMetrics {
  double accuracy = 0.0;           // correct / (correct + incorrect)
  double total_time = 0.0;         // goal selection only, seconds
  std::size_t steps = 0;           // rated goal-selection events
  double path_optimality = 0.0;    // minimal / used
  double time_per_step = 0.0;
  double channel_accuracy = 0.0;   // emitted == intended, all events
  std::size_t correct = 0;
  std::size_t incorrect = 0;
};

RunMetrics metrics(const RunLog& log, std::size_t minimal_steps);
inline RunMetrics metrics(const RunLog& log) { return metrics(log, log.minimal_steps); }

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  std::size_t n = 0;
};

Summary summarize(const std::vector<double>& xs);
// "76.7±9.1"
std::string format_mean_std(const Summary& s, int decimals = 1);

struct AggregateMetrics {
  Summary accuracy;  // percent
  Summary total_time;
  Summary steps;
  Summary path_optimality;  // percent
  Summary time_per_step;
  Summary channel_accuracy;  // percent
};

AggregateMetrics aggregate(const std::vector<RunMetrics>& runs);
// Table-I style block: one "name value" line per metric.
std::string format_table(const AggregateMetrics& a);

std::string metrics_csv(const std::vector<RunMetrics>& runs);
nlohmann::json to_json(const RunMetrics& m);
nlohmann::json to_json(const AggregateMetrics& a);

// Newline-delimited event records; a header record carries seed and goal.
void write_ndjson(const RunLog& log, std::ostream& out);
RunLog read_ndjson(std::istream& in);

// ---- SNR ---------------------------------------------------------------------

struct Tensor3 {
  std::size_t nf = 0, nt = 0, ne = 0;
  std::vector<double> values;  // f-major, then t, then e

  Tensor3() = default;
  Tensor3(std::size_t f, std::size_t t, std::size_t e, double fill = 0.0)
      : nf(f), nt(t), ne(e), values(f * t * e, fill) {}

  double& at(std::size_t f, std::size_t t, std::size_t e) { return values[(f * nt + t) * ne + e]; }
  double at(std::size_t f, std::size_t t, std::size_t e) const {
    return values[(f * nt + t) * ne + e];
  }
  bool same_shape(const Tensor3& o) const { return nf == o.nf && nt == o.nt && ne == o.ne; }
};

// classes[i] holds the repetitions M_i of class i.
using LabeledSpectralData = std::vector<std::vector<Tensor3>>;

// Linear interpolation at p * (n - 1) over sorted values.
double quantile_sorted(const std::vector<double>& sorted, double p);
double median(std::vector<double> xs);
double iqr(std::vector<double> xs);

// Per cell: IQR of the class medians over the median of the class IQRs.
// 0/0 gives 0, x/0 gives +infinity.
Tensor3 snr(const LabeledSpectralData& data);

// ---- permutation test --------------------------------------------------------

struct PermutationResult {
  double p_value = 1.0;
  double observed_accuracy = 0.0;
  std::size_t permutations = 0;
  bool exact = false;
};

inline constexpr double kExactEnumerationLimit = 1e6;

// Fraction of label permutations scoring at least the observed accuracy.
// Exact enumeration when n! <= 1e6, else `k` random permutations.
PermutationResult permutation_test(const std::vector<int>& labels,
                                   const std::vector<int>& predictions, std::size_t k,
                                   std::uint64_t seed);

// "p < 10^-6" below the threshold, otherwise "p = 0.0123".
std::string format_significance(double p, double threshold = 1e-6);

}  // namespace bciassist
