#include "bciassist/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace bciassist {

using nlohmann::json;

const char* to_string(Phase p) {
  switch (p) {
    case Phase::goal_selection: return "goal_selection";
    case Phase::confirmation: return "confirmation";
    case Phase::execution: return "execution";
  }
  return "?";
}

const char* to_string(Rating r) {
  switch (r) {
    case Rating::unrated: return "unrated";
    case Rating::correct: return "correct";
    case Rating::incorrect: return "incorrect";
    case Rating::ignored: return "ignored";
  }
  return "?";
}

void rate_run(RunLog& log) {
  for (auto& e : log.events) {
    const GuiCommand c = e.decoded.emitted;
    switch (e.phase) {
      case Phase::goal_selection:
        if (c == GuiCommand::do_nothing) {
          e.rating = Rating::ignored;
        } else {
          const bool closer = e.distance_before && e.distance_after &&
                              *e.distance_after + 1 == *e.distance_before;
          e.rating = closer ? Rating::correct : Rating::incorrect;
        }
        break;
      case Phase::confirmation:
        e.rating = c == GuiCommand::select ? Rating::correct : Rating::incorrect;
        break;
      case Phase::execution:
        e.rating = c == GuiCommand::do_nothing ? Rating::correct : Rating::incorrect;
        break;
    }
  }
}

RunMetrics metrics(const RunLog& log, std::size_t minimal_steps) {
  RunMetrics m;
  std::size_t matched = 0;
  for (const auto& e : log.events) {
    if (e.rating == Rating::unrated) {
      throw Error(ErrorCode::precondition_failed, "run log has unrated events");
    }
    m.correct += e.rating == Rating::correct;
    m.incorrect += e.rating == Rating::incorrect;
    if (e.decoded.intended && *e.decoded.intended == e.decoded.emitted) ++matched;
    if (e.phase == Phase::goal_selection) {
      m.total_time = std::max(m.total_time, e.decoded.timestamp);
      if (e.rating != Rating::ignored) ++m.steps;
    }
  }
  if (m.steps == 0) throw Error(ErrorCode::precondition_failed, "metrics undefined for zero steps");
  if (minimal_steps == 0) throw Error(ErrorCode::invalid_argument, "minimal steps must be positive");
  m.accuracy = static_cast<double>(m.correct) / static_cast<double>(m.correct + m.incorrect);
  m.path_optimality = static_cast<double>(minimal_steps) / static_cast<double>(m.steps);
  m.time_per_step = m.total_time / static_cast<double>(m.steps);
  m.channel_accuracy =
      log.events.empty() ? 0.0 : static_cast<double>(matched) / static_cast<double>(log.events.size());
  return m;
}

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

std::string format_mean_std(const Summary& s, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << s.mean << "±" << s.std;
  return os.str();
}

AggregateMetrics aggregate(const std::vector<RunMetrics>& runs) {
  const auto col = [&](auto f) {
    std::vector<double> xs;
    for (const auto& r : runs) xs.push_back(f(r));
    return summarize(xs);
  };
  AggregateMetrics a;
  a.accuracy = col([](const RunMetrics& r) { return 100.0 * r.accuracy; });
  a.total_time = col([](const RunMetrics& r) { return r.total_time; });
  a.steps = col([](const RunMetrics& r) { return static_cast<double>(r.steps); });
  a.path_optimality = col([](const RunMetrics& r) { return 100.0 * r.path_optimality; });
  a.time_per_step = col([](const RunMetrics& r) { return r.time_per_step; });
  a.channel_accuracy = col([](const RunMetrics& r) { return 100.0 * r.channel_accuracy; });
  return a;
}

std::string format_table(const AggregateMetrics& a) {
  std::ostringstream os;
  const auto row = [&](const char* label, const std::string& value) {
    os << std::left << std::setw(22) << label << value << "\n";
  };
  row("runs", std::to_string(a.accuracy.n));
  row("accuracy [%]", format_mean_std(a.accuracy));
  row("time [s]", format_mean_std(a.total_time));
  row("steps", format_mean_std(a.steps, 2));
  row("path optimality [%]", format_mean_std(a.path_optimality));
  row("time/step [s]", format_mean_std(a.time_per_step));
  row("channel accuracy [%]", format_mean_std(a.channel_accuracy));
  return os.str();
}

std::string metrics_csv(const std::vector<RunMetrics>& runs) {
  std::ostringstream os;
  os << "run,accuracy,total_time,steps,path_optimality,time_per_step,channel_accuracy,correct,"
        "incorrect\n";
  os << std::setprecision(10);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    os << i << ',' << r.accuracy << ',' << r.total_time << ',' << r.steps << ','
       << r.path_optimality << ',' << r.time_per_step << ',' << r.channel_accuracy << ','
       << r.correct << ',' << r.incorrect << '\n';
  }
  return os.str();
}

json to_json(const RunMetrics& m) {
  return {{"accuracy", m.accuracy},
          {"total_time", m.total_time},
          {"steps", m.steps},
          {"path_optimality", m.path_optimality},
          {"time_per_step", m.time_per_step},
          {"channel_accuracy", m.channel_accuracy},
          {"correct", m.correct},
          {"incorrect", m.incorrect}};
}

namespace {

json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}, {"n", s.n}}; }

std::optional<GuiCommand> command_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  auto c = parse_command(j.get<std::string>());
  if (!c) throw Error(ErrorCode::parse_error, "unknown command " + j.dump());
  return c;
}

template <typename E>
E enum_from(const std::string& s, std::initializer_list<E> all) {
  for (E e : all) {
    if (s == to_string(e)) return e;
  }
  throw Error(ErrorCode::parse_error, "unknown value '" + s + "'");
}

}  // namespace

json to_json(const AggregateMetrics& a) {
  return {{"accuracy_pct", summary_json(a.accuracy)},
          {"total_time_s", summary_json(a.total_time)},
          {"steps", summary_json(a.steps)},
          {"path_optimality_pct", summary_json(a.path_optimality)},
          {"time_per_step_s", summary_json(a.time_per_step)},
          {"channel_accuracy_pct", summary_json(a.channel_accuracy)}};
}

void write_ndjson(const RunLog& log, std::ostream& out) {
  out << json{{"record", "run"}, {"seed", log.seed}, {"goal", log.goal},
              {"minimal_steps", log.minimal_steps}}
             .dump()
      << '\n';
  for (const auto& e : log.events) {
    json j = to_json(e.decoded);
    j["record"] = "event";
    j["phase"] = to_string(e.phase);
    j["rating"] = to_string(e.rating);
    j["d_before"] = e.distance_before ? json(*e.distance_before) : json(nullptr);
    j["d_after"] = e.distance_after ? json(*e.distance_after) : json(nullptr);
    out << j.dump() << '\n';
  }
}

RunLog read_ndjson(std::istream& in) {
  RunLog log;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::parse_error, e.what());
    }
    const auto kind = j.value("record", "");
    try {
      if (kind == "run") {
        log.seed = j.at("seed").get<std::uint64_t>();
        log.goal = j.at("goal").get<std::string>();
        log.minimal_steps = j.at("minimal_steps").get<std::size_t>();
        header = true;
      } else if (kind == "event") {
        LoggedEvent e;
        e.decoded.timestamp = j.at("t").get<double>();
        e.decoded.intended = command_from(j.at("intended"));
        e.decoded.emitted = *command_from(j.at("emitted"));
        e.phase = enum_from(j.at("phase").get<std::string>(),
                            {Phase::goal_selection, Phase::confirmation, Phase::execution});
        e.rating = enum_from(j.at("rating").get<std::string>(),
                             {Rating::unrated, Rating::correct, Rating::incorrect, Rating::ignored});
        if (!j.at("d_before").is_null()) e.distance_before = j["d_before"].get<std::size_t>();
        if (!j.at("d_after").is_null()) e.distance_after = j["d_after"].get<std::size_t>();
        log.events.push_back(e);
      } else {
        throw Error(ErrorCode::parse_error, "unknown record '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse_error, "bad " + kind + " record: " + e.what());
    }
  }
  if (!header) throw Error(ErrorCode::parse_error, "run log lacks its header record");
  return log;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::invalid_argument, "quantile of empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return quantile_sorted(xs, 0.5);
}

double iqr(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return quantile_sorted(xs, 0.75) - quantile_sorted(xs, 0.25);
}

Tensor3 snr(const LabeledSpectralData& data) {
  if (data.size() < 2) throw Error(ErrorCode::invalid_argument, "SNR needs at least two classes");
  const Tensor3* shape = nullptr;
  for (const auto& cls : data) {
    if (cls.empty()) throw Error(ErrorCode::invalid_argument, "class without repetitions");
    for (const auto& rep : cls) {
      if (!shape) shape = &rep;
      if (!rep.same_shape(*shape) || rep.values.size() != rep.nf * rep.nt * rep.ne) {
        throw Error(ErrorCode::invalid_argument, "repetitions differ in shape");
      }
    }
  }
  if (shape->values.empty()) throw Error(ErrorCode::invalid_argument, "degenerate dimensions");

  Tensor3 out(shape->nf, shape->nt, shape->ne);
  std::vector<double> medians(data.size()), iqrs(data.size()), sample;
  for (std::size_t cell = 0; cell < out.values.size(); ++cell) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      sample.clear();
      for (const auto& rep : data[i]) sample.push_back(rep.values[cell]);
      std::sort(sample.begin(), sample.end());
      medians[i] = quantile_sorted(sample, 0.5);
      iqrs[i] = quantile_sorted(sample, 0.75) - quantile_sorted(sample, 0.25);
    }
    const double num = iqr(medians);
    const double den = median(iqrs);
    if (den == 0.0) {
      out.values[cell] = num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      out.values[cell] = num / den;
    }
  }
  return out;
}

PermutationResult permutation_test(const std::vector<int>& labels,
                                   const std::vector<int>& predictions, std::size_t k,
                                   std::uint64_t seed) {
  if (labels.empty()) throw Error(ErrorCode::invalid_argument, "empty inputs");
  if (labels.size() != predictions.size()) {
    throw Error(ErrorCode::invalid_argument, "labels and predictions differ in length");
  }
  if (k == 0) throw Error(ErrorCode::invalid_argument, "need at least one permutation");
  const std::size_t n = labels.size();
  const auto hits = [&](const std::vector<int>& l) {
    std::size_t h = 0;
    for (std::size_t i = 0; i < n; ++i) h += l[i] == predictions[i];
    return h;
  };
  const std::size_t observed = hits(labels);

  PermutationResult r;
  r.observed_accuracy = static_cast<double>(observed) / static_cast<double>(n);
  double factorial = 1.0;
  for (std::size_t i = 2; i <= n && factorial <= kExactEnumerationLimit; ++i) factorial *= i;

  std::size_t at_least = 0;
  if (factorial <= kExactEnumerationLimit) {
    // every ordering of positions, so repeated labels count with multiplicity
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> perm(n);
    do {
      for (std::size_t i = 0; i < n; ++i) perm[i] = labels[idx[i]];
      at_least += hits(perm) >= observed;
      ++r.permutations;
    } while (std::next_permutation(idx.begin(), idx.end()));
    r.exact = true;
  } else {
    Rng rng(seed);
    std::vector<int> perm = labels;
    for (std::size_t j = 0; j < k; ++j) {
      std::shuffle(perm.begin(), perm.end(), rng);
      at_least += hits(perm) >= observed;
    }
    r.permutations = k;
  }
  r.p_value = static_cast<double>(at_least) / static_cast<double>(r.permutations);
  return r;
}

std::string format_significance(double p, double threshold) {
  std::ostringstream os;
  if (p < threshold) {
    const double e = std::log10(threshold);
    if (std::abs(e - std::round(e)) < 1e-9) {
      os << "p < 10^" << static_cast<int>(std::round(e));
    } else {
      os << "p < " << threshold;
    }
  } else {
    os << "p = " << std::setprecision(3) << p;
  }
  return os.str();
}

}  // namespace bciassist
