#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "bciassist/evaluation.hpp"

using namespace bciassist;

namespace {

LoggedEvent ev(double t, GuiCommand intended, GuiCommand emitted, Phase ph,
               std::optional<std::size_t> before = std::nullopt,
               std::optional<std::size_t> after = std::nullopt) {
  LoggedEvent e;
  e.decoded = {t, intended, emitted};
  e.phase = ph;
  e.distance_before = before;
  e.distance_after = after;
  return e;
}

// Rank-based quantile written independently: average of the two order
// statistics around h = (n-1)p, weighted by the fractional part.
double oracle_quantile(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * p;
  const double lo = xs[static_cast<std::size_t>(h)];
  const double hi = xs[std::min(xs.size() - 1, static_cast<std::size_t>(h) + 1)];
  return lo * (1.0 - (h - std::floor(h))) + hi * (h - std::floor(h));
}

}  // namespace

TEST_CASE("rating by menu distance") {
  using G = GuiCommand;
  RunLog log;
  log.minimal_steps = 3;
  log.events = {
      ev(9, G::go_down, G::go_down, Phase::goal_selection, 3, 2),     // correct
      ev(18, G::select, G::go_up, Phase::goal_selection, 2, 3),       // error
      ev(27, G::go_down, G::do_nothing, Phase::goal_selection, 3, 3), // ignored
      ev(36, G::go_down, G::go_down, Phase::goal_selection, 3, 2),    // remediation
      ev(45, G::select, G::select, Phase::goal_selection, 2, 1),
      ev(54, G::select, G::select, Phase::goal_selection, 1, 0),
      ev(63, G::select, G::select, Phase::confirmation),
      ev(72, G::select, G::go_back, Phase::confirmation),
      ev(81, G::do_nothing, G::do_nothing, Phase::execution),
      ev(90, G::do_nothing, G::go_up, Phase::execution),
  };
  rate_run(log);
  const std::vector<Rating> want = {Rating::correct,   Rating::incorrect, Rating::ignored,
                                    Rating::correct,   Rating::correct,   Rating::correct,
                                    Rating::correct,   Rating::incorrect, Rating::correct,
                                    Rating::incorrect};
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(log.events[i].rating == want[i]);

  const auto m = metrics(log);
  CHECK(m.correct == 6);
  CHECK(m.incorrect == 3);
  CHECK(m.accuracy == doctest::Approx(6.0 / 9.0));
  CHECK(m.steps == 5);  // ignored event not counted
  CHECK(m.total_time == doctest::Approx(54.0));
  CHECK(m.time_per_step == doctest::Approx(54.0 / 5.0));
  CHECK(m.path_optimality == doctest::Approx(3.0 / 5.0));
  CHECK(m.channel_accuracy == doctest::Approx(6.0 / 10.0));
}

TEST_CASE("metrics reject degenerate logs") {
  RunLog log;
  log.minimal_steps = 2;
  log.events = {ev(1, GuiCommand::do_nothing, GuiCommand::do_nothing, Phase::goal_selection)};
  CHECK_THROWS_AS(metrics(log), Error);  // unrated
  rate_run(log);
  CHECK_THROWS_AS(metrics(log), Error);  // zero steps
}

TEST_CASE("error-free run is fully optimal") {
  RunLog log;
  log.minimal_steps = 4;
  for (std::size_t i = 0; i < 4; ++i) {
    log.events.push_back(ev(9.0 * (i + 1), GuiCommand::go_down, GuiCommand::go_down,
                            Phase::goal_selection, 4 - i, 3 - i));
  }
  rate_run(log);
  const auto m = metrics(log);
  CHECK(m.accuracy == 1.0);
  CHECK(m.path_optimality == 1.0);
  CHECK(m.channel_accuracy == 1.0);
}

TEST_CASE("aggregation and formatting") {
  const auto s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(format_mean_std({76.7, 9.1, 10}) == "76.7±9.1");
  CHECK(format_mean_std(summarize({5.0})) == "5.0±0.0");

  RunMetrics a, b;
  a.accuracy = 0.5;
  b.accuracy = 1.0;
  a.steps = 10;
  b.steps = 20;
  const auto agg = aggregate({a, b});
  CHECK(agg.accuracy.mean == doctest::Approx(75.0));
  CHECK(agg.steps.mean == doctest::Approx(15.0));
  CHECK(format_table(agg).find("75.0±35.4") != std::string::npos);
  const auto csv = metrics_csv({a, b});
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(to_json(agg)["accuracy_pct"]["n"] == 2);
}

TEST_CASE("ndjson round trip") {
  RunLog log;
  log.seed = 42;
  log.goal = "put cup(content=water) table";
  log.minimal_steps = 10;
  log.events = {ev(9.5, GuiCommand::select, GuiCommand::go_up, Phase::goal_selection, 10, 11),
                ev(20, GuiCommand::select, GuiCommand::select, Phase::confirmation)};
  log.events.push_back(log.events.back());
  log.events.back().decoded.intended.reset();
  rate_run(log);
  std::stringstream ss;
  write_ndjson(log, ss);
  const auto back = read_ndjson(ss);
  CHECK(back.seed == 42);
  CHECK(back.goal == log.goal);
  REQUIRE(back.events.size() == 3);
  CHECK(back.events[0].distance_after == 11u);
  CHECK_FALSE(back.events[1].distance_before);
  CHECK_FALSE(back.events[2].decoded.intended);
  CHECK(back.events[0].rating == Rating::incorrect);
  std::stringstream again;
  write_ndjson(back, again);
  std::stringstream first;
  write_ndjson(log, first);
  CHECK(again.str() == first.str());

  std::stringstream bad("{\"record\":\"event\"}\n");
  CHECK_THROWS_AS(read_ndjson(bad), Error);
}

TEST_CASE("quantiles match an independent rank oracle") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0.0, 3.0);
  for (std::size_t n = 1; n < 30; ++n) {
    std::vector<double> xs(n);
    for (auto& x : xs) x = d(rng);
    auto sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      CHECK(quantile_sorted(sorted, p) == doctest::Approx(oracle_quantile(xs, p)));
    }
  }
  CHECK(median({3.0, 1.0, 2.0, 10.0}) == doctest::Approx(2.5));
  CHECK(iqr({1.0, 2.0, 3.0, 4.0, 5.0}) == doctest::Approx(2.0));
}

TEST_CASE("snr: hand-computed cell and brute-force cells") {
  // two classes, 1x1x1, constant repetitions: medians differ, IQRs zero -> inf
  LabeledSpectralData sep = {{Tensor3(1, 1, 1, 1.0), Tensor3(1, 1, 1, 1.0)},
                             {Tensor3(1, 1, 1, 3.0), Tensor3(1, 1, 1, 3.0)}};
  CHECK(std::isinf(snr(sep).values[0]));
  LabeledSpectralData same = {{Tensor3(1, 1, 1, 2.0)}, {Tensor3(1, 1, 1, 2.0)}};
  CHECK(snr(same).values[0] == 0.0);

  // class A reps {0,1,2,3,4}, class B reps {10,11,12,13,14}, class C {5,5,5,5,9}
  // medians 2,12,5 -> IQR(2,5,12) = 8.5 - 3.5 = 5; IQRs 2,2,0 -> median 2
  LabeledSpectralData hand(3);
  for (double v : {0, 1, 2, 3, 4}) hand[0].push_back(Tensor3(1, 1, 1, v));
  for (double v : {10, 11, 12, 13, 14}) hand[1].push_back(Tensor3(1, 1, 1, v));
  for (double v : {5, 5, 5, 5, 9}) hand[2].push_back(Tensor3(1, 1, 1, v));
  CHECK(snr(hand).values[0] == doctest::Approx(2.5));

  std::mt19937_64 rng(11);
  std::normal_distribution<double> d(0.0, 1.0);
  LabeledSpectralData data(5);
  for (std::size_t c = 0; c < 5; ++c) {
    for (int r = 0; r < 7; ++r) {
      Tensor3 t(3, 4, 2);
      for (auto& v : t.values) v = d(rng) + static_cast<double>(c);
      data[c].push_back(t);
    }
  }
  const auto out = snr(data);
  for (std::size_t f = 0; f < 3; ++f) {
    for (std::size_t t = 0; t < 4; ++t) {
      for (std::size_t e = 0; e < 2; ++e) {
        std::vector<double> meds, iqrs;
        for (const auto& cls : data) {
          std::vector<double> xs;
          for (const auto& rep : cls) xs.push_back(rep.at(f, t, e));
          meds.push_back(oracle_quantile(xs, 0.5));
          iqrs.push_back(oracle_quantile(xs, 0.75) - oracle_quantile(xs, 0.25));
        }
        const double want = (oracle_quantile(meds, 0.75) - oracle_quantile(meds, 0.25)) /
                            oracle_quantile(iqrs, 0.5);
        CHECK(out.at(f, t, e) == doctest::Approx(want));
      }
    }
  }

  CHECK_THROWS_AS(snr({{Tensor3(1, 1, 1)}}), Error);
  CHECK_THROWS_AS(snr({{Tensor3(1, 1, 1)}, {Tensor3(2, 1, 1)}}), Error);
  CHECK_THROWS_AS(snr({{Tensor3(1, 1, 1)}, {}}), Error);
}

TEST_CASE("permutation test: exact enumeration") {
  // three distinct labels, all correct: only the identity ties
  auto r = permutation_test({0, 1, 2}, {0, 1, 2}, 100, 1);
  CHECK(r.exact);
  CHECK(r.permutations == 6);
  CHECK(r.p_value == doctest::Approx(1.0 / 6.0));
  CHECK(r.observed_accuracy == 1.0);

  // brute force over all orderings for a small case with repeats
  const std::vector<int> labels = {0, 0, 1, 1, 2, 2, 0};
  const std::vector<int> preds = {0, 1, 1, 1, 2, 0, 0};
  std::vector<int> idx = {0, 1, 2, 3, 4, 5, 6};
  int total = 0, ge = 0;
  auto hits = [&](const std::vector<int>& l) {
    int h = 0;
    for (std::size_t i = 0; i < l.size(); ++i) h += l[i] == preds[i];
    return h;
  };
  const int obs = hits(labels);
  do {
    std::vector<int> l;
    for (int i : idx) l.push_back(labels[i]);
    ++total;
    ge += hits(l) >= obs;
  } while (std::next_permutation(idx.begin(), idx.end()));
  r = permutation_test(labels, preds, 10, 1);
  CHECK(r.exact);
  CHECK(r.permutations == 5040);
  CHECK(r.p_value == doctest::Approx(static_cast<double>(ge) / total));
}

TEST_CASE("permutation test: Monte Carlo") {
  std::mt19937_64 rng(3);
  std::vector<int> labels, preds;
  for (int i = 0; i < 200; ++i) {
    labels.push_back(i % 5);
    preds.push_back(std::uniform_real_distribution<double>(0, 1)(rng) < 0.8
                        ? i % 5
                        : static_cast<int>(rng() % 5));
  }
  const auto r = permutation_test(labels, preds, 20000, 9);
  CHECK_FALSE(r.exact);
  CHECK(r.permutations == 20000);
  CHECK(r.p_value == 0.0);
  CHECK(format_significance(r.p_value) == "p < 10^-6");
  CHECK(permutation_test(labels, preds, 500, 9).p_value ==
        permutation_test(labels, preds, 500, 9).p_value);

  // random predictions: p should be far from significant most of the time
  std::vector<int> noise;
  for (int i = 0; i < 200; ++i) noise.push_back(static_cast<int>(rng() % 5));
  CHECK(permutation_test(labels, noise, 2000, 9).p_value > 0.001);

  CHECK(format_significance(0.0123) == "p = 0.0123");
  CHECK_THROWS_AS(permutation_test({1}, {1, 2}, 10, 1), Error);
  CHECK_THROWS_AS(permutation_test({}, {}, 10, 1), Error);
}
