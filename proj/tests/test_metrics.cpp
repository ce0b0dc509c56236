#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "al/errors.hpp"
#include "al/metrics.hpp"

using namespace al;

namespace {

BudgetCurve curve(std::initializer_list<std::pair<std::size_t, double>> pts) {
  BudgetCurve c;
  for (const auto& [n, acc] : pts) c.points.push_back({n, acc});
  return c;
}

BudgetCurve random_curve(std::mt19937_64& rng, std::size_t n_points) {
  std::uniform_int_distribution<std::size_t> step(1, 50);
  std::uniform_real_distribution<double> acc(0.0, 1.0);
  BudgetCurve c;
  std::size_t labeled = step(rng);
  for (std::size_t i = 0; i < n_points; ++i) {
    c.points.push_back({labeled, acc(rng)});
    labeled += step(rng);
  }
  return c;
}

/// Boost reference for the two-sided Student t tail.
double boost_two_sided(double t, double df) {
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

const LeagueEntry& find(const WinTieLossTable& t, const std::string& method) {
  for (const auto& e : t.entries) {
    if (e.method == method) return e;
  }
  throw std::runtime_error("no method " + method);
}

}  // namespace

TEST_CASE("aubc of a constant curve is the constant") {
  CHECK(aubc(curve({{10, 0.8}, {20, 0.8}, {40, 0.8}})) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("aubc of a linear ramp is its midpoint") {
  CHECK(aubc(curve({{0, 0.0}, {100, 1.0}})) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(aubc(curve({{0, 0.5}, {50, 0.7}, {100, 0.9}})) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("aubc handles uneven spacing by trapezoids") {
  // (10 * 0.55 + 30 * 0.75) / 40
  CHECK(aubc(curve({{0, 0.5}, {10, 0.6}, {40, 0.9}})) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("single point curve returns its accuracy") {
  CHECK(aubc(curve({{20, 0.42}})) == 0.42);
  CHECK(aubc(curve({{20, 0.42}}), false) == 0.42);
}

TEST_CASE("dropping round zero") {
  const auto c = curve({{0, 0.1}, {50, 0.7}, {100, 0.9}});
  CHECK(aubc(c, false) == doctest::Approx(0.8).epsilon(1e-12));
  // Two points keep both even without round zero.
  const auto two = curve({{0, 0.1}, {50, 0.7}});
  CHECK(aubc(two, false) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("non-monotone labeled counts are rejected") {
  CHECK_THROWS_AS(aubc(curve({{0, 0.5}, {50, 0.6}, {50, 0.7}})), InvalidInput);
  CHECK_THROWS_AS(aubc(curve({{10, 0.5}, {5, 0.6}})), InvalidInput);
  CHECK_THROWS_AS(aubc(BudgetCurve{}), InvalidInput);
  CHECK_THROWS_AS(final_accuracy(BudgetCurve{}), InvalidInput);
}

TEST_CASE("aubc lies between the min and max accuracy") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_curve(rng, 1 + trial % 12);
    double lo = 1.0, hi = 0.0;
    for (const auto& p : c.points) {
      lo = std::min(lo, p.accuracy);
      hi = std::max(hi, p.accuracy);
    }
    const double v = aubc(c);
    CHECK(v >= lo - 1e-12);
    CHECK(v <= hi + 1e-12);
  }
}

TEST_CASE("aubc is affine in accuracy and invariant to shifting the budget axis") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = random_curve(rng, 2 + trial % 9);
    BudgetCurve scaled = c, shifted = c;
    for (auto& p : scaled.points) p.accuracy = 0.5 * p.accuracy + 0.25;
    for (auto& p : shifted.points) p.labeled += 1000;
    CHECK(aubc(scaled) == doctest::Approx(0.5 * aubc(c) + 0.25).epsilon(1e-12));
    CHECK(aubc(shifted) == doctest::Approx(aubc(c)).epsilon(1e-12));
  }
}

TEST_CASE("final accuracy is the last point") {
  CHECK(final_accuracy(curve({{0, 0.1}, {10, 0.3}, {20, 0.25}})) == 0.25);
}

TEST_CASE("summarize_trials reports population std") {
  const std::vector<BudgetCurve> curves{curve({{0, 0.5}, {10, 0.5}}), curve({{0, 0.7}, {10, 0.7}})};
  const auto s = summarize_trials(curves);
  CHECK(s.mean_aubc == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(s.std_aubc == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(s.mean_final_accuracy == doctest::Approx(0.6).epsilon(1e-12));

  const std::vector<BudgetCurve> mismatched{curve({{0, 0.5}, {10, 0.5}}), curve({{0, 0.7}, {20, 0.7}})};
  CHECK_THROWS_AS(summarize_trials(mismatched), InvalidInput);
  CHECK_THROWS_AS(summarize_trials(std::vector<BudgetCurve>{}), InvalidInput);
}

TEST_CASE("grouped accuracy") {
  const std::vector<int> pred{0, 1, 1, 0, 1, 1};
  const std::vector<int> label{0, 1, 0, 0, 0, 1};
  const std::vector<int> group{1, 1, 2, 2, 3, 3};
  const auto g = grouped_accuracy(pred, label, group, std::set<int>{1, 3});
  CHECK(g.per_group.at(1) == 1.0);
  CHECK(g.per_group.at(2) == 0.5);
  CHECK(g.per_group.at(3) == 0.5);
  CHECK(g.worst == 0.5);
  REQUIRE(g.subset.has_value());
  CHECK(*g.subset == doctest::Approx(0.75));

  // A declared group without samples is skipped, not counted as zero.
  const auto declared = grouped_accuracy(pred, label, group, {}, std::set<int>{1, 2, 3, 4});
  CHECK(declared.worst == 0.5);
  CHECK_FALSE(declared.per_group.contains(4));

  CHECK_THROWS_AS(grouped_accuracy(pred, label, std::vector<int>{1}), InvalidInput);
}

TEST_CASE("worst group accuracy never exceeds overall accuracy") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> cls(0, 2), grp(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> pred(40), label(40), group(40);
    int correct = 0;
    for (int i = 0; i < 40; ++i) {
      pred[i] = cls(rng);
      label[i] = cls(rng);
      group[i] = grp(rng);
      correct += pred[i] == label[i];
    }
    const auto g = grouped_accuracy(pred, label, group);
    CHECK(g.worst <= correct / 40.0 + 1e-12);
  }
}

TEST_CASE("paired t-test on a known sample") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  const std::vector<double> b{0.0, 0.0, 0.0};
  const auto r = paired_t_test(a, b);
  CHECK(r.t == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.0742).epsilon(1e-3));
  CHECK(r.p == doctest::Approx(boost_two_sided(r.t, 2.0)).epsilon(1e-10));
}

TEST_CASE("paired t-test sentinels") {
  const std::vector<double> a{0.5, 0.6, 0.7};
  auto same = paired_t_test(a, a);
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);
  const std::vector<double> shifted{0.6, 0.7, 0.8};
  const auto up = paired_t_test(shifted, a);
  // Differences are all 0.1 up to rounding; only exact zero variance is a sentinel.
  CHECK(up.p < 1e-6);
  const std::vector<double> c{1.0, 2.0}, d{0.0, 1.0};
  const auto exact = paired_t_test(c, d);
  CHECK(std::isinf(exact.t));
  CHECK(exact.t > 0.0);
  CHECK(exact.p == 0.0);
  CHECK(paired_t_test(d, c).t < 0.0);
  CHECK_THROWS_AS(paired_t_test(std::vector<double>{1.0}, std::vector<double>{1.0}), InvalidInput);
  CHECK_THROWS_AS(paired_t_test(a, c), InvalidInput);
}

TEST_CASE("paired t-test is antisymmetric and matches the reference tail") {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 30);
    std::vector<double> a(n), b(n);
    const double shift = 0.1 * (trial % 7);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = noise(rng) + shift;
      b[i] = noise(rng);
    }
    const auto ab = paired_t_test(a, b);
    const auto ba = paired_t_test(b, a);
    CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-12));
    CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-12));
    CHECK(ab.p >= 0.0);
    CHECK(ab.p <= 1.0);
    const double ref = boost_two_sided(ab.t, static_cast<double>(n - 1));
    CHECK(std::abs(ab.p - ref) <= 1e-10 * std::max(1.0, ref));
  }
}

TEST_CASE("incomplete beta matches the reference over a grid") {
  for (double df : {1.0, 2.0, 3.5, 9.0, 29.0, 200.0}) {
    for (double t : {0.0, 0.01, 0.5, 1.0, 2.0, 4.0, 12.0, 60.0}) {
      const double ref = boost_two_sided(t, df);
      CHECK(std::abs(student_t_two_sided(t, df) - ref) <= 1e-11 * std::max(1e-3, ref));
    }
  }
  CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  // I_x(1, 1) = x
  CHECK(incomplete_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-13));
  CHECK_THROWS_AS(incomplete_beta(0.0, 1.0, 0.5), InvalidInput);
}

TEST_CASE("win-tie-loss respects the margin") {
  AubcTable table{{"d1", {{"A", 0.700}, {"B", 0.697}}}};
  auto wtl = win_tie_loss(table, 0.005);
  CHECK(find(wtl, "A").tie == 1);
  CHECK(find(wtl, "B").tie == 1);
  table["d1"]["B"] = 0.690;
  wtl = win_tie_loss(table, 0.005);
  CHECK(find(wtl, "A").win == 1);
  CHECK(find(wtl, "B").loss == 1);
  CHECK(find(wtl, "A").score == 2);
  CHECK(find(wtl, "A").rank == 1);
  CHECK_THROWS_AS(win_tie_loss(table, -0.1), InvalidInput);
}

TEST_CASE("win-tie-loss rejects datasets missing a method") {
  const AubcTable table{{"d1", {{"A", 0.7}, {"B", 0.6}}}, {"d2", {{"A", 0.7}}}};
  CHECK_THROWS_AS(win_tie_loss(table), InvalidInput);
}

TEST_CASE("win-tie-loss agrees with a brute-force pairwise count") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.5, 0.55);
  for (int trial = 0; trial < 30; ++trial) {
    const int methods = 2 + trial % 6;
    const int datasets = 1 + trial % 4;
    AubcTable table;
    std::vector<std::vector<double>> v(datasets, std::vector<double>(methods));
    for (int d = 0; d < datasets; ++d) {
      for (int m = 0; m < methods; ++m) {
        v[d][m] = u(rng);
        table["d" + std::to_string(d)]["m" + std::to_string(m)] = v[d][m];
      }
    }
    const auto wtl = win_tie_loss(table, 0.005);
    int total_wins = 0, total_losses = 0;
    for (int m = 0; m < methods; ++m) {
      int win = 0, tie = 0, loss = 0;
      for (int d = 0; d < datasets; ++d) {
        for (int o = 0; o < methods; ++o) {
          if (o == m) continue;
          const double diff = v[d][m] - v[d][o];
          if (diff > 0.005) {
            ++win;
          } else if (diff < -0.005) {
            ++loss;
          } else {
            ++tie;
          }
        }
      }
      const auto& e = find(wtl, "m" + std::to_string(m));
      CHECK(e.win == win);
      CHECK(e.tie == tie);
      CHECK(e.loss == loss);
      CHECK(e.win + e.tie + e.loss == (methods - 1) * datasets);
      total_wins += e.win;
      total_losses += e.loss;
    }
    CHECK(total_wins == total_losses);
    for (std::size_t i = 1; i < wtl.entries.size(); ++i) {
      CHECK(wtl.entries[i - 1].score >= wtl.entries[i].score);
      CHECK(wtl.entries[i].rank == static_cast<int>(i + 1));
    }
  }
}

TEST_CASE("league over the published standard-benchmark counts") {
  // Counts from the eight-dataset league: 18 methods, 17 opponents per dataset.
  const std::vector<std::tuple<std::string, int, int, int>> counts{
      {"WAAL", 103, 2, 31},       {"CEAL", 74, 35, 27},     {"LeastConfD", 63, 59, 14}, {"MarginD", 61, 55, 20},
      {"Margin", 60, 57, 19},     {"BALD", 56, 59, 21},     {"EntropyD", 54, 55, 27},   {"VarRatio", 52, 58, 26},
      {"LeastConf", 51, 53, 32},  {"BADGE", 46, 49, 41},    {"MeanSTD", 44, 50, 42},    {"Entropy", 40, 54, 42},
      {"LPL", 57, 4, 75},         {"KCenter", 41, 34, 61},  {"Random", 26, 23, 87},     {"VAAL", 20, 15, 101},
      {"KMeans", 18, 9, 109},     {"AdvBIM", 10, 25, 101},
  };
  std::vector<LeagueEntry> entries;
  for (const auto& [name, w, t, l] : counts) {
    CHECK(w + t + l == 17 * 8);
    entries.push_back({name, w, t, l});
  }
  const auto league = rank_league(entries);
  CHECK(league.entries[0].method == "WAAL");
  CHECK(league.entries[0].score == 208);
  CHECK(find(league, "CEAL").score == 183);
  CHECK(find(league, "WAAL").rank < find(league, "CEAL").rank);
  // Score 2 win + tie puts LeastConfD (185) just ahead of CEAL.
  CHECK(find(league, "LeastConfD").rank == 2);
  CHECK(find(league, "CEAL").rank == 3);
  // AdvBIM and KMeans tie at 45; names break the tie.
  CHECK(find(league, "AdvBIM").rank == 17);
  CHECK(find(league, "KMeans").rank == 18);
}

TEST_CASE("aubc table round trips through csv") {
  const AubcTable table{{"gauss", {{"entropy", 0.1 + 0.2}, {"random", 0.71}}}, {"xor", {{"entropy", 0.9}, {"random", 0.8}}}};
  const auto path = std::filesystem::temp_directory_path() / "al_metrics_table.csv";
  {
    std::ofstream out(path);
    out << format_aubc_table(table);
  }
  CHECK(read_aubc_table(path) == table);
  {
    std::ofstream out(path);
    out << "dataset,method,aubc\ngauss,entropy,abc\n";
  }
  CHECK_THROWS_AS(read_aubc_table(path), ParseError);
  {
    std::ofstream out(path);
    out << "dataset,aubc\n";
  }
  CHECK_THROWS_AS(read_aubc_table(path), SchemaError);
  std::filesystem::remove(path);
}

TEST_CASE("league csv layout") {
  const auto league = rank_league({{"B", 1, 0, 1}, {"A", 1, 0, 1}});
  CHECK(format_league_csv(league) == "method,win,tie,loss,score,rank\nA,1,0,1,2,1\nB,1,0,1,2,2\n");
}
