#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <gtest/gtest.h>
#include <json.hpp>

#include "dprag/accountant.hpp"
#include "dprag/dpicl.hpp"
#include "dprag/error.hpp"
#include "oracles.hpp"

namespace dprag {
namespace {

using Rational = boost::multiprecision::cpp_rational;

TEST(Accountant, FillsBudgetExactlyThenRejects) {
  Accountant a(5.0, 1e-3);
  a.spend("query/retrieval", 0.5);
  for (int i = 0; i < 9; ++i) a.spend("query/tokens", 0.5);
  EXPECT_EQ(a.spent(), 5.0);
  EXPECT_THROW(a.spend("query/tokens", 0.5), BudgetExhausted);
  EXPECT_EQ(a.spent(), 5.0);
  EXPECT_EQ(a.report().events.size(), 10u);
}

TEST(Accountant, NonPositiveSpendIsRejected) {
  Accountant a(5.0, 1e-3);
  EXPECT_THROW(a.spend("x", -0.1), Error);
  EXPECT_THROW(a.spend("x", 0.0), Error);
  EXPECT_THROW(a.spend("x", std::nan("")), Error);
  EXPECT_EQ(a.spent(), 0.0);
}

TEST(Accountant, RejectionLeavesStateUnchanged) {
  Accountant a(1.0, 0.0);
  a.spend("a", 0.75);
  try {
    a.spend("b", 0.5);
    FAIL();
  } catch (const BudgetExhausted& e) {
    EXPECT_DOUBLE_EQ(e.requested(), 0.5);
    EXPECT_DOUBLE_EQ(e.spent(), 0.75);
    EXPECT_DOUBLE_EQ(e.shortfall(), 0.25);
  }
  EXPECT_EQ(a.report().events.size(), 1u);
  EXPECT_FALSE(a.try_spend("b", 0.5));
  EXPECT_TRUE(a.try_spend("b", 0.25));
  EXPECT_EQ(a.spent(), 1.0);
}

TEST(Accountant, MicroSpendsMatchRationalOracle) {
  Accountant a(1.0 + 1e-9, 0.0);
  Rational exact = 0;
  const double eps = 1e-6;
  for (int i = 0; i < 1000000; ++i) {
    a.spend("micro", eps);
    exact += Rational(eps);
  }
  EXPECT_NEAR(a.spent(), static_cast<double>(exact), 1e-12);
}

TEST(Accountant, CompensatedSumBeatsNaiveOnMixedMagnitudes) {
  Accountant a(std::numeric_limits<double>::infinity(), 0.0);
  Rational exact = 0;
  double naive = 0.0;
  RngState rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double e = i % 1000 == 0 ? 1e3 : 1e-7 * (1.0 + rng.uniform());
    a.spend("x", e);
    naive += e;
    exact += Rational(e);
  }
  const double truth = static_cast<double>(exact);
  EXPECT_LE(std::abs(a.spent() - truth), std::abs(naive - truth) + 1e-15);
  EXPECT_NEAR(a.spent(), truth, 1e-12 * truth);
}

TEST(Accountant, RefundOfUnusedPrecharge) {
  Accountant a(10.0, 1e-3);
  a.spend("query/retrieval", 0.5);
  a.spend("query/tokens", 10 * 0.5);
  a.refund("query/tokens", 6 * 0.5);
  EXPECT_NEAR(a.spent(), 0.5 + 4 * 0.5, 1e-12);
  const auto r = a.report();
  ASSERT_EQ(r.events.size(), 2u);
  EXPECT_NEAR(r.events[1].epsilon, 2.0, 1e-12);
}

TEST(Accountant, RefundErrors) {
  Accountant a(10.0, 1e-3);
  a.spend("query/tokens", 1.0);
  EXPECT_THROW(a.refund("query/tokens", 1.5), Error);
  EXPECT_THROW(a.refund("other", 0.5), Error);
  try {
    a.refund("query/tokens", 2.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoMatchingCharge);
  }
  const double before = a.spent();
  a.refund("query/tokens", 0.0);
  a.refund("never-charged", 0.0);
  EXPECT_EQ(a.spent(), before);
  EXPECT_THROW(a.refund("query/tokens", -1.0), Error);
}

TEST(Accountant, FreshReport) {
  Accountant a(5.0, 1e-3);
  const auto r = a.report();
  EXPECT_EQ(r.epsilon_spent, 0.0);
  EXPECT_EQ(r.delta, 1e-3);
  EXPECT_TRUE(r.events.empty());
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j.at("events").size(), 0u);
}

TEST(Accountant, ReportShapeOfDefaultQuery) {
  Accountant a(5.0, 1e-3);
  a.spend("query/retrieval", 0.5);
  for (int i = 0; i < 9; ++i) a.spend("query/tokens", 0.5);
  const auto j = nlohmann::json::parse(a.report().to_json());
  EXPECT_EQ(j.at("epsilon_spent").get<double>(), 5.0);
  EXPECT_EQ(j.at("delta").get<double>(), 1e-3);
  EXPECT_EQ(j.at("events").size(), 10u);
  EXPECT_EQ(j.at("events")[0].at("label"), "query/retrieval");
}

TEST(Accountant, SpentIsMonotoneAndBounded) {
  RngState rng(9);
  Accountant a(3.0, 0.0);
  double last = 0.0;
  for (int i = 0; i < 5000; ++i) {
    const double e = rng.uniform() * 0.01 + 1e-9;
    if (rng.uniform() < 0.7) {
      a.try_spend("x", e);
      EXPECT_GE(a.spent(), last);
    } else {
      try {
        a.refund("x", e / 2);
        EXPECT_LE(a.spent(), last);
      } catch (const Error&) {
        EXPECT_EQ(a.spent(), last);
      }
    }
    EXPECT_LE(a.spent(), 3.0);
    last = a.spent();
  }
}

TEST(Accountant, ConcurrentSpendersNeverOverrun) {
  Accountant a(1.0, 0.0);
  std::vector<std::thread> threads;
  std::atomic<int> accepted{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 1000; ++i) {
        if (a.try_spend("t", 0.001)) ++accepted;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_LE(a.spent(), 1.0);
  EXPECT_NEAR(a.spent(), accepted.load() * 0.001, 1e-12);
  EXPECT_GE(accepted.load(), 999);
}

class LedgerFile : public ::testing::Test {
 protected:
  void SetUp() override {
    path_ = std::filesystem::temp_directory_path() /
            ("dprag_ledger_" + std::to_string(::getpid()) + ".ndjson");
    std::filesystem::remove(path_);
  }
  void TearDown() override { std::filesystem::remove(path_); }
  std::filesystem::path path_;
};

TEST_F(LedgerFile, LabelsAndTotalsRoundTrip) {
  {
    Accountant a(5.0, 1e-3);
    a.attach_ledger(path_);
    a.spend("query/retrieval", 0.5);
    a.spend("query/tokens \"quoted\"", 4.5);
    a.refund("query/tokens \"quoted\"", 1.5);
  }
  std::ifstream in(path_);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("ts"));
    EXPECT_TRUE(j.contains("label"));
    EXPECT_TRUE(j.contains("epsilon"));
    ++lines;
  }
  EXPECT_EQ(lines, 3);

  Accountant b(5.0, 1e-3);
  b.restore(path_);
  EXPECT_NEAR(b.spent(), 3.5, 1e-12);
  const auto r = b.report();
  ASSERT_EQ(r.events.size(), 2u);
  EXPECT_EQ(r.events[1].label, "query/tokens \"quoted\"");
  EXPECT_THROW(b.spend("more", 2.0), BudgetExhausted);
}

TEST(Ledger, GarbageIsAFormatError) {
  std::istringstream in("{\"label\":\"x\"}\n");
  Accountant a(5.0, 0.0);
  EXPECT_THROW(a.restore(in), Error);
}

// Composition of the threshold draw and one token step, checked on the
// joint density of (tau, token) for every neighbouring pair of small
// corpora: the worst log-ratio must stay within eps_retrieval + eps_token.
TEST(Composition, JointLogRatioWithinSumOfEpsilons) {
  RngState rng(2024);
  const double c = 0.2;
  const double theta = 0.5;
  double worst_excess = -1e9;
  for (int round = 0; round < 60; ++round) {
    const std::size_t v = 2 + static_cast<std::size_t>(rng.uniform() * 3);   // <= 4
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 3);   // <= 3
    const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * n);
    const double e1 = 0.1 + 2.0 * rng.uniform();
    const double e2 = 0.1 + 2.0 * rng.uniform();
    std::vector<double> scores(n);
    std::vector<TransformedScores> docs;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = std::round(rng.uniform() * 19.0) / 19.0;
      docs.push_back(clipped_scores(
          TokenDistribution::from_log_probs(oracle::random_log_probs(rng, v)),
          1.0, c));
    }
    const auto pub =
        TokenDistribution::from_log_probs(oracle::random_log_probs(rng, v));

    auto joint = [&](const std::vector<std::size_t>& members, double tau,
                     const std::vector<oracle::DensityPiece>& density) {
      std::vector<TransformedScores> selected;
      for (std::size_t m : members) {
        if (scores[m] >= tau) selected.push_back(docs[m]);
      }
      const auto lp = token_log_probabilities(
          icl_utility(selected, pub, theta), e2, c);
      std::vector<long double> out(v);
      for (std::size_t t = 0; t < v; ++t) {
        out[t] = oracle::density_at(density, tau) + lp[t];
      }
      return out;
    };

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::vector<double> s_all(scores);
    const auto d_all = oracle::threshold_density(s_all, oracle::topk_utility(s_all, k), e1);
    for (std::size_t drop = 0; drop < n && n >= 2; ++drop) {
      std::vector<std::size_t> rest;
      std::vector<double> s_rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (i != drop) {
          rest.push_back(i);
          s_rest.push_back(scores[i]);
        }
      }
      const auto d_rest =
          oracle::threshold_density(s_rest, oracle::topk_utility(s_rest, k), e1);
      std::vector<double> cuts = {0.0, 1.0};
      cuts.insert(cuts.end(), scores.begin(), scores.end());
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double tau = 0.5 * (cuts[i] + cuts[i + 1]);
        const auto a = joint(all, tau, d_all);
        const auto b = joint(rest, tau, d_rest);
        for (std::size_t t = 0; t < v; ++t) {
          const double ratio = static_cast<double>(std::abs(a[t] - b[t]));
          worst_excess = std::max(worst_excess, ratio - (e1 + e2));
          EXPECT_LE(ratio, (e1 + e2) * (1 + 1e-9))
              << "round " << round << " tau " << tau << " token " << t;
        }
      }
    }
  }
  EXPECT_LE(worst_excess, 1e-9);
}

}  // namespace
}  // namespace dprag
