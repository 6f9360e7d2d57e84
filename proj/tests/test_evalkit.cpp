#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace bt_test;

TEST(CompareGraphs, OneOfTwoEdgesFound)
{
    EdgeSet truth{{"La;->a:()V", "La;->b:()V"}, {"La;->b:()V", "La;->c:()V"}};
    EdgeSet pred{{"La;->a:()V", "La;->b:()V"}};
    auto m = compare_graphs(pred, truth);
    EXPECT_EQ(m.tp, 1u);
    EXPECT_EQ(m.fp, 0u);
    EXPECT_EQ(m.fn, 1u);
    EXPECT_DOUBLE_EQ(m.precision, 1.0);
    EXPECT_DOUBLE_EQ(m.recall, 0.5);
    EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-12);
    // (1.25 * 0.5) / (0.25 + 0.5)
    EXPECT_NEAR(m.f_beta, 0.625 / 0.75, 1e-12);
    EXPECT_FALSE(m.degenerate);
}

TEST(CompareGraphs, OneEachWay)
{
    auto m = metrics_from_counts(1, 1, 1, 0.5);
    EXPECT_DOUBLE_EQ(m.precision, 0.5);
    EXPECT_DOUBLE_EQ(m.recall, 0.5);
    EXPECT_DOUBLE_EQ(m.f1, 0.5);
    EXPECT_DOUBLE_EQ(m.f_beta, 0.5);
}

TEST(LeakScore, PublishedTotals)
{
    auto s = score_leak_totals(78, 5, 26);
    EXPECT_NEAR(s.precision * 100, 93.98, 0.005);
    EXPECT_NEAR(s.recall * 100, 75.00, 0.005);
    EXPECT_NEAR(s.f1 * 100, 83.42, 0.005);
}

TEST(FBeta, Properties)
{
    EXPECT_DOUBLE_EQ(f_beta(0, 0, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(f_beta(0.7, 0.7, 0.5), 0.7);
    EXPECT_DOUBLE_EQ(f_beta(0.6, 0.9, 1.0), f1_score(0.6, 0.9));
    // Small beta leans toward precision, large beta toward recall.
    EXPECT_GT(f_beta(0.9, 0.3, 0.5), f1_score(0.9, 0.3));
    EXPECT_LT(f_beta(0.9, 0.3, 2.0), f1_score(0.9, 0.3));
    EXPECT_THROW(metrics_from_counts(1, 0, 0, 0.0), OutOfRange);
    EXPECT_THROW(metrics_from_rates(1, 1, -1), OutOfRange);

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        double p = u(rng), r = u(rng), b = 0.1 + 3 * u(rng);
        double f = f_beta(p, r, b);
        EXPECT_GE(f, std::min(p, r) - 1e-12);
        EXPECT_LE(f, std::max(p, r) + 1e-12);
        EXPECT_DOUBLE_EQ(f_beta(p, r, b), f_beta(p, r, b));
    }
}

TEST(CompareGraphs, DegenerateConventions)
{
    auto both_empty = compare_graphs({}, {});
    EXPECT_TRUE(both_empty.degenerate);
    EXPECT_DOUBLE_EQ(both_empty.precision, 1.0);
    EXPECT_DOUBLE_EQ(both_empty.recall, 1.0);
    EXPECT_DOUBLE_EQ(both_empty.f1, 1.0);

    auto missed = compare_graphs({}, {{"La;->a:()V", "La;->b:()V"}});
    EXPECT_TRUE(missed.degenerate);
    EXPECT_DOUBLE_EQ(missed.precision, 0.0);
    EXPECT_DOUBLE_EQ(missed.recall, 0.0);
    EXPECT_DOUBLE_EQ(missed.f1, 0.0);

    auto spurious = compare_graphs({{"La;->a:()V", "La;->b:()V"}}, {});
    EXPECT_DOUBLE_EQ(spurious.precision, 0.0);
    EXPECT_DOUBLE_EQ(spurious.recall, 0.0);
}

TEST(GroundTruth, ParseAndNormalize)
{
    auto e = parse_ground_truth("# header\n\nLa/B;->c()V\tLa/B;->d(I)V\n  La/B;->d:(I)V\tLa/E;->f:()V  \n");
    EXPECT_EQ(e, (EdgeSet{{"La/B;->c:()V", "La/B;->d:(I)V"}, {"La/B;->d:(I)V", "La/E;->f:()V"}}));
    EXPECT_TRUE(parse_ground_truth("").empty());

    auto err = [](const char* text) {
        try {
            parse_ground_truth(text, "t.tsv");
        }
        catch (const BadConfig& ex) {
            return std::string(ex.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(err("La/B;->c()V La/B;->d()V\n").find("t.tsv:1"), std::string::npos);
    EXPECT_NE(err("#\nLa/B;->c()V\tLa/B;->d()V\tLa/B;->e()V\n").find("t.tsv:2"), std::string::npos);
    EXPECT_NE(err("La/B;->c()V\tgarbage\n").find("malformed"), std::string::npos);
    EXPECT_THROW(load_ground_truth(fixtures() / "truth" / "missing.tsv"), BadConfig);
}

TEST(GroundTruth, ChainFixtureMatchesTaintGraph)
{
    auto truth = load_ground_truth(fixtures() / "truth" / "chain_app.tsv");
    EXPECT_EQ(truth.size(), 2u);
    auto idx = load_app("chain_app");
    TaintBackend backend;
    auto m = compare_graphs(edge_set(build_graph(only_root(idx), idx, backend)), truth);
    EXPECT_EQ(m.tp, 2u);
    EXPECT_DOUBLE_EQ(m.f_beta, 1.0);
}

TEST(LeakMatching, MultisetCases)
{
    auto perfect = match_case("c", 2, {"S1", "S2"}, {"S2", "S1"});
    EXPECT_EQ(perfect.tp, 2u);
    EXPECT_EQ(perfect.fp, 0u);
    EXPECT_EQ(perfect.fn, 0u);

    auto miss = match_case("c", 2, {"S1", "S2"}, {"S1"});
    EXPECT_EQ(miss.tp, 1u);
    EXPECT_EQ(miss.fn, 1u);

    auto extra = match_case("c", 1, {"S1"}, {"S1", "S1", "S3"});
    EXPECT_EQ(extra.tp, 1u);
    EXPECT_EQ(extra.fp, 2u);
    EXPECT_EQ(extra.fn, 0u);

    auto clean = match_case("c", 0, {}, {});
    EXPECT_EQ(clean.tp + clean.fp + clean.fn, 0u);

    auto total = score_leaks({perfect, miss, extra, clean});
    EXPECT_EQ(total.tp, 4u);
    EXPECT_EQ(total.fp, 2u);
    EXPECT_EQ(total.fn, 1u);
    EXPECT_TRUE(score_leaks({clean}).empty);
}
