#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dimafx/attribution/explain.hpp"
#include "dimafx/attribution/shapley.hpp"
#include "fixtures.hpp"

using namespace dimafx;
using namespace dimafx::attribution;
using fixture::random_input;
using fixture::random_model;
using fixture::tiny_config;

namespace {

double sum(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return s;
}

// Smooth game with pairwise interactions and a nonlinearity.
ValueFn random_game(Rng& rng, std::size_t f)
{
    std::vector<double> a(f);
    std::vector<std::vector<double>> b(f, std::vector<double>(f));
    for (std::size_t i = 0; i < f; ++i) {
        a[i] = rng.normal();
        for (std::size_t j = 0; j < f; ++j)
            b[i][j] = 0.5 * rng.normal();
    }
    return [a, b, f](const std::vector<bool>& s) {
        double lin = 0.0;
        for (std::size_t i = 0; i < f; ++i) {
            if (!s[i])
                continue;
            lin += a[i];
            for (std::size_t j = i + 1; j < f; ++j)
                if (s[j])
                    lin += b[i][j];
        }
        return std::tanh(0.5 * lin) + 0.1 * lin;
    };
}

std::vector<model::SampleInput> inputs(const model::ModelConfig& c, Rng& rng, int n)
{
    std::vector<model::SampleInput> v;
    for (int i = 0; i < n; ++i)
        v.push_back(random_input(c, rng));
    return v;
}

void keep_only_risk_block(model::ModelParams& m, int block)
{
    const Index dz = m.config.d_z;
    Matrix& w = m.params.risk_head.weight;
    for (int b = 0; b < 4; ++b)
        if (b != block)
            w.middleRows(b * dz, dz).setZero();
}

} // namespace

TEST(ShapleyExact, GloveGame)
{
    // Player 0 holds a left glove, players 1 and 2 right gloves.
    const auto v = [](const std::vector<bool>& s) { return s[0] && (s[1] || s[2]) ? 1.0 : 0.0; };
    const auto r = shapley_exact(v, 3);
    EXPECT_NEAR(r.shap[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(r.shap[1], 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(r.shap[2], 1.0 / 6.0, 1e-15);
    EXPECT_EQ(r.permutations, 0);
}

TEST(ShapleyExact, AdditivitySymmetryNullPlayer)
{
    Rng rng(1);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t f = 2 + rng.index(8);
        const ValueFn g = random_game(rng, f);
        const auto r = shapley_exact(g, f);
        EXPECT_NEAR(sum(r.shap) + r.base_value, r.prediction, 1e-12);

        // Player f is a null player; players 0 and 1 become interchangeable.
        const ValueFn sym = [&](const std::vector<bool>& s) {
            std::vector<bool> t(s.begin(), s.begin() + static_cast<long>(f));
            const bool both = s[0] && s[1];
            const bool either = s[0] || s[1];
            t[0] = either;
            t[1] = both;
            return g(t);
        };
        const auto q = shapley_exact(sym, f + 1);
        EXPECT_NEAR(q.shap[0], q.shap[1], 1e-12);
        EXPECT_NEAR(q.shap[f], 0.0, 1e-14);
    }
}

TEST(ShapleyExact, TooManyFeaturesThrows)
{
    const auto v = [](const std::vector<bool>&) { return 0.0; };
    EXPECT_NO_THROW(shapley_exact(v, kMaxExactFeatures));
    EXPECT_THROW(shapley_exact(v, kMaxExactFeatures + 1), ConfigError);
}

TEST(ShapleySampling, AgreesWithExact)
{
    Rng rng(2);
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t f = 4 + rng.index(7);
        const ValueFn g = random_game(rng, f);
        const auto exact = shapley_exact(g, f);
        const auto approx = shapley_sampling(g, f, 2000, 100 + rep);
        const auto [lo, hi] = std::minmax_element(exact.shap.begin(), exact.shap.end());
        const double range = std::max(*hi - *lo, 1e-12);
        for (std::size_t i = 0; i < f; ++i)
            EXPECT_LE(std::abs(approx.shap[i] - exact.shap[i]), 0.02 * range) << "feature " << i;
        EXPECT_NEAR(sum(approx.shap) + approx.base_value, approx.prediction, 1e-12);
        EXPECT_EQ(approx.permutations, 2000);
    }
}

TEST(ShapleySampling, AdditiveGameIsExact)
{
    const std::vector<double> a{0.5, -1.25, 3.0, 0.0, 2.0};
    const auto v = [&](const std::vector<bool>& s) {
        double t = 0.7;
        for (std::size_t i = 0; i < a.size(); ++i)
            t += s[i] ? a[i] : 0.0;
        return t;
    };
    const auto r = shapley_sampling(v, a.size(), 3, 9);
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_NEAR(r.shap[i], a[i], 1e-12);
    EXPECT_NEAR(r.residual, 0.0, 1e-12);
    EXPECT_EQ(r.base_value, 0.7);
}

TEST(ShapleySampling, DeterministicPerSeed)
{
    Rng rng(3);
    const ValueFn g = random_game(rng, 9);
    const auto a = shapley_sampling(g, 9, 20, 5);
    const auto b = shapley_sampling(g, 9, 20, 5);
    const auto c = shapley_sampling(g, 9, 20, 6);
    EXPECT_EQ(a.shap, b.shap);
    EXPECT_EQ(a.residual, b.residual);
    EXPECT_NE(a.shap, c.shap);
}

TEST(ShapleySampling, ResidualShrinksWithMorePermutations)
{
    Rng rng(4);
    const ValueFn g = random_game(rng, 12);
    std::vector<double> medians;
    for (int m : {100, 400, 1600}) {
        std::vector<double> res;
        for (std::uint64_t s = 0; s < 20; ++s)
            res.push_back(shapley_sampling(g, 12, m, s).residual);
        std::nth_element(res.begin(), res.begin() + 10, res.end());
        medians.push_back(res[10]);
    }
    EXPECT_LT(medians[1], medians[0]);
    EXPECT_LT(medians[2], medians[1]);
}

TEST(ShapleySampling, NormalizeAbs)
{
    const auto n = normalize_abs({1.0, -3.0, 0.0});
    EXPECT_NEAR(n[0], 0.25, 1e-15);
    EXPECT_NEAR(n[1], 0.75, 1e-15);
    EXPECT_EQ(n[2], 0.0);
    EXPECT_EQ(normalize_abs({0.0, 0.0}), (std::vector<double>{0.0, 0.0}));
}

TEST(Players, CountsAndNames)
{
    const auto c = tiny_config(3, {4, 2});
    EXPECT_EQ(feature_count(c, Mode::unimodal), 5u);
    EXPECT_EQ(feature_count(c, Mode::multimodal), 10u);
    EXPECT_EQ(feature_names(c, Mode::unimodal), (std::vector<std::string>{"W0", "W1", "W2", "R0", "R1"}));
    const auto mm = feature_names(c, Mode::multimodal);
    EXPECT_EQ(mm.front(), "W0:specific");
    EXPECT_EQ(mm[4], "R1:specific");
    EXPECT_EQ(mm[5], "W0:shared");
    EXPECT_EQ(mm.back(), "R1:shared");
    EXPECT_EQ(to_string(Mode::multimodal), "multimodal");
}

class Masking : public ::testing::TestWithParam<Mode> {};

TEST_P(Masking, EmptyMaskIsTheForwardPass)
{
    const auto c = tiny_config();
    const auto m = random_model(c, 5);
    Rng rng(5);
    const auto bg = compute_background(m, inputs(c, rng, 6));
    const auto x = random_input(c, rng);
    EXPECT_NEAR(masked_forward(m, x, FeatureMask::none(feature_count(c, GetParam())), bg, GetParam()),
                model::forward(x, m).risk, 1e-12);
}

TEST_P(Masking, FullMaskForgetsTheSample)
{
    const auto c = tiny_config();
    const auto m = random_model(c, 6);
    Rng rng(6);
    const auto bg = compute_background(m, inputs(c, rng, 6));
    const auto all = FeatureMask::all(feature_count(c, GetParam()));
    EXPECT_NEAR(masked_forward(m, random_input(c, rng), all, bg, GetParam()),
                masked_forward(m, random_input(c, rng), all, bg, GetParam()), 1e-12);
}

TEST_P(Masking, MaskedPrototypeIsIgnored)
{
    const auto c = tiny_config();
    const auto m = random_model(c, 7);
    Rng rng(7);
    const auto bg = compute_background(m, inputs(c, rng, 6));
    auto x = random_input(c, rng);
    auto mask = FeatureMask::none(feature_count(c, GetParam()));
    mask.masked[1] = true; // W1 (specific copy in multimodal mode)
    if (GetParam() == Mode::multimodal)
        mask.masked[static_cast<std::size_t>(c.prototypes + c.pathways()) + 1] = true; // W1:shared
    const double before = masked_forward(m, x, mask, bg, GetParam());
    if (GetParam() == Mode::unimodal) {
        x.prototypes.means.row(1).array() += 5.0;
        EXPECT_NEAR(masked_forward(m, x, mask, bg, GetParam()), before, 1e-12);
    } else {
        // Fused rows for W1 are replaced, other rows still see the prototype through attention.
        mask = FeatureMask::all(mask.size());
        const double masked_all = masked_forward(m, x, mask, bg, GetParam());
        x.prototypes.means.row(1).array() += 5.0;
        EXPECT_NEAR(masked_forward(m, x, mask, bg, GetParam()), masked_all, 1e-12);
    }
}

TEST_P(Masking, LocalAccuracy)
{
    const auto c = tiny_config();
    Rng rng(8);
    for (std::uint64_t s = 0; s < 3; ++s) {
        const auto m = random_model(c, 80 + s);
        const auto bg = compute_background(m, inputs(c, rng, 5));
        const auto x = random_input(c, rng);
        const auto r = GetParam() == Mode::unimodal ? unimodal_attribution(m, x, bg, 8, s)
                                                    : multimodal_attribution(m, x, bg, 8, s);
        EXPECT_NEAR(sum(r.shap) + r.base_value, r.prediction, 1e-10);
        EXPECT_NEAR(r.prediction, model::forward(x, m).risk, 1e-12);
        EXPECT_NEAR(r.base_value, masked_forward(m, x, FeatureMask::all(r.shap.size()), bg, GetParam()), 1e-12);
        EXPECT_NEAR(sum(r.normalized), 1.0, 1e-12);
        EXPECT_EQ(r.features, feature_names(c, GetParam()));
    }
}

INSTANTIATE_TEST_SUITE_P(Modes, Masking, ::testing::Values(Mode::unimodal, Mode::multimodal),
                         [](const auto& info) { return to_string(info.param); });

TEST(Unimodal, ZeroRiskHeadGivesZeroAttribution)
{
    const auto c = tiny_config();
    auto m = random_model(c, 9);
    m.params.risk_head.weight.setZero();
    Rng rng(9);
    const auto bg = compute_background(m, inputs(c, rng, 4));
    const auto r = unimodal_attribution(m, random_input(c, rng), bg, 10, 1);
    for (double v : r.shap)
        EXPECT_EQ(v, 0.0);
    EXPECT_EQ(r.prediction, m.params.risk_head.bias(0, 0));
}

TEST(Unimodal, GenomicOnlyHeadLeavesSlidesOut)
{
    const auto c = tiny_config();
    auto m = random_model(c, 10);
    keep_only_risk_block(m, 0); // z_gg attends pathways to pathways
    Rng rng(10);
    const auto bg = compute_background(m, inputs(c, rng, 4));
    const auto r = unimodal_attribution(m, random_input(c, rng), bg, 10, 2);
    for (Index k = 0; k < c.prototypes; ++k)
        EXPECT_LT(std::abs(r.shap[static_cast<std::size_t>(k)]), 1e-6);
    double genomic = 0.0;
    for (std::size_t i = static_cast<std::size_t>(c.prototypes); i < r.shap.size(); ++i)
        genomic += std::abs(r.shap[i]);
    EXPECT_GT(genomic, 1e-6);
}

TEST(Multimodal, SlideSpecificHeadOnlyCreditsSlideSpecificRows)
{
    const auto c = tiny_config();
    auto m = random_model(c, 11);
    keep_only_risk_block(m, 1); // z_hh
    Rng rng(11);
    const auto bg = compute_background(m, inputs(c, rng, 4));
    const auto r = multimodal_attribution(m, random_input(c, rng), bg, 10, 3);
    for (std::size_t j = 0; j < r.shap.size(); ++j) {
        if (j < static_cast<std::size_t>(c.prototypes))
            continue;
        EXPECT_LT(std::abs(r.shap[j]), 1e-6) << r.features[j];
    }
}

TEST(Multimodal, SaturatedPoolingCreditsOneRow)
{
    // Pooling of z_hh puts weight ~1 on the row with the largest first coordinate;
    // background rows are pushed down so they never win.
    const auto c = tiny_config();
    auto m = random_model(c, 12);
    keep_only_risk_block(m, 1);
    m.params.agg_hh.weight.setZero();
    m.params.agg_hh.weight(0, 0) = 1e4;
    Rng rng(12);
    auto bg = compute_background(m, inputs(c, rng, 4));
    const auto x = random_input(c, rng);
    const auto b = model::forward(x, m).bundle;
    bg.zp_hh = b.zp_hh;
    bg.zp_hh.col(0).array() -= 100.0;
    Index top = 0;
    b.zp_hh.col(0).maxCoeff(&top);
    ASSERT_GT(b.w_hh(top), 1.0 - 1e-9);

    auto mask = FeatureMask::all(feature_count(c, Mode::multimodal));
    mask.masked[static_cast<std::size_t>(top)] = false;
    EXPECT_NEAR(masked_forward(m, x, mask, bg, Mode::multimodal), model::forward(x, m).risk, 1e-6);
    mask.masked[static_cast<std::size_t>(top)] = true;
    EXPECT_GT(std::abs(masked_forward(m, x, mask, bg, Mode::multimodal) - model::forward(x, m).risk), 1e-3);
}

TEST(Representation, SingleBlockHeadTakesEverything)
{
    const auto c = tiny_config();
    Rng rng(13);
    for (int block = 0; block < 4; ++block) {
        auto m = random_model(c, 13);
        keep_only_risk_block(m, block);
        const auto xs = inputs(c, rng, 5);
        const auto bg = compute_background(m, inputs(c, rng, 5));
        const auto s = representation_contribution(m, xs, bg);
        const double shares[4] = {s.gg, s.hh, s.hg, s.gh};
        for (int b = 0; b < 4; ++b)
            EXPECT_NEAR(shares[b], b == block ? 1.0 : 0.0, 1e-12);
    }
}

TEST(Representation, SharesSumToOne)
{
    const auto c = tiny_config();
    const auto m = random_model(c, 14);
    Rng rng(14);
    const auto s = representation_contribution(m, inputs(c, rng, 6), compute_background(m, inputs(c, rng, 6)));
    EXPECT_NEAR(s.specific() + s.shared(), 1.0, 1e-12);
    EXPECT_GE(std::min({s.gg, s.hh, s.hg, s.gh}), 0.0);
}

TEST(Attention, SummaryOfOneSampleIsItsAttention)
{
    const auto c = tiny_config();
    const auto m = random_model(c, 15);
    Rng rng(15);
    const auto x = random_input(c, rng);
    const auto s = attention_summary(m, {x}, 2);
    const auto b = model::forward(x, m).bundle;
    EXPECT_EQ(s.a_gh, b.a_gh);
    ASSERT_EQ(s.top_gh.size(), static_cast<std::size_t>(c.prototypes));
    for (std::size_t q = 0; q < s.top_gh.size(); ++q) {
        const auto& t = s.top_gh[q];
        ASSERT_EQ(t.index.size(), 2u);
        EXPECT_GE(t.weight[0], t.weight[1]);
        EXPECT_EQ(t.weight[0], b.a_gh.row(static_cast<Index>(q)).maxCoeff());
    }
}

TEST(Attention, UniformRowsBreakTiesByIndex)
{
    const auto c = tiny_config();
    auto m = random_model(c, 16);
    m.params.attn_hg.query.weight.setZero();
    m.params.attn_hg.query.bias.setZero();
    Rng rng(16);
    const auto s = attention_summary(m, inputs(c, rng, 3), 2);
    for (const auto& t : s.top_hg)
        EXPECT_EQ(t.index, (std::vector<Index>{0, 1}));
    EXPECT_LT((s.a_hg.array() - 1.0 / static_cast<double>(c.prototypes)).abs().maxCoeff(), 1e-15);
}

TEST(Exports, CsvLayouts)
{
    const auto c = tiny_config(2, {3, 2});
    const auto m = random_model(c, 17);
    Rng rng(17);
    const auto bg = compute_background(m, inputs(c, rng, 4));
    std::vector<AttributionReport> uni, multi;
    for (int i = 0; i < 2; ++i) {
        const auto x = random_input(c, rng);
        uni.push_back(unimodal_attribution(m, x, bg, 4, i));
        multi.push_back(multimodal_attribution(m, x, bg, 4, i));
        uni.back().sample_id = multi.back().sample_id = "s" + std::to_string(i);
    }
    const auto dir = std::filesystem::temp_directory_path() / "dimafx_attr_test";
    std::filesystem::create_directories(dir);
    write_reports_csv(uni, dir / "u.csv");
    write_scatter_csv(multi, c, dir / "scatter.csv");
    write_reports_json(multi, dir / "m.json");
    write_attention_json(attention_summary(m, {random_input(c, rng)}, 1), dir / "a.json");

    auto lines = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        std::vector<std::string> out;
        for (std::string l; std::getline(in, l);)
            out.push_back(l);
        return out;
    };
    const auto u = lines(dir / "u.csv");
    ASSERT_EQ(u.size(), 1u + 2u * 4u);
    EXPECT_EQ(u[0], "sample_id,feature,mode,shap,shap_normalized");
    EXPECT_EQ(u[1].rfind("s0,W0,unimodal,", 0), 0u);
    const auto s = lines(dir / "scatter.csv");
    ASSERT_EQ(s.size(), 1u + 4u);
    EXPECT_EQ(s[0], "feature,modality,shap_specific,shap_shared");
    EXPECT_EQ(s[1].rfind("W0,wsi,", 0), 0u);
    EXPECT_EQ(s[3].rfind("R0,genomics,", 0), 0u);
    EXPECT_TRUE(std::filesystem::file_size(dir / "m.json") > 0);
    EXPECT_TRUE(std::filesystem::file_size(dir / "a.json") > 0);
    std::filesystem::remove_all(dir);
}
