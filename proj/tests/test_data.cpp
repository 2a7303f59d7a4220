#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "dimafx/data/io.hpp"
#include "dimafx/data/synthetic.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace dimafx;
using namespace dimafx::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("dimafx_test_data_" + name);
    fs::remove_all(p);
    return p;
}

SyntheticConfig small_config(std::size_t n)
{
    SyntheticConfig c;
    c.samples = n;
    c.min_patches = 6;
    c.max_patches = 10;
    c.genes = 40;
    c.pathways = 5;
    c.min_pathway_genes = 2;
    c.max_pathway_genes = 5;
    return c;
}

/// Minimal cohort with the given number of samples per site.
Cohort sites_cohort(const std::vector<std::size_t>& sizes)
{
    Cohort c;
    c.catalog.entries = {{"p0", {0}}};
    std::size_t id = 0;
    for (std::size_t s = 0; s < sizes.size(); ++s)
        for (std::size_t k = 0; k < sizes[s]; ++k) {
            CohortSample x;
            x.sample_id = "S" + std::to_string(id++);
            x.site_id = "site" + std::to_string(s);
            x.patch_features = Matrix::Ones(1, 2);
            x.pathway_inputs = {Vector::Ones(1)};
            x.time = 1.0 + static_cast<double>(id);
            x.event = true;
            c.samples.push_back(x);
        }
    return c;
}

} // namespace

TEST(Synthetic, DeterministicPerSeed)
{
    const auto c = small_config(200);
    EXPECT_TRUE(generate_cohort(c, 7).cohort == generate_cohort(c, 7).cohort);
    EXPECT_FALSE(generate_cohort(c, 7).cohort == generate_cohort(c, 8).cohort);
}

TEST(Synthetic, NoCensoringMeansAllEvents)
{
    auto c = small_config(100);
    c.censor_rate = 0.0;
    const auto syn = generate_cohort(c, 3);
    EXPECT_EQ(syn.cohort.event_count(), 100U);
}

TEST(Synthetic, CensoringFractionNearTarget)
{
    for (double rate : {0.2, 0.3, 0.5}) {
        for (std::uint64_t seed : {1, 2, 3}) {
            auto c = small_config(600);
            c.censor_rate = rate;
            const auto syn = generate_cohort(c, seed);
            const double censored = 1.0 - static_cast<double>(syn.cohort.event_count()) / 600.0;
            EXPECT_NEAR(censored, rate, 0.05) << "rate " << rate << " seed " << seed;
        }
    }
}

TEST(Synthetic, ShapesMatchCatalog)
{
    const auto syn = generate_cohort(small_config(50), 1);
    syn.cohort.validate();
    EXPECT_EQ(syn.cohort.catalog.size(), 5U);
    EXPECT_EQ(syn.truth.samples.size(), 50U);
    std::set<std::string> sites;
    for (const auto& s : syn.cohort.samples)
        sites.insert(s.site_id);
    EXPECT_EQ(sites.size(), 10U);
}

TEST(Synthetic, TrueHazardPredictsOutcomes)
{
    for (std::uint64_t seed : {1, 2, 3, 4}) {
        auto c = strong_signal_config();
        c.samples = 500;
        const auto syn = generate_cohort(c, seed);
        std::vector<double> eta;
        for (const auto& f : syn.truth.samples)
            eta.push_back(f.log_hazard);
        const double cidx = oracle::concordance(eta, syn.cohort.times(), syn.cohort.events());
        EXPECT_GT(cidx, 0.75) << "seed " << seed;
    }
}

TEST(Synthetic, RejectsInvalidConfig)
{
    auto c = small_config(3);
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config(100);
    c.censor_rate = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config(100);
    c.patch_dim = 1;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Io, RoundTripIsExact)
{
    const auto syn = generate_cohort(small_config(30), 11);
    const fs::path dir = scratch("roundtrip");
    const fs::path manifest = save_cohort(syn.cohort, dir);
    EXPECT_TRUE(load_cohort(manifest) == syn.cohort);
    fs::remove_all(dir);
}

TEST(Io, MissingMatrixFileIsNamed)
{
    const auto syn = generate_cohort(small_config(10), 2);
    const fs::path dir = scratch("missing");
    const fs::path manifest = save_cohort(syn.cohort, dir);
    fs::remove(dir / "patches" / "S0003.csv");
    try {
        load_cohort(manifest);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("S0003.csv"), std::string::npos) << e.what();
    }
    fs::remove_all(dir);
}

namespace {

void edit_manifest(const fs::path& manifest, const std::function<void(nlohmann::json&)>& edit)
{
    nlohmann::json doc;
    {
        std::ifstream in(manifest);
        doc = nlohmann::json::parse(in);
    }
    edit(doc);
    std::ofstream(manifest) << doc.dump();
}

std::string load_error(const fs::path& manifest)
{
    try {
        load_cohort(manifest);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Io, ValidationErrorsCiteTheSample)
{
    const auto syn = generate_cohort(small_config(10), 2);
    const fs::path dir = scratch("invalid");
    const fs::path manifest = save_cohort(syn.cohort, dir);

    edit_manifest(manifest, [](auto& d) { d["samples"][4]["time"] = -1.0; });
    EXPECT_NE(load_error(manifest).find("S0004"), std::string::npos);

    save_cohort(syn.cohort, dir);
    edit_manifest(manifest, [](auto& d) { d["samples"][2]["event"] = 1; });
    EXPECT_NE(load_error(manifest).find("event"), std::string::npos);

    save_cohort(syn.cohort, dir);
    const fs::path pw = dir / "pathways" / "S0001.json";
    nlohmann::json p;
    {
        std::ifstream in(pw);
        p = nlohmann::json::parse(in);
    }
    p.begin().value().push_back(0.5);
    std::ofstream(pw) << p.dump();
    EXPECT_FALSE(load_error(manifest).empty());
    fs::remove_all(dir);
}

TEST(Io, MalformedCsvReportsRowAndColumn)
{
    const fs::path dir = scratch("csv");
    fs::create_directories(dir);
    std::ofstream(dir / "m.csv") << "1,2\n3,x\n";
    try {
        read_matrix_csv(dir / "m.csv");
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
    }
    fs::remove_all(dir);
}

TEST(Io, DuplicateSampleIdsAreAccepted)
{
    const auto syn = generate_cohort(small_config(12), 2);
    const fs::path dir = scratch("dupe");
    const fs::path manifest = save_cohort(syn.cohort, dir);
    edit_manifest(manifest, [](auto& d) { d["samples"].push_back(d["samples"][0]); });
    EXPECT_EQ(load_cohort(manifest).size(), 13U);
    fs::remove_all(dir);
}

TEST(Truncation, AdministrativeCensoring)
{
    Cohort c = sites_cohort({3});
    c.samples[0].time = 130;
    c.samples[1].time = 60;
    c.samples[2].time = 119;
    const Cohort t = truncate_followup(c, 120);
    EXPECT_EQ(t.samples[0].time, 120);
    EXPECT_FALSE(t.samples[0].event);
    EXPECT_TRUE(t.samples[1] == c.samples[1]);
    EXPECT_TRUE(t.samples[2] == c.samples[2]);
    EXPECT_TRUE(truncate_followup(t, 120) == t);

    Cohort short_follow = sites_cohort({50});
    for (auto& s : short_follow.samples)
        s.time = std::min(s.time, 119.0);
    EXPECT_TRUE(truncate_followup(short_follow, 120) == short_follow);
}

TEST(Split, EqualSitesBalanceExactly)
{
    const Cohort c = sites_cohort(std::vector<std::size_t>(10, 6));
    const FoldSplit s = split_stratified(c, 5, 1);
    ASSERT_EQ(s.fold_count(), 5U);
    for (std::size_t f = 0; f < 5; ++f) {
        std::set<std::string> sites;
        for (auto i : s.test_indices(f))
            sites.insert(c.samples[i].site_id);
        EXPECT_EQ(sites.size(), 2U);
        EXPECT_EQ(s.test_indices(f).size(), 12U);
    }
}

TEST(Split, FoldsAreDisjointExhaustiveAndSitePure)
{
    const auto syn = generate_cohort(small_config(300), 5);
    for (std::uint64_t seed : {1, 2, 3}) {
        const FoldSplit s = split_stratified(syn.cohort, 5, seed);
        std::map<std::string, std::size_t> site_fold;
        std::vector<int> seen(syn.cohort.size(), 0);
        for (std::size_t f = 0; f < s.fold_count(); ++f) {
            for (auto i : s.test_indices(f)) {
                ++seen[i];
                const auto [it, inserted] = site_fold.emplace(syn.cohort.samples[i].site_id, f);
                EXPECT_EQ(it->second, f);
            }
            EXPECT_EQ(s.train_indices(f).size() + s.test_indices(f).size(), syn.cohort.size());
        }
        for (int v : seen)
            EXPECT_EQ(v, 1);
        EXPECT_EQ(split_stratified(syn.cohort, 5, seed).folds, s.folds);
    }
}

TEST(Split, GreedyBalanceOnUnequalSites)
{
    // Largest first into the smaller fold: 50 | 30, +20 -> 50 | 50, +20 -> 70 | 50,
    // +10 -> 70 | 60, +10 -> 70 | 70.
    const Cohort c = sites_cohort({50, 30, 20, 20, 10, 10});
    const FoldSplit s = split_stratified(c, 2, 3);
    const long a = static_cast<long>(s.test_indices(0).size());
    const long b = static_cast<long>(s.test_indices(1).size());
    EXPECT_LE(std::abs(a - b), 10);
    EXPECT_EQ(a + b, 140);
}

TEST(Split, TooFewSites)
{
    const Cohort c = sites_cohort({5, 5, 5});
    EXPECT_THROW(split_stratified(c, 5, 1), DataError);
    EXPECT_THROW(split_stratified(c, 1, 1), ConfigError);
}
