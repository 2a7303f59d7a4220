#include "dimafx/pipeline/commands.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "dimafx/attribution/explain.hpp"
#include "dimafx/data/io.hpp"
#include "dimafx/metrics/survival.hpp"
#include "dimafx/model/checkpoint.hpp"
#include "dimafx/numerics/rng.hpp"
#include "dimafx/pipeline/config.hpp"

namespace dimafx::pipeline {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write " + path.string());
    return out;
}

json read_json(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("missing file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

json matrix_json(const Matrix& m)
{
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c)
            row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

Matrix matrix_from_json(const json& rows, const std::string& what)
{
    try {
        const auto data = rows.get<std::vector<std::vector<double>>>();
        if (data.empty() || data.front().empty())
            throw DataError(what + ": empty matrix");
        Matrix m(static_cast<Index>(data.size()), static_cast<Index>(data.front().size()));
        for (std::size_t r = 0; r < data.size(); ++r) {
            if (data[r].size() != data.front().size())
                throw DataError(what + ": ragged matrix");
            for (std::size_t c = 0; c < data[r].size(); ++c)
                m(static_cast<Index>(r), static_cast<Index>(c)) = data[r][c];
        }
        return m;
    } catch (const json::exception& e) {
        throw DataError(what + ": " + e.what());
    }
}

std::string fixed(double v, int digits = 3)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

fs::path fold_dir(const json& config, std::size_t fold)
{
    return output_dir(config) / "train" / ("fold_" + std::to_string(fold));
}

std::map<std::string, std::size_t> index_by_id(const data::Cohort& cohort)
{
    std::map<std::string, std::size_t> out;
    for (std::size_t i = 0; i < cohort.size(); ++i)
        out.emplace(cohort.samples[i].sample_id, i);
    return out;
}

/// Artifacts of one trained fold, re-read from disk.
struct StoredFold {
    model::ModelParams model;
    Matrix centroids;
    std::vector<std::size_t> train, test;
};

StoredFold load_fold(const json& config, const data::Cohort& cohort, std::size_t fold)
{
    const fs::path dir = fold_dir(config, fold);
    StoredFold f;
    f.model = model::load_checkpoint(dir / "checkpoint.json");
    f.centroids = matrix_from_json(read_json(dir / "centroids.json").at("centroids"), "centroids");
    const json split = read_json(dir / "split.json");
    const auto ids = index_by_id(cohort);
    auto resolve = [&](const char* key) {
        std::vector<std::size_t> out;
        for (const auto& id : split.at(key)) {
            const auto it = ids.find(id.get<std::string>());
            if (it == ids.end())
                throw DataError("split.json lists unknown sample '" + id.get<std::string>() + "'");
            out.push_back(it->second);
        }
        return out;
    };
    f.train = resolve("train");
    f.test = resolve("test");
    return f;
}

/// Per-slide EM from the stored centroids for the given slides.
std::vector<model::SampleInput> inputs_for(const data::Cohort& cohort, const std::vector<std::size_t>& idx,
                                           const Matrix& centroids, const prototyping::SlideOptions& opts)
{
    const prototyping::PrototypeModel init = prototyping::uniform_init(centroids);
    std::vector<model::SampleInput> out;
    out.reserve(idx.size());
    for (std::size_t i : idx)
        out.push_back(sample_input(cohort.samples[i],
                                   prototyping::fit_gmm_em(cohort.samples[i].patch_features, init, opts.em).model));
    return out;
}

} // namespace

void cmd_simulate(const json& config, std::ostream& log)
{
    const data::SyntheticConfig sc = synthetic_config(config);
    const data::SyntheticCohort syn = data::generate_cohort(sc, run_seed(config));
    const fs::path dir = output_dir(config) / "cohort";
    data::save_cohort(syn.cohort, dir);
    data::save_ground_truth(syn.truth, syn.cohort, dir / "ground_truth.json");
    const std::size_t n = syn.cohort.size();
    const double censored = 1.0 - static_cast<double>(syn.cohort.event_count()) / static_cast<double>(n);
    log << "simulate: n=" << n << " censored=" << fixed(100.0 * censored, 1) << "% sites=" << sc.sites
        << " pathways=" << sc.pathways << " out=" << dir.string() << '\n';
}

void cmd_prototype(const json& config, std::ostream& log)
{
    const ExperimentConfig ec = experiment_config(config);
    const data::Cohort cohort = data::load_cohort(manifest_path(config));
    std::vector<std::size_t> all(cohort.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    const Matrix centroids = prototyping::global_centroids(cohort, all, ec.prototypes, mix_seed(ec.seed ^ 0x44));
    const auto models = prototyping::fit_slides(cohort, centroids, ec.prototypes);
    const fs::path dir = output_dir(config) / "prototypes";
    prototyping::save_prototypes(cohort, centroids, models, dir / "prototypes.json");
    prototyping::save_top_assignments(cohort, models, top_m(config), dir / "top_assignments.csv");
    log << "prototype: slides=" << cohort.size() << " components=" << centroids.rows()
        << " out=" << dir.string() << '\n';
}

void cmd_train(const json& config, std::ostream& log)
{
    const ExperimentConfig ec = experiment_config(config);
    const data::Cohort cohort = data::load_cohort(manifest_path(config));
    const auto folds = cross_validate(cohort, ec);

    json records = json::array();
    std::vector<double> c, ipcw, d1, d2, total, orth;
    for (const auto& f : folds) {
        const fs::path dir = fold_dir(config, f.fold);
        model::save_checkpoint(f.model, dir / "checkpoint.json");
        open_out(dir / "centroids.json") << json{{"centroids", matrix_json(f.centroids)}}.dump(1) << '\n';
        objectives::write_history_csv(f.history, dir / "history.csv");

        json train_ids = json::array(), test_ids = json::array(), sites = json::array();
        for (std::size_t i : f.train_indices)
            train_ids.push_back(cohort.samples[i].sample_id);
        std::ofstream pred = open_out(dir / "test_predictions.csv");
        pred << "sample_id,site_id,time,event,risk\n";
        for (std::size_t k = 0; k < f.test_indices.size(); ++k) {
            const auto& s = cohort.samples[f.test_indices[k]];
            test_ids.push_back(s.sample_id);
            if (std::find(sites.begin(), sites.end(), s.site_id) == sites.end())
                sites.push_back(s.site_id);
            pred << s.sample_id << ',' << s.site_id << ',' << data::format_double(s.time) << ','
                 << (s.event ? 1 : 0) << ',' << data::format_double(f.test_risks[k]) << '\n';
        }
        open_out(dir / "split.json") << json{{"train", train_ids}, {"test", test_ids}}.dump(1) << '\n';

        const auto degenerate_batches =
            std::count_if(f.history.begin(), f.history.end(), [](const auto& h) { return h.degenerate; });
        if (degenerate_batches > 0)
            log << "warning: fold " << f.fold << ": " << degenerate_batches
                << " batches had a constant representation stack (distance correlation taken as 0)\n";
        const auto& dr = f.disentanglement;
        if (dr.degenerate)
            log << "warning: fold " << f.fold << ": constant test representation stack (distance correlation taken as 0)\n";
        records.push_back({{"fold", f.fold},
                           {"n_train", f.train_indices.size()},
                           {"n_test", f.test_indices.size()},
                           {"test_sites", sites},
                           {"c_index", f.c_index},
                           {"c_index_ipcw", f.c_index_ipcw},
                           {"dc_d1", dr.d1},
                           {"dc_d2", dr.d2},
                           {"dc_total", dr.total},
                           {"orth_d1", dr.orth_d1},
                           {"orth_d2", dr.orth_d2},
                           {"orth_total", dr.orth_total},
                           {"dc_degenerate", dr.degenerate},
                           {"degenerate_batches", degenerate_batches},
                           {"final_loss", f.history.back().total}});
        c.push_back(f.c_index);
        ipcw.push_back(f.c_index_ipcw);
        d1.push_back(dr.d1);
        d2.push_back(dr.d2);
        total.push_back(dr.total);
        orth.push_back(dr.orth_total);
    }

    auto summary = [](const std::vector<double>& v) {
        const Summary s = summarize(v);
        return json{{"mean", s.mean}, {"std", s.std}};
    };
    const json results = {{"version", kVersion},
                          {"config", config},
                          {"folds", records},
                          {"summary",
                           {{"c_index", summary(c)},
                            {"c_index_ipcw", summary(ipcw)},
                            {"dc_d1", summary(d1)},
                            {"dc_d2", summary(d2)},
                            {"dc_total", summary(total)},
                            {"orth_total", summary(orth)}}}};
    open_out(output_dir(config) / "train" / "results.json") << results.dump(1) << '\n';

    log << "fold  n_test  c_index  c_ipcw  dc_d1  dc_d2  dc_total\n";
    for (std::size_t k = 0; k < folds.size(); ++k)
        log << k << "     " << folds[k].test_indices.size() << "     " << fixed(c[k]) << "    "
            << fixed(ipcw[k]) << "   " << fixed(d1[k]) << "  " << fixed(d2[k]) << "  " << fixed(total[k]) << '\n';
    auto pm = [](const std::vector<double>& v) {
        const Summary s = summarize(v);
        return fixed(s.mean) + " ± " + fixed(s.std);
    };
    log << "C-index " << pm(c) << " | C-index IPCW " << pm(ipcw) << " | DC total " << pm(total) << '\n';
}

void cmd_stratify(const json& config, std::ostream& log)
{
    const ExperimentConfig ec = experiment_config(config);
    const data::Cohort cohort = data::load_cohort(manifest_path(config));
    std::vector<double> risks, times;
    std::vector<bool> events;
    std::vector<std::size_t> who, fold_of;
    for (std::size_t f = 0; f < ec.folds; ++f) {
        const StoredFold sf = load_fold(config, cohort, f);
        const auto inputs = inputs_for(cohort, sf.test, sf.centroids, ec.prototypes);
        const Predictions p = predict(sf.model, inputs);
        for (std::size_t k = 0; k < sf.test.size(); ++k) {
            risks.push_back(p.risks[k]);
            times.push_back(cohort.samples[sf.test[k]].time);
            events.push_back(cohort.samples[sf.test[k]].event);
            who.push_back(sf.test[k]);
            fold_of.push_back(f);
        }
    }
    const metrics::StratificationResult r = metrics::stratify_by_median(risks, times, events);

    const fs::path dir = output_dir(config) / "stratify";
    std::ofstream km = open_out(dir / "km.csv");
    km << "time,survival,at_risk,events,group\n";
    auto dump = [&](const metrics::SurvivalCurve& curve, const char* group) {
        for (std::size_t i = 0; i < curve.times.size(); ++i)
            km << data::format_double(curve.times[i]) << ',' << data::format_double(curve.survival[i]) << ','
               << curve.at_risk[i] << ',' << curve.events[i] << ',' << group << '\n';
    };
    dump(r.km_high, "high");
    dump(r.km_low, "low");

    std::ofstream rs = open_out(dir / "risks.csv");
    rs << "sample_id,fold,risk,group\n";
    for (std::size_t k = 0; k < risks.size(); ++k)
        rs << cohort.samples[who[k]].sample_id << ',' << fold_of[k] << ',' << data::format_double(risks[k]) << ','
           << (r.high[k] ? "high" : "low") << '\n';

    const json doc = {{"hr", r.hazard_ratio},       {"hr_converged", r.hr_converged},
                      {"chi_square", r.chi_square}, {"p_value", r.p_value},
                      {"n_high", r.n_high},         {"n_low", r.n_low},
                      {"median_risk", r.median_risk}};
    open_out(dir / "stratification.json") << doc.dump(1) << '\n';
    char p[32];
    std::snprintf(p, sizeof p, "%.3g", r.p_value);
    log << "stratify: n_high=" << r.n_high << " n_low=" << r.n_low << " HR=" << fixed(r.hazard_ratio)
        << " chi2=" << fixed(r.chi_square) << " p=" << p << '\n';
}

void cmd_explain(const json& config, std::ostream& log)
{
    const ExperimentConfig ec = experiment_config(config);
    const ExplainSettings es = explain_settings(config);
    if (es.fold >= ec.folds)
        throw ConfigError("explain.fold must be < evaluate.folds");
    const data::Cohort cohort = data::load_cohort(manifest_path(config));
    const StoredFold sf = load_fold(config, cohort, es.fold);

    const auto background_inputs = inputs_for(cohort, sf.train, sf.centroids, ec.prototypes);
    const auto test_inputs = inputs_for(cohort, sf.test, sf.centroids, ec.prototypes);
    const attribution::Background bg = attribution::compute_background(sf.model, background_inputs);

    const std::size_t count = std::min(es.samples, test_inputs.size());
    std::vector<model::SampleInput> chosen(test_inputs.begin(), test_inputs.begin() + static_cast<long>(count));
    std::vector<attribution::AttributionReport> uni, multi;
    for (std::size_t k = 0; k < count; ++k) {
        const std::string& id = cohort.samples[sf.test[k]].sample_id;
        const std::uint64_t seed = mix_seed(ec.seed + 1000 * (es.fold + 1) + k);
        uni.push_back(attribution::unimodal_attribution(sf.model, chosen[k], bg, es.permutations, seed));
        uni.back().sample_id = id;
        multi.push_back(attribution::multimodal_attribution(sf.model, chosen[k], bg, es.permutations, seed));
        multi.back().sample_id = id;
    }
    const auto shares = attribution::representation_contribution(sf.model, test_inputs, bg);
    const auto attn = attribution::attention_summary(sf.model, test_inputs, es.top_k);

    const fs::path dir = output_dir(config) / "explain";
    attribution::write_reports_json(uni, dir / "unimodal.json");
    attribution::write_reports_csv(uni, dir / "unimodal.csv");
    attribution::write_reports_json(multi, dir / "multimodal.json");
    attribution::write_reports_csv(multi, dir / "multimodal.csv");
    attribution::write_scatter_csv(multi, sf.model.config, dir / "scatter.csv");
    attribution::write_attention_json(attn, dir / "attention.json");
    const json rep = {{"fold", es.fold},
                      {"samples", test_inputs.size()},
                      {"gg", shares.gg},
                      {"hh", shares.hh},
                      {"hg", shares.hg},
                      {"gh", shares.gh},
                      {"specific", shares.specific()},
                      {"shared", shares.shared()}};
    open_out(dir / "representation.json") << rep.dump(1) << '\n';

    double worst = 0.0;
    for (const auto* set : {&uni, &multi})
        for (const auto& r : *set) {
            double s = r.base_value - r.prediction;
            for (double v : r.shap)
                s += v;
            worst = std::max(worst, std::abs(s));
        }
    char acc[32];
    std::snprintf(acc, sizeof acc, "%.2g", worst);
    log << "explain: fold=" << es.fold << " samples=" << count << " specific=" << fixed(shares.specific())
        << " shared=" << fixed(shares.shared()) << " max_local_accuracy_gap=" << acc << '\n';
}

} // namespace dimafx::pipeline
