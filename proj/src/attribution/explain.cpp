#include "dimafx/attribution/explain.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>

#include "dimafx/data/io.hpp"
#include "json.hpp"

namespace dimafx::attribution {

using json = nlohmann::json;

std::string to_string(Mode mode) { return mode == Mode::unimodal ? "unimodal" : "multimodal"; }

namespace {

model::Trace<Matrix> plain_trace(const model::ModelParams& m, const model::SampleInput& s)
{
    model::validate_input(s, m.config);
    const auto in = model::to_plain_inputs(s);
    return model::forward_trace(in.means, in.cardinality, in.pathways, m.params, m.config);
}

double risk_of(const model::PooledStreams<Matrix>& p, const model::Params& params)
{
    return model::risk_from_pooled(p.gg.vector, p.hh.vector, p.hg.vector, p.gh.vector, params)(0, 0);
}

/// Value function over encoder outputs.
class UnimodalGame {
  public:
    UnimodalGame(const model::ModelParams& m, const model::SampleInput& s, const Background& bg)
        : model_(m), bg_(bg)
    {
        const auto in = model::to_plain_inputs(s);
        model::validate_input(s, m.config);
        zh_ = model::encode_wsi(in.means, in.cardinality, m.params);
        zg_ = model::encode_pathways(in.pathways, m.params);
    }

    double operator()(const std::vector<bool>& masked) const
    {
        Matrix zh = zh_, zg = zg_;
        const Index nh = zh.rows();
        for (Index k = 0; k < nh; ++k)
            if (masked[static_cast<std::size_t>(k)])
                zh.row(k) = bg_.zh.row(k);
        for (Index i = 0; i < zg.rows(); ++i)
            if (masked[static_cast<std::size_t>(nh + i)])
                zg.row(i) = bg_.zg.row(i);
        const auto streams = model::fuse(zh, zg, model_.params, model_.config);
        return risk_of(model::pool(streams, model_.params), model_.params);
    }

  private:
    const model::ModelParams& model_;
    const Background& bg_;
    Matrix zh_, zg_;
};

/// Value function over post-fusion tokens.
class MultimodalGame {
  public:
    MultimodalGame(const model::ModelParams& m, const model::SampleInput& s, const Background& bg)
        : model_(m), bg_(bg), streams_(plain_trace(m, s).streams)
    {
    }

    double operator()(const std::vector<bool>& masked) const
    {
        model::Streams<Matrix> s = streams_;
        const Index nh = s.hh.rows();
        const Index ng = s.gg.rows();
        const std::size_t half = static_cast<std::size_t>(nh + ng);
        for (Index k = 0; k < nh; ++k) {
            if (masked[static_cast<std::size_t>(k)])
                s.hh.row(k) = bg_.zp_hh.row(k);
            if (masked[half + static_cast<std::size_t>(k)])
                s.gh.row(k) = bg_.zp_gh.row(k);
        }
        for (Index i = 0; i < ng; ++i) {
            if (masked[static_cast<std::size_t>(nh + i)])
                s.gg.row(i) = bg_.zp_gg.row(i);
            if (masked[half + static_cast<std::size_t>(nh + i)])
                s.hg.row(i) = bg_.zp_hg.row(i);
        }
        return risk_of(model::pool(s, model_.params), model_.params);
    }

  private:
    const model::ModelParams& model_;
    const Background& bg_;
    model::Streams<Matrix> streams_;
};

std::vector<bool> invert(const std::vector<bool>& present)
{
    std::vector<bool> masked(present.size());
    for (std::size_t i = 0; i < present.size(); ++i)
        masked[i] = !present[i];
    return masked;
}

template <typename Game>
AttributionReport attribute(const Game& game, const model::ModelParams& m, const model::SampleInput&,
                            Mode mode, int permutations, std::uint64_t seed)
{
    const std::size_t f = feature_count(m.config, mode);
    const ShapleyResult r = shapley_sampling(
        [&](const std::vector<bool>& present) { return game(invert(present)); }, f, permutations, seed);
    AttributionReport rep;
    rep.mode = mode;
    rep.features = feature_names(m.config, mode);
    rep.shap = r.shap;
    rep.normalized = normalize_abs(r.shap);
    rep.base_value = r.base_value;
    rep.prediction = r.prediction;
    rep.permutations = r.permutations;
    rep.residual = r.residual;
    return rep;
}

} // namespace

Background compute_background(const model::ModelParams& m, const std::vector<model::SampleInput>& background)
{
    if (background.empty())
        throw DataError("background set is empty");
    Background bg;
    const double w = 1.0 / static_cast<double>(background.size());
    bool first = true;
    for (const auto& s : background) {
        const auto t = plain_trace(m, s);
        if (first) {
            bg = {t.zh * w, t.zg * w, t.streams.hh * w, t.streams.gg * w, t.streams.gh * w,
                  t.streams.hg * w, t.pooled.gg.vector * w, t.pooled.hh.vector * w,
                  t.pooled.hg.vector * w, t.pooled.gh.vector * w};
            first = false;
            continue;
        }
        bg.zh += t.zh * w;
        bg.zg += t.zg * w;
        bg.zp_hh += t.streams.hh * w;
        bg.zp_gg += t.streams.gg * w;
        bg.zp_gh += t.streams.gh * w;
        bg.zp_hg += t.streams.hg * w;
        bg.z_gg += t.pooled.gg.vector * w;
        bg.z_hh += t.pooled.hh.vector * w;
        bg.z_hg += t.pooled.hg.vector * w;
        bg.z_gh += t.pooled.gh.vector * w;
    }
    return bg;
}

std::size_t feature_count(const model::ModelConfig& c, Mode mode)
{
    const auto base = static_cast<std::size_t>(c.prototypes + c.pathways());
    return mode == Mode::unimodal ? base : 2 * base;
}

std::vector<std::string> feature_names(const model::ModelConfig& c, Mode mode)
{
    std::vector<std::string> base;
    for (Index k = 0; k < c.prototypes; ++k)
        base.push_back("W" + std::to_string(k));
    for (Index i = 0; i < c.pathways(); ++i)
        base.push_back("R" + std::to_string(i));
    if (mode == Mode::unimodal)
        return base;
    std::vector<std::string> out;
    for (const auto& b : base)
        out.push_back(b + ":specific");
    for (const auto& b : base)
        out.push_back(b + ":shared");
    return out;
}

double masked_forward(const model::ModelParams& m, const model::SampleInput& sample, const FeatureMask& mask,
                      const Background& background, Mode mode)
{
    if (mask.size() != feature_count(m.config, mode))
        throw ConfigError("masked_forward: mask has " + std::to_string(mask.size()) + " entries, expected " +
                          std::to_string(feature_count(m.config, mode)));
    if (mode == Mode::unimodal)
        return UnimodalGame(m, sample, background)(mask.masked);
    return MultimodalGame(m, sample, background)(mask.masked);
}

AttributionReport unimodal_attribution(const model::ModelParams& m, const model::SampleInput& sample,
                                       const Background& background, int permutations, std::uint64_t seed)
{
    return attribute(UnimodalGame(m, sample, background), m, sample, Mode::unimodal, permutations, seed);
}

AttributionReport multimodal_attribution(const model::ModelParams& m, const model::SampleInput& sample,
                                         const Background& background, int permutations, std::uint64_t seed)
{
    return attribute(MultimodalGame(m, sample, background), m, sample, Mode::multimodal, permutations, seed);
}

RepresentationShares representation_contribution(const model::ModelParams& m,
                                                 const std::vector<model::SampleInput>& samples,
                                                 const Background& bg)
{
    if (samples.empty())
        throw DataError("representation_contribution: no samples");
    std::array<double, 4> acc{};
    for (const auto& s : samples) {
        const auto t = plain_trace(m, s);
        const std::array<RowVector, 4> own{t.pooled.gg.vector, t.pooled.hh.vector, t.pooled.hg.vector,
                                           t.pooled.gh.vector};
        const std::array<RowVector, 4> back{bg.z_gg, bg.z_hh, bg.z_hg, bg.z_gh};
        const auto r = shapley_exact(
            [&](const std::vector<bool>& present) {
                Matrix z[4];
                for (std::size_t j = 0; j < 4; ++j)
                    z[j] = present[j] ? own[j] : back[j];
                return model::risk_from_pooled(z[0], z[1], z[2], z[3], m.params)(0, 0);
            },
            4);
        for (std::size_t j = 0; j < 4; ++j)
            acc[j] += std::abs(r.shap[j]);
    }
    const double total = acc[0] + acc[1] + acc[2] + acc[3];
    if (!(total > 0.0))
        return {0.25, 0.25, 0.25, 0.25};
    return {acc[0] / total, acc[1] / total, acc[2] / total, acc[3] / total};
}

namespace {

std::vector<TopAttended> top_k(const Matrix& a, Index k)
{
    const Index take = std::min(k, a.cols());
    std::vector<TopAttended> out;
    for (Index r = 0; r < a.rows(); ++r) {
        std::vector<Index> idx(static_cast<std::size_t>(a.cols()));
        std::iota(idx.begin(), idx.end(), Index{0});
        std::stable_sort(idx.begin(), idx.end(), [&](Index x, Index y) { return a(r, x) > a(r, y); });
        TopAttended t;
        for (Index j = 0; j < take; ++j) {
            t.index.push_back(idx[static_cast<std::size_t>(j)]);
            t.weight.push_back(a(r, idx[static_cast<std::size_t>(j)]));
        }
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace

AttentionSummary attention_summary(const model::ModelParams& m, const std::vector<model::SampleInput>& samples,
                                   Index k)
{
    if (samples.empty())
        throw DataError("attention_summary: no samples");
    if (k < 1)
        throw ConfigError("attention_summary: k must be >= 1");
    AttentionSummary s;
    const double w = 1.0 / static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto st = plain_trace(m, samples[i]).streams;
        if (i == 0) {
            s.a_hh = st.attn_hh * w;
            s.a_gg = st.attn_gg * w;
            s.a_gh = st.attn_gh * w;
            s.a_hg = st.attn_hg * w;
        } else {
            s.a_hh += st.attn_hh * w;
            s.a_gg += st.attn_gg * w;
            s.a_gh += st.attn_gh * w;
            s.a_hg += st.attn_hg * w;
        }
    }
    s.top_hh = top_k(s.a_hh, k);
    s.top_gg = top_k(s.a_gg, k);
    s.top_gh = top_k(s.a_gh, k);
    s.top_hg = top_k(s.a_hg, k);
    return s;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write " + path.string());
    return out;
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

json top_json(const std::vector<TopAttended>& top)
{
    json out = json::array();
    for (const auto& t : top)
        out.push_back({{"index", t.index}, {"weight", t.weight}});
    return out;
}

} // namespace

void write_reports_json(const std::vector<AttributionReport>& reports, const std::filesystem::path& path)
{
    json arr = json::array();
    for (const auto& r : reports)
        arr.push_back({{"sample_id", r.sample_id},
                       {"mode", to_string(r.mode)},
                       {"features", r.features},
                       {"shap", r.shap},
                       {"shap_normalized", r.normalized},
                       {"base_value", r.base_value},
                       {"prediction", r.prediction},
                       {"permutations", r.permutations},
                       {"residual_before_adjustment", r.residual}});
    open_out(path) << arr.dump(1) << '\n';
}

void write_reports_csv(const std::vector<AttributionReport>& reports, const std::filesystem::path& path)
{
    std::ofstream out = open_out(path);
    out << "sample_id,feature,mode,shap,shap_normalized\n";
    for (const auto& r : reports)
        for (std::size_t i = 0; i < r.shap.size(); ++i)
            out << r.sample_id << ',' << r.features[i] << ',' << to_string(r.mode) << ','
                << data::format_double(r.shap[i]) << ',' << data::format_double(r.normalized[i]) << '\n';
}

void write_scatter_csv(const std::vector<AttributionReport>& multimodal, const model::ModelConfig& c,
                       const std::filesystem::path& path)
{
    const std::size_t base = feature_count(c, Mode::unimodal);
    std::vector<double> spec(base, 0.0), shared(base, 0.0);
    for (const auto& r : multimodal) {
        if (r.mode != Mode::multimodal || r.normalized.size() != 2 * base)
            throw DataError("scatter export needs multimodal reports");
        for (std::size_t j = 0; j < base; ++j) {
            spec[j] += r.normalized[j];
            shared[j] += r.normalized[base + j];
        }
    }
    const double w = multimodal.empty() ? 0.0 : 1.0 / static_cast<double>(multimodal.size());
    const auto names = feature_names(c, Mode::unimodal);
    std::ofstream out = open_out(path);
    out << "feature,modality,shap_specific,shap_shared\n";
    for (std::size_t j = 0; j < base; ++j)
        out << names[j] << ',' << (j < static_cast<std::size_t>(c.prototypes) ? "wsi" : "genomics") << ','
            << data::format_double(spec[j] * w) << ',' << data::format_double(shared[j] * w) << '\n';
}

void write_attention_json(const AttentionSummary& s, const std::filesystem::path& path)
{
    const json doc = {{"a_hh", matrix_json(s.a_hh)},   {"a_gg", matrix_json(s.a_gg)},
                      {"a_gh", matrix_json(s.a_gh)},   {"a_hg", matrix_json(s.a_hg)},
                      {"top_hh", top_json(s.top_hh)},  {"top_gg", top_json(s.top_gg)},
                      {"top_gh", top_json(s.top_gh)},  {"top_hg", top_json(s.top_hg)}};
    open_out(path) << doc.dump(1) << '\n';
}

} // namespace dimafx::attribution
