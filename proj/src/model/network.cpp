#include "dimafx/model/network.hpp"

namespace dimafx::model {

void validate_input(const SampleInput& input, const ModelConfig& c)
{
    const auto& proto = input.prototypes;
    if (proto.means.rows() != c.prototypes || proto.means.cols() != c.patch_dim ||
        proto.cardinality.size() != c.prototypes)
        throw DataError("model input: prototype features do not match the configured " +
                        std::to_string(c.prototypes) + " x " + std::to_string(c.patch_dim));
    if (static_cast<Index>(input.pathways.size()) != c.pathways())
        throw DataError("model input: " + std::to_string(input.pathways.size()) +
                        " pathway inputs, model expects " + std::to_string(c.pathways()));
    for (std::size_t i = 0; i < input.pathways.size(); ++i) {
        if (input.pathways[i].size() != c.pathway_sizes[i])
            throw DataError("model input: pathway " + std::to_string(i) + " has " +
                            std::to_string(input.pathways[i].size()) + " genes, expected " +
                            std::to_string(c.pathway_sizes[i]));
    }
}

PlainInputs to_plain_inputs(const SampleInput& input)
{
    PlainInputs out;
    out.means = input.prototypes.means;
    out.cardinality = input.prototypes.cardinality;
    out.pathways.reserve(input.pathways.size());
    for (const auto& v : input.pathways)
        out.pathways.push_back(v.transpose());
    return out;
}

DisentangledBundle to_bundle(const Trace<Matrix>& t)
{
    DisentangledBundle b;
    b.zh = t.zh;
    b.zg = t.zg;
    b.zp_hh = t.streams.hh;
    b.zp_gg = t.streams.gg;
    b.zp_gh = t.streams.gh;
    b.zp_hg = t.streams.hg;
    b.a_hh = t.streams.attn_hh;
    b.a_gg = t.streams.attn_gg;
    b.a_gh = t.streams.attn_gh;
    b.a_hg = t.streams.attn_hg;
    b.z_hh = t.pooled.hh.vector;
    b.z_gg = t.pooled.gg.vector;
    b.z_gh = t.pooled.gh.vector;
    b.z_hg = t.pooled.hg.vector;
    b.w_hh = t.pooled.hh.weights;
    b.w_gg = t.pooled.gg.weights;
    b.w_gh = t.pooled.gh.weights;
    b.w_hg = t.pooled.hg.weights;
    return b;
}

RiskOutput forward(const SampleInput& input, const ModelParams& model)
{
    validate_input(input, model.config);
    const PlainInputs in = to_plain_inputs(input);
    const Trace<Matrix> t =
        forward_trace(in.means, in.cardinality, in.pathways, model.params, model.config);
    RiskOutput out;
    out.risk = t.risk(0, 0);
    if (!std::isfinite(out.risk))
        throw NumericalError("forward: non-finite risk");
    out.bundle = to_bundle(t);
    return out;
}

namespace {

template <typename Src, typename Dst, typename Fn>
void map_linear(const LinearT<Src>& s, LinearT<Dst>& d, Fn& fn)
{
    d.weight = fn(s.weight);
    d.bias = fn(s.bias);
}

template <typename Src, typename Dst, typename Fn>
void map_attention(const AttentionBlockT<Src>& s, AttentionBlockT<Dst>& d, Fn& fn)
{
    map_linear(s.query, d.query, fn);
    map_linear(s.key, d.key, fn);
    map_linear(s.value, d.value, fn);
    map_linear(s.output, d.output, fn);
}

/// Structure-preserving map between parameter representations.
template <typename Dst, typename Src, typename Fn>
ParamsT<Dst> map_params(const ParamsT<Src>& s, Fn fn)
{
    ParamsT<Dst> d;
    map_linear(s.wsi_reduce, d.wsi_reduce, fn);
    d.wsi_tokens = fn(s.wsi_tokens);
    d.pathways.resize(s.pathways.size());
    for (std::size_t i = 0; i < s.pathways.size(); ++i) {
        map_linear(s.pathways[i].hidden, d.pathways[i].hidden, fn);
        map_linear(s.pathways[i].out, d.pathways[i].out, fn);
        d.pathways[i].token = fn(s.pathways[i].token);
    }
    map_attention(s.attn_hh, d.attn_hh, fn);
    map_attention(s.attn_gg, d.attn_gg, fn);
    map_attention(s.attn_gh, d.attn_gh, fn);
    map_attention(s.attn_hg, d.attn_hg, fn);
    map_linear(s.agg_hh, d.agg_hh, fn);
    map_linear(s.agg_gg, d.agg_gg, fn);
    map_linear(s.agg_gh, d.agg_gh, fn);
    map_linear(s.agg_hg, d.agg_hg, fn);
    map_linear(s.risk_head, d.risk_head, fn);
    return d;
}

} // namespace

ParamsT<ad::Var> to_variables(ad::Tape& tape, const Params& p)
{
    return map_params<ad::Var>(p, [&](const Matrix& m) { return tape.variable(m); });
}

Params gradients(const ad::Tape& tape, const ParamsT<ad::Var>& vars)
{
    return map_params<Matrix>(vars, [&](const ad::Var& v) { return tape.grad(v); });
}

Trace<ad::Var> forward_taped(ad::Tape& tape, const SampleInput& input,
                             const ParamsT<ad::Var>& vars, const ModelConfig& config)
{
    validate_input(input, config);
    const PlainInputs in = to_plain_inputs(input);
    std::vector<ad::Var> pathways;
    pathways.reserve(in.pathways.size());
    for (const auto& m : in.pathways)
        pathways.push_back(tape.constant(m));
    return forward_trace(tape.constant(in.means), tape.constant(in.cardinality), pathways, vars,
                         config);
}

} // namespace dimafx::model
