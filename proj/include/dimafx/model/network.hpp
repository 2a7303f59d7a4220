#pragma once

// The fusion network as templates over the matrix type M. M = Matrix runs a
// plain evaluation; M = ad::Var records onto a tape for training. Both share
// this single definition of the composition.

#include <cmath>
#include <vector>

#include "dimafx/model/params.hpp"
#include "dimafx/numerics/autodiff.hpp"
#include "dimafx/numerics/kernels.hpp"
#include "dimafx/prototyping/gmm.hpp"

namespace dimafx::model {

template <typename M>
M linear(const M& x, const LinearT<M>& l)
{
    return add_row(matmul(x, l.weight), l.bias);
}

/// Z_h: row k = [reduce(mean_k) | cardinality_k] + token_k.
template <typename M>
M encode_wsi(const M& means, const M& cardinality, const ParamsT<M>& p)
{
    if (means.rows() != p.wsi_tokens.rows() || cardinality.rows() != means.rows() ||
        cardinality.cols() != 1 || means.cols() != p.wsi_reduce.weight.rows())
        throw NumericalError("encode_wsi: prototype shape does not match parameters");
    M rows = hconcat(std::vector<M>{linear(means, p.wsi_reduce), cardinality});
    return rows + p.wsi_tokens;
}

/// Z_g: row i = [linear(selu(linear(genes_i))) | token_i].
template <typename M>
M encode_pathways(const std::vector<M>& inputs, const ParamsT<M>& p)
{
    if (inputs.size() != p.pathways.size())
        throw NumericalError("encode_pathways: pathway count does not match parameters");
    std::vector<M> rows;
    rows.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto& enc = p.pathways[i];
        if (inputs[i].rows() != 1 || inputs[i].cols() != enc.hidden.weight.rows())
            throw NumericalError("encode_pathways: pathway " + std::to_string(i) +
                                 " input length does not match its encoder");
        const M h = selu(linear(inputs[i], enc.hidden));
        const M o = linear(h, enc.out);
        rows.push_back(enc.token.cols() > 0 ? hconcat(std::vector<M>{o, enc.token}) : o);
    }
    return vstack(rows);
}

template <typename M>
struct AttentionOut {
    M tokens;    // queries x d_z
    M attention; // queries x keys, averaged over heads
};

/// Scaled dot-product attention of q_src over kv_src, followed by the output projection.
template <typename M>
AttentionOut<M> attention(const M& q_src, const M& kv_src, const AttentionBlockT<M>& b,
                          Index heads = 1, bool residual = false)
{
    const M q = linear(q_src, b.query);
    const M k = linear(kv_src, b.key);
    const M v = linear(kv_src, b.value);
    const Index width = q.cols() / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(width));
    std::vector<M> outs;
    M attn_sum;
    for (Index h = 0; h < heads; ++h) {
        const M qh = heads == 1 ? q : block_cols(q, h * width, width);
        const M kh = heads == 1 ? k : block_cols(k, h * width, width);
        const M vh = heads == 1 ? v : block_cols(v, h * width, width);
        const M a = softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt));
        outs.push_back(matmul(a, vh));
        if (h == 0)
            attn_sum = a;
        else
            attn_sum = attn_sum + a;
    }
    const M joined = heads == 1 ? outs.front() : hconcat(outs);
    M out = linear(joined, b.output);
    if (residual)
        out = out + q_src;
    return {out, heads == 1 ? attn_sum : scale(attn_sum, 1.0 / static_cast<double>(heads))};
}

template <typename M>
struct Pooled {
    M vector;  // 1 x d_z
    M weights; // 1 x tokens
};

/// Attention pooling: w = softmax(tokens a + c), pooled = w tokens.
template <typename M>
Pooled<M> aggregate(const M& tokens, const LinearT<M>& agg)
{
    const M w = softmax_rows(transpose(linear(tokens, agg)));
    return {matmul(w, tokens), w};
}

/// Post-fusion token sets of the four streams.
template <typename M>
struct Streams {
    M hh, gg, gh, hg;
    M attn_hh, attn_gg, attn_gh, attn_hg;
};

template <typename M>
Streams<M> fuse(const M& zh, const M& zg, const ParamsT<M>& p, const ModelConfig& c)
{
    auto hh = attention(zh, zh, p.attn_hh, c.heads, c.residual);
    auto gg = attention(zg, zg, p.attn_gg, c.heads, c.residual);
    auto gh = attention(zh, zg, p.attn_gh, c.heads, c.residual);
    auto hg = attention(zg, zh, p.attn_hg, c.heads, c.residual);
    return {hh.tokens, gg.tokens, gh.tokens, hg.tokens,
            hh.attention, gg.attention, gh.attention, hg.attention};
}

template <typename M>
struct PooledStreams {
    Pooled<M> hh, gg, gh, hg;
};

template <typename M>
PooledStreams<M> pool(const Streams<M>& s, const ParamsT<M>& p)
{
    return {aggregate(s.hh, p.agg_hh), aggregate(s.gg, p.agg_gg), aggregate(s.gh, p.agg_gh),
            aggregate(s.hg, p.agg_hg)};
}

/// Risk from pooled vectors, concatenated as [z_gg | z_hh | z_hg | z_gh].
template <typename M>
M risk_from_pooled(const M& z_gg, const M& z_hh, const M& z_hg, const M& z_gh, const ParamsT<M>& p)
{
    return linear(hconcat(std::vector<M>{z_gg, z_hh, z_hg, z_gh}), p.risk_head);
}

/// Full record of one forward evaluation.
template <typename M>
struct Trace {
    M zh, zg;
    Streams<M> streams;
    PooledStreams<M> pooled;
    M risk; // 1 x 1
};

template <typename M>
Trace<M> forward_trace(const M& means, const M& cardinality, const std::vector<M>& pathway_inputs,
                       const ParamsT<M>& p, const ModelConfig& c)
{
    Trace<M> t;
    t.zh = encode_wsi(means, cardinality, p);
    t.zg = encode_pathways(pathway_inputs, p);
    t.streams = fuse(t.zh, t.zg, p, c);
    t.pooled = pool(t.streams, p);
    t.risk = risk_from_pooled(t.pooled.gg.vector, t.pooled.hh.vector, t.pooled.hg.vector,
                              t.pooled.gh.vector, p);
    return t;
}

// ---------------------------------------------------------------------------
// Plain-evaluation interface.

/// One sample's network input.
struct SampleInput {
    prototyping::PrototypeFeatures prototypes;
    std::vector<Vector> pathways;
};

/// All intermediate representations for one sample.
struct DisentangledBundle {
    Matrix zh, zg;                    // unimodal tokens
    Matrix zp_hh, zp_gg, zp_gh, zp_hg; // post-fusion tokens
    RowVector z_hh, z_gg, z_gh, z_hg;  // pooled
    Matrix a_hh, a_gg, a_gh, a_hg;     // attention matrices
    RowVector w_hh, w_gg, w_gh, w_hg;  // aggregation weights
};

struct RiskOutput {
    double risk = 0.0;
    DisentangledBundle bundle;
};

/// Plain inputs in the template's matrix form: means, cardinality column, 1 x g rows.
struct PlainInputs {
    Matrix means;
    Matrix cardinality;
    std::vector<Matrix> pathways;
};

PlainInputs to_plain_inputs(const SampleInput& input);

RiskOutput forward(const SampleInput& input, const ModelParams& model);

DisentangledBundle to_bundle(const Trace<Matrix>& t);

/// Checks the input against the model's configured shapes.
void validate_input(const SampleInput& input, const ModelConfig& config);

// ---------------------------------------------------------------------------
// Taped interface.

ParamsT<ad::Var> to_variables(ad::Tape& tape, const Params& p);

/// Gradients of the last backward sweep, in Params layout.
Params gradients(const ad::Tape& tape, const ParamsT<ad::Var>& vars);

Trace<ad::Var> forward_taped(ad::Tape& tape, const SampleInput& input,
                             const ParamsT<ad::Var>& vars, const ModelConfig& config);

} // namespace dimafx::model
