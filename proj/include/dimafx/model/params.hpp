#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dimafx/numerics/tensor.hpp"

namespace dimafx::model {

/// Network dimensions. D is the unimodal token width, D_z the fused width.
struct ModelConfig {
    Index prototypes = 16;
    Index patch_dim = 32;
    std::vector<Index> pathway_sizes; // genes per pathway, catalog order
    Index d = 64;
    Index d_z = 64;
    Index hidden = 128;             // SNN hidden width
    Index pathway_token_width = 4;  // concatenated after the SNN output
    Index heads = 1;
    bool residual = false;          // add the query tokens to the attention output (needs d == d_z)

    Index pathways() const { return static_cast<Index>(pathway_sizes.size()); }
    Index snn_out() const { return d - pathway_token_width; }
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// y = x W + b with W: in x out and b: 1 x out.
template <typename M>
struct LinearT {
    M weight;
    M bias;
};

template <typename M>
struct AttentionBlockT {
    LinearT<M> query; // d -> d_z
    LinearT<M> key;   // d -> d_z
    LinearT<M> value; // d -> d_z
    LinearT<M> output; // d_z -> d_z
};

template <typename M>
struct PathwayEncoderT {
    LinearT<M> hidden; // genes -> hidden
    LinearT<M> out;    // hidden -> d - token width
    M token;           // 1 x token width
};

/**
 * Every learnable array of the network. Stream suffixes name (query, key)
 * modalities: hh = WSI self-attention, gg = pathway self-attention,
 * gh = WSI queries over pathway keys, hg = pathway queries over WSI keys.
 */
template <typename M>
struct ParamsT {
    LinearT<M> wsi_reduce; // patch_dim -> d - 1
    M wsi_tokens;          // prototypes x d, added element-wise
    std::vector<PathwayEncoderT<M>> pathways;
    AttentionBlockT<M> attn_hh, attn_gg, attn_gh, attn_hg;
    LinearT<M> agg_hh, agg_gg, agg_gh, agg_hg; // d_z -> 1
    LinearT<M> risk_head;                      // 4 d_z -> 1
};

namespace detail {

template <typename L, typename Fn>
void visit_linear(const std::string& prefix, L& l, Fn& fn)
{
    fn(prefix + ".weight", l.weight);
    fn(prefix + ".bias", l.bias);
}

template <typename A, typename Fn>
void visit_attention(const std::string& prefix, A& a, Fn& fn)
{
    visit_linear(prefix + ".query", a.query, fn);
    visit_linear(prefix + ".key", a.key, fn);
    visit_linear(prefix + ".value", a.value, fn);
    visit_linear(prefix + ".output", a.output, fn);
}

} // namespace detail

/// Calls fn(name, array) for every parameter in a fixed order. Works on const
/// and mutable ParamsT, and on pairs of parameter sets via visit_params2.
template <typename P, typename Fn>
void visit_params(P& p, Fn&& fn)
{
    detail::visit_linear("wsi_reduce", p.wsi_reduce, fn);
    fn(std::string("wsi_tokens"), p.wsi_tokens);
    for (std::size_t i = 0; i < p.pathways.size(); ++i) {
        const std::string prefix = "pathway." + std::to_string(i);
        detail::visit_linear(prefix + ".hidden", p.pathways[i].hidden, fn);
        detail::visit_linear(prefix + ".out", p.pathways[i].out, fn);
        fn(prefix + ".token", p.pathways[i].token);
    }
    detail::visit_attention("attn_hh", p.attn_hh, fn);
    detail::visit_attention("attn_gg", p.attn_gg, fn);
    detail::visit_attention("attn_gh", p.attn_gh, fn);
    detail::visit_attention("attn_hg", p.attn_hg, fn);
    detail::visit_linear("agg_hh", p.agg_hh, fn);
    detail::visit_linear("agg_gg", p.agg_gg, fn);
    detail::visit_linear("agg_gh", p.agg_gh, fn);
    detail::visit_linear("agg_hg", p.agg_hg, fn);
    detail::visit_linear("risk_head", p.risk_head, fn);
}

/// Parallel visit over two parameter sets with identical structure.
template <typename P, typename Q, typename Fn>
void visit_params2(P& a, Q& b, Fn&& fn)
{
    using AT = std::remove_cvref_t<decltype(a.wsi_tokens)>;
    std::vector<AT*> left;
    visit_params(a, [&](const std::string&, auto& m) { left.push_back(const_cast<AT*>(&m)); });
    std::size_t i = 0;
    visit_params(b, [&](const std::string& name, auto& m) { fn(name, *left.at(i++), m); });
}

using Params = ParamsT<Matrix>;

/// Allocates zero-filled parameters with the shapes implied by config.
Params zero_params(const ModelConfig& config);

/// Uniform(+-1/sqrt(fan_in)) for linear maps, zeros for tokens.
Params init_params(const ModelConfig& config, std::uint64_t seed);

std::size_t parameter_count(const Params& p);

/// Throws NumericalError on shape mismatch against config or non-finite entries.
void validate_params(const Params& p, const ModelConfig& config);

/// A trained or initialized network.
struct ModelParams {
    ModelConfig config;
    Params params;
    std::uint64_t init_seed = 0;
};

} // namespace dimafx::model
