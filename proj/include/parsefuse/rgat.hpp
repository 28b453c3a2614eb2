#pragma once

#include <string>
#include <vector>

#include "parsefuse/ensemble_graph.hpp"
#include "parsefuse/tensor.hpp"

namespace parsefuse {

struct RGATConfig {
    int num_layers = 2;
    int num_heads = 4;
    int hidden_dim = 64;    // d_h = num_heads * per_head_dim
    int per_head_dim = 16;  // width each head contributes to the concatenation
    int input_dim = 0;      // set from the feature file
    int edge_type_dim = 0;  // 0 -> hidden_dim
    int max_position = 128;
    bool use_edge_types = true;  // off: plain GAT scoring, all edges behave alike
    bool use_positions = true;
    bool leaky_attention = false;  // conventional leaky variant of the score nonlinearity
    double leaky_slope = 0.2;
    double attention_dropout = 0.3;
    double hidden_dropout = 0.3;

    int resolved_edge_type_dim() const { return edge_type_dim > 0 ? edge_type_dim : hidden_dim; }
    void validate() const;
};

struct RGATHeadParams {
    Parameter value_proj;    // per_head_dim × hidden_dim
    Parameter pair_proj;     // hidden_dim × 2·hidden_dim
    Parameter attn_vec;      // hidden_dim
    Parameter edge_attn_vec; // edge_type_dim
};

struct RGATParams {
    Parameter input_projection;  // input_dim × hidden_dim
    Parameter position_table;    // max_position × input_dim
    Parameter edge_type_table;   // 3 × edge_type_dim
    std::vector<std::vector<RGATHeadParams>> layers;  // [layer][head]

    static RGATParams init(const RGATConfig& cfg, Rng& rng, const std::string& prefix = "rgat");
    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
};

/// Encoder-facing graph view: 0-based endpoints in the canonical edge order of
/// the EnsembleGraph it came from. Message for edge e flows src[e] -> dst[e].
struct GraphTensors {
    int n = 0;
    std::vector<int> src, dst;
    std::vector<int> etype;
};

GraphTensors to_graph_tensors(const EnsembleGraph& g);

/// X'[i] = X[i] + position_table[i] by absolute 1-based position; identity when
/// positions are disabled. Throws PositionOverflow for sentences longer than
/// the table.
Tensor add_position_embeddings(const Tensor& x, const RGATConfig& cfg, const RGATParams& params);

/// Normalized attention of one layer/head over each node's in-edges (self-loop
/// included), in graph edge order. Forward-only.
std::vector<double> attention_scores(const Tensor& h, const GraphTensors& graph,
                                     const RGATConfig& cfg, const RGATParams& params, int layer,
                                     int head);

/// One relational attention layer: per head, the attention-weighted sum of
/// neighbor value projections through the score nonlinearity, heads
/// concatenated back to hidden_dim. Dropout on attention weights and on the
/// output when training.
Tensor rgat_layer_forward(const Tensor& h, const GraphTensors& graph, const RGATConfig& cfg,
                          const RGATParams& params, int layer, bool training, Rng* dropout_rng,
                          std::vector<std::vector<double>>* alphas_out = nullptr);

/// Position embeddings, input projection, then the layer stack.
/// `alphas_out`, when given, receives one alpha vector per (layer, head).
Tensor encode(const Tensor& x, const GraphTensors& graph, const RGATConfig& cfg,
              const RGATParams& params, bool training, Rng* dropout_rng,
              std::vector<std::vector<double>>* alphas_out = nullptr);

}  // namespace parsefuse
