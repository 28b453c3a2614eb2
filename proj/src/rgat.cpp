#include "parsefuse/rgat.hpp"

#include <cmath>

namespace parsefuse {

void RGATConfig::validate() const {
    if (num_layers < 1) throw InvalidConfig("num_layers must be >= 1");
    if (num_heads < 1 || per_head_dim < 1 || hidden_dim < 1 || input_dim < 1 || max_position < 1)
        throw InvalidConfig("all dimensions must be >= 1");
    if (hidden_dim != num_heads * per_head_dim)
        throw InvalidConfig("hidden_dim (" + std::to_string(hidden_dim) +
                            ") must equal num_heads*per_head_dim (" +
                            std::to_string(num_heads * per_head_dim) + ")");
    if (edge_type_dim < 0) throw InvalidConfig("edge_type_dim must be >= 0");
    if (attention_dropout < 0 || attention_dropout >= 1 || hidden_dropout < 0 || hidden_dropout >= 1)
        throw InvalidConfig("dropout rates must be in [0,1)");
}

namespace {

Parameter xavier_matrix(const std::string& name, int rows, int cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    std::vector<double> data(static_cast<size_t>(rows) * cols);
    for (double& v : data) v = rng.uniform(-bound, bound);
    return {name, Tensor::from({rows, cols}, std::move(data), true), true};
}

Parameter xavier_vector(const std::string& name, int dim, Rng& rng) {
    const double bound = std::sqrt(6.0 / (dim + 1));
    std::vector<double> data(dim);
    for (double& v : data) v = rng.uniform(-bound, bound);
    return {name, Tensor::from({dim}, std::move(data), true), true};
}

Parameter embedding_table(const std::string& name, int rows, int cols, Rng& rng) {
    std::vector<double> data(static_cast<size_t>(rows) * cols);
    for (double& v : data) v = rng.normal(0.0, 0.02);
    return {name, Tensor::from({rows, cols}, std::move(data), true), true};
}

}  // namespace

RGATParams RGATParams::init(const RGATConfig& cfg, Rng& rng, const std::string& prefix) {
    cfg.validate();
    RGATParams p;
    p.input_projection = xavier_matrix(prefix + ".input_proj", cfg.input_dim, cfg.hidden_dim, rng);
    p.position_table = embedding_table(prefix + ".position_table", cfg.max_position, cfg.input_dim, rng);
    p.edge_type_table = embedding_table(prefix + ".edge_type_table", 3, cfg.resolved_edge_type_dim(), rng);
    p.layers.resize(cfg.num_layers);
    for (int l = 0; l < cfg.num_layers; ++l) {
        p.layers[l].reserve(cfg.num_heads);
        for (int k = 0; k < cfg.num_heads; ++k) {
            const std::string hp = prefix + ".layer" + std::to_string(l) + ".head" + std::to_string(k);
            RGATHeadParams head;
            head.value_proj = xavier_matrix(hp + ".value_proj", cfg.per_head_dim, cfg.hidden_dim, rng);
            head.pair_proj = xavier_matrix(hp + ".pair_proj", cfg.hidden_dim, 2 * cfg.hidden_dim, rng);
            head.attn_vec = xavier_vector(hp + ".attn_vec", cfg.hidden_dim, rng);
            head.edge_attn_vec = xavier_vector(hp + ".edge_attn_vec", cfg.resolved_edge_type_dim(), rng);
            p.layers[l].push_back(std::move(head));
        }
    }
    return p;
}

std::vector<Parameter*> RGATParams::all() {
    std::vector<Parameter*> out{&input_projection, &position_table, &edge_type_table};
    for (auto& layer : layers)
        for (auto& head : layer) {
            out.push_back(&head.value_proj);
            out.push_back(&head.pair_proj);
            out.push_back(&head.attn_vec);
            out.push_back(&head.edge_attn_vec);
        }
    return out;
}

std::vector<const Parameter*> RGATParams::all() const {
    auto mutable_all = const_cast<RGATParams*>(this)->all();
    return {mutable_all.begin(), mutable_all.end()};
}

GraphTensors to_graph_tensors(const EnsembleGraph& g) {
    GraphTensors t;
    t.n = g.n;
    t.src.reserve(g.edges.size());
    t.dst.reserve(g.edges.size());
    t.etype.reserve(g.edges.size());
    for (const TypedEdge& e : g.edges) {
        t.src.push_back(e.src - 1);
        t.dst.push_back(e.dst - 1);
        t.etype.push_back(static_cast<int>(e.etype));
    }
    return t;
}

Tensor add_position_embeddings(const Tensor& x, const RGATConfig& cfg, const RGATParams& params) {
    if (!cfg.use_positions) return x;
    const int n = x.rows();
    if (n > cfg.max_position)
        throw PositionOverflow("sentence length " + std::to_string(n) + " exceeds max_position " +
                               std::to_string(cfg.max_position));
    std::vector<int> positions(n);
    for (int i = 0; i < n; ++i) positions[i] = i;  // row i holds 1-based position i+1
    return add(x, take_rows(params.position_table.tensor, positions));
}

namespace {

Tensor score_nonlinearity(const Tensor& s, const RGATConfig& cfg) {
    return cfg.leaky_attention ? leaky_relu(s, cfg.leaky_slope) : relu(s);
}

/// Unnormalized-then-normalized attention for one layer/head as a graph op.
Tensor attention_alpha(const Tensor& h, const GraphTensors& graph, const RGATConfig& cfg,
                       const RGATParams& params, int layer, int head) {
    const RGATHeadParams& hp = params.layers[layer][head];
    Tensor h_dst = take_rows(h, graph.dst);
    Tensor h_src = take_rows(h, graph.src);
    Tensor pairs = concat(1, {h_dst, h_src});             // (h_i ‖ h_j), i = dst
    Tensor projected = matmul_nt(pairs, hp.pair_proj.tensor);
    Tensor scores = matvec(projected, hp.attn_vec.tensor);
    if (cfg.use_edge_types) {
        Tensor type_rows = take_rows(params.edge_type_table.tensor, graph.etype);
        scores = add(scores, matvec(type_rows, hp.edge_attn_vec.tensor));
    }
    return segment_softmax(score_nonlinearity(scores, cfg), graph.dst, graph.n);
}

}  // namespace

std::vector<double> attention_scores(const Tensor& h, const GraphTensors& graph,
                                     const RGATConfig& cfg, const RGATParams& params, int layer,
                                     int head) {
    return attention_alpha(h, graph, cfg, params, layer, head).data();
}

Tensor rgat_layer_forward(const Tensor& h, const GraphTensors& graph, const RGATConfig& cfg,
                          const RGATParams& params, int layer, bool training, Rng* dropout_rng,
                          std::vector<std::vector<double>>* alphas_out) {
    if (h.cols() != cfg.hidden_dim)
        throw ShapeMismatch("rgat layer input width " + std::to_string(h.cols()));
    std::vector<Tensor> head_outputs;
    head_outputs.reserve(cfg.num_heads);
    for (int k = 0; k < cfg.num_heads; ++k) {
        Tensor alpha = attention_alpha(h, graph, cfg, params, layer, k);
        if (alphas_out) alphas_out->push_back(alpha.data());
        if (training && dropout_rng) alpha = dropout(alpha, cfg.attention_dropout, training, *dropout_rng);
        Tensor values = matmul_nt(h, params.layers[layer][k].value_proj.tensor);
        Tensor messages = scale_rows(take_rows(values, graph.src), alpha);
        head_outputs.push_back(relu(segment_sum_rows(messages, graph.dst, graph.n)));
    }
    Tensor out = cfg.num_heads == 1 ? head_outputs[0] : concat(1, head_outputs);
    if (training && dropout_rng) out = dropout(out, cfg.hidden_dropout, training, *dropout_rng);
    return out;
}

Tensor encode(const Tensor& x, const GraphTensors& graph, const RGATConfig& cfg,
              const RGATParams& params, bool training, Rng* dropout_rng,
              std::vector<std::vector<double>>* alphas_out) {
    if (x.rows() != graph.n)
        throw DimensionMismatch("feature rows " + std::to_string(x.rows()) + " vs graph nodes " +
                                std::to_string(graph.n));
    if (x.cols() != cfg.input_dim)
        throw DimensionMismatch("feature width " + std::to_string(x.cols()) + " vs input_dim " +
                                std::to_string(cfg.input_dim));
    Tensor h = matmul(add_position_embeddings(x, cfg, params), params.input_projection.tensor);
    for (int l = 0; l < cfg.num_layers; ++l)
        h = rgat_layer_forward(h, graph, cfg, params, l, training, dropout_rng, alphas_out);
    return h;
}

}  // namespace parsefuse
