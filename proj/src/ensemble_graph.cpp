#include "parsefuse/ensemble_graph.hpp"

#include <algorithm>
#include <deque>

#include "parsefuse/errors.hpp"

namespace parsefuse {

const char* edge_type_name(EdgeType t) {
    switch (t) {
        case EdgeType::ParentToChild: return "p2c";
        case EdgeType::ChildToParent: return "c2p";
        case EdgeType::SelfLoop: return "self";
    }
    return "?";
}

bool EnsembleGraph::contains(const TypedEdge& e) const {
    return std::binary_search(edges.begin(), edges.end(), e);
}

void EnsembleGraph::check_invariants() const {
    if (!std::is_sorted(edges.begin(), edges.end()))
        throw Error("ensemble graph edges not sorted");
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
        throw Error("ensemble graph has duplicate edges");
    int self_loops = 0;
    for (const TypedEdge& e : edges) {
        if (e.src < 1 || e.src > n || e.dst < 1 || e.dst > n)
            throw Error("edge endpoint out of range");
        if ((e.etype == EdgeType::SelfLoop) != (e.src == e.dst))
            throw Error("self-loop type inconsistent with endpoints");
        if (e.etype == EdgeType::SelfLoop) ++self_loops;
        if (e.etype == EdgeType::ParentToChild &&
            !contains({e.dst, e.src, EdgeType::ChildToParent}))
            throw Error("missing reciprocal child-to-parent edge");
        if (e.etype == EdgeType::ChildToParent &&
            !contains({e.dst, e.src, EdgeType::ParentToChild}))
            throw Error("missing reciprocal parent-to-child edge");
    }
    if (self_loops != n) throw Error("expected exactly one self-loop per node");
}

namespace {

void sort_dedup(std::vector<TypedEdge>& edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

void require_same_n(const std::vector<EnsembleGraph>& graphs) {
    if (graphs.empty()) throw NodeCountMismatch("no graphs given");
    for (const auto& g : graphs)
        if (g.n != graphs[0].n)
            throw NodeCountMismatch(std::to_string(g.n) + " vs " + std::to_string(graphs[0].n));
}

std::vector<std::string> merged_sources(const std::vector<EnsembleGraph>& graphs) {
    std::vector<std::string> out;
    for (const auto& g : graphs) out.insert(out.end(), g.sources.begin(), g.sources.end());
    return out;
}

}  // namespace

EnsembleGraph build_typed_graph(const DependencyTree& tree) {
    validate_tree(tree);
    EnsembleGraph g;
    g.n = tree.size();
    g.sources = {tree.parser_id};
    g.edges.reserve(static_cast<size_t>(3 * g.n));
    for (const Token& t : tree.tokens) {
        g.edges.push_back({t.index, t.index, EdgeType::SelfLoop});
        if (t.head == 0) continue;  // the root's virtual head contributes no edge
        g.edges.push_back({t.head, t.index, EdgeType::ParentToChild});
        g.edges.push_back({t.index, t.head, EdgeType::ChildToParent});
    }
    sort_dedup(g.edges);
    return g;
}

EnsembleGraph union_graphs(const std::vector<EnsembleGraph>& graphs) {
    require_same_n(graphs);
    EnsembleGraph out;
    out.n = graphs[0].n;
    out.sources = merged_sources(graphs);
    for (const auto& g : graphs) out.edges.insert(out.edges.end(), g.edges.begin(), g.edges.end());
    sort_dedup(out.edges);
    return out;
}

EnsembleGraph intersect_graphs(const std::vector<EnsembleGraph>& graphs) {
    require_same_n(graphs);
    EnsembleGraph out;
    out.n = graphs[0].n;
    out.sources = merged_sources(graphs);
    for (const TypedEdge& e : graphs[0].edges) {
        bool everywhere = true;
        for (size_t m = 1; m < graphs.size() && everywhere; ++m) everywhere = graphs[m].contains(e);
        if (everywhere || e.etype == EdgeType::SelfLoop) out.edges.push_back(e);
    }
    sort_dedup(out.edges);
    return out;
}

std::optional<int> graph_diameter(const EnsembleGraph& graph) {
    const int n = graph.n;
    if (n <= 1) return 0;
    std::vector<std::vector<int>> adj(n + 1);
    for (const TypedEdge& e : graph.edges)
        if (e.etype != EdgeType::SelfLoop) adj[e.src].push_back(e.dst);

    int diameter = 0;
    std::vector<int> dist(n + 1);
    for (int s = 1; s <= n; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[s] = 0;
        std::deque<int> queue{s};
        int reached = 1;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int v : adj[u]) {
                if (dist[v] == -1) {
                    dist[v] = dist[u] + 1;
                    diameter = std::max(diameter, dist[v]);
                    queue.push_back(v);
                    ++reached;
                }
            }
        }
        if (reached != n) return std::nullopt;
    }
    return diameter;
}

}  // namespace parsefuse
