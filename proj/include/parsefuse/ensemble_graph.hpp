#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "parsefuse/conllu.hpp"

namespace parsefuse {

enum class EdgeType : uint8_t { ParentToChild = 0, ChildToParent = 1, SelfLoop = 2 };

const char* edge_type_name(EdgeType t);

struct TypedEdge {
    int src = 0;  // 1-based token index
    int dst = 0;
    EdgeType etype = EdgeType::SelfLoop;

    auto operator<=>(const TypedEdge&) const = default;
};

/// Typed directed edges over a shared token set: per dependency edge h->d both
/// (h,d,ParentToChild) and (d,h,ChildToParent), plus one self-loop per node.
/// Edge set is deduplicated and kept sorted by (src, dst, etype).
struct EnsembleGraph {
    int n = 0;
    std::vector<TypedEdge> edges;
    std::vector<std::string> sources;

    bool contains(const TypedEdge& e) const;
    /// Checks dedup/sort order, self-loop count, src=dst iff SelfLoop, and
    /// reciprocal closure. Throws Error on violation.
    void check_invariants() const;
};

EnsembleGraph build_typed_graph(const DependencyTree& tree);

EnsembleGraph union_graphs(const std::vector<EnsembleGraph>& graphs);

/// Keeps typed edges present in every input; self-loops always survive.
EnsembleGraph intersect_graphs(const std::vector<EnsembleGraph>& graphs);

/// Longest shortest directed path over all ordered node pairs, ignoring
/// self-loops. nullopt when some pair is unreachable.
std::optional<int> graph_diameter(const EnsembleGraph& graph);

}  // namespace parsefuse
