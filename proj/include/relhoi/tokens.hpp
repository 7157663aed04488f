#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "relhoi/categories.hpp"
#include "relhoi/geometry.hpp"
#include "relhoi/scene.hpp"
#include "relhoi/tensor.hpp"

namespace relhoi {

// u'_i = mlp(u_i | e_{c_i}), one row per detection in input order. [n x D]
struct EnrichedUnary {
    Tensor tokens;
};

// Binary token set: every ordered (human i, other j), i != j, in
// lexicographic (i, j) order.
struct PairSet {
    std::vector<PairIndex> pairs;
    Tensor tokens;     // G0, [m x D]
    Tensor positions;  // X,  [m x D]

    std::size_t size() const noexcept { return pairs.size(); }
};

// Ternary token set: (human i, object j, tool k), pairwise distinct, with
// (c_j, c_k) in the bank, in lexicographic (i, j, k) order.
struct TripletSet {
    std::vector<TripletIndex> triplets;
    Tensor tokens;                              // T0, [r x D]
    Tensor positions;                           // W,  [r x D]
    std::vector<std::size_t> pair_assignment;  // row of the (i, j) pair in PairSet

    std::size_t size() const noexcept { return triplets.size(); }
};

// Raw per-detection unary features stacked as [n x C].
Tensor unary_matrix(std::span<const Detection> detections, std::size_t feature_dim);

EnrichedUnary enrich_unary(std::span<const Detection> detections, const Tensor& object_text, const Mlp& unary_mlp);

// Index enumeration alone; used by the builders and by tooling.
std::vector<PairIndex> enumerate_pairs(std::span<const Detection> detections, const CategoryTable& categories);
std::vector<TripletIndex> enumerate_triplets(std::span<const Detection> detections, const CategoryTable& categories,
                                             const KnowledgeBank& bank);

PairSet build_pairs(std::span<const Detection> detections, const CategoryTable& categories,
                    const EnrichedUnary& enriched, const Mlp& pair_mlp, ImageSize img, const Mlp& positional_mlp);

TripletSet build_triplets(std::span<const Detection> detections, const CategoryTable& categories,
                          const EnrichedUnary& enriched, const KnowledgeBank& bank, const PairSet& pairs,
                          const Mlp& triplet_mlp, ImageSize img, const Mlp& positional_mlp);

}  // namespace relhoi
