#include "relhoi/tokens.hpp"

#include <map>
#include <string>

#include "relhoi/error.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "token-builder";

std::vector<Box> boxes_of(std::span<const Detection> detections) {
    std::vector<Box> out;
    out.reserve(detections.size());
    for (const auto& d : detections) out.push_back(d.box);
    return out;
}

void require_aligned(const EnrichedUnary& enriched, std::size_t n) {
    if (enriched.tokens.rank() != 2 || enriched.tokens.rows() != n) {
        fail(ErrorKind::Shape, kModule,
             "enriched tokens " + dims_to_string(enriched.tokens.dims()) + " not aligned with " + std::to_string(n) +
                 " detections");
    }
}

}  // namespace

Tensor unary_matrix(std::span<const Detection> detections, std::size_t feature_dim) {
    std::vector<float> data;
    data.reserve(detections.size() * feature_dim);
    for (std::size_t i = 0; i < detections.size(); ++i) {
        const auto& f = detections[i].feature;
        if (f.size() != feature_dim) {
            fail(ErrorKind::Shape, kModule,
                 "detection " + std::to_string(i) + " feature has length " + std::to_string(f.size()) +
                     ", expected " + std::to_string(feature_dim));
        }
        data.insert(data.end(), f.begin(), f.end());
    }
    return Tensor({detections.size(), feature_dim}, std::move(data));
}

EnrichedUnary enrich_unary(std::span<const Detection> detections, const Tensor& object_text, const Mlp& unary_mlp) {
    const std::size_t text_dim = object_text.cols();
    const std::size_t input = unary_mlp.first.in_features();
    if (input <= text_dim) fail(ErrorKind::Shape, kModule, "unary mlp input narrower than text embedding");
    const std::size_t feature_dim = input - text_dim;

    std::vector<std::size_t> cats;
    cats.reserve(detections.size());
    for (std::size_t i = 0; i < detections.size(); ++i) {
        const int c = detections[i].category;
        if (c < 0 || static_cast<std::size_t>(c) >= object_text.rows()) {
            fail(ErrorKind::Validation, kModule,
                 "detection " + std::to_string(i) + ": no text embedding for category " + std::to_string(c));
        }
        cats.push_back(static_cast<std::size_t>(c));
    }
    const Tensor parts[] = {unary_matrix(detections, feature_dim), ops::gather_rows(object_text, cats)};
    return EnrichedUnary{ops::mlp(ops::concat_cols(parts), unary_mlp)};
}

std::vector<PairIndex> enumerate_pairs(std::span<const Detection> detections, const CategoryTable& categories) {
    std::vector<PairIndex> pairs;
    const std::size_t n = detections.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!categories.is_human(detections[i].category)) continue;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) pairs.emplace_back(i, j);
    }
    return pairs;
}

std::vector<TripletIndex> enumerate_triplets(std::span<const Detection> detections, const CategoryTable& categories,
                                             const KnowledgeBank& bank) {
    std::vector<TripletIndex> triplets;
    if (bank.empty()) return triplets;
    const std::size_t n = detections.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!categories.is_human(detections[i].category)) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                if (bank.licenses(detections[j].category, detections[k].category)) triplets.push_back({i, j, k});
            }
        }
    }
    return triplets;
}

PairSet build_pairs(std::span<const Detection> detections, const CategoryTable& categories,
                    const EnrichedUnary& enriched, const Mlp& pair_mlp, ImageSize img, const Mlp& positional_mlp) {
    require_aligned(enriched, detections.size());
    PairSet set;
    set.pairs = enumerate_pairs(detections, categories);
    std::vector<std::size_t> humans, objects;
    for (const auto& [i, j] : set.pairs) {
        humans.push_back(i);
        objects.push_back(j);
    }
    const Tensor parts[] = {ops::gather_rows(enriched.tokens, humans), ops::gather_rows(enriched.tokens, objects)};
    set.tokens = ops::mlp(ops::concat_cols(parts), pair_mlp);
    const auto boxes = boxes_of(detections);
    set.positions = binary_positions(set.pairs, boxes, img, positional_mlp);
    return set;
}

TripletSet build_triplets(std::span<const Detection> detections, const CategoryTable& categories,
                          const EnrichedUnary& enriched, const KnowledgeBank& bank, const PairSet& pairs,
                          const Mlp& triplet_mlp, ImageSize img, const Mlp& positional_mlp) {
    require_aligned(enriched, detections.size());
    TripletSet set;
    set.triplets = enumerate_triplets(detections, categories, bank);

    std::map<PairIndex, std::size_t> pair_row;
    for (std::size_t l = 0; l < pairs.pairs.size(); ++l) pair_row.emplace(pairs.pairs[l], l);

    std::vector<std::size_t> hs, os, ts;
    for (const auto& t : set.triplets) {
        const auto it = pair_row.find({t.human, t.object});
        if (it == pair_row.end()) {
            fail(ErrorKind::Internal, kModule,
                 "triplet (" + std::to_string(t.human) + "," + std::to_string(t.object) + "," + std::to_string(t.tool) +
                     ") has no matching pair");
        }
        set.pair_assignment.push_back(it->second);
        hs.push_back(t.human);
        os.push_back(t.object);
        ts.push_back(t.tool);
    }
    const Tensor parts[] = {ops::gather_rows(enriched.tokens, hs), ops::gather_rows(enriched.tokens, os),
                            ops::gather_rows(enriched.tokens, ts)};
    set.tokens = ops::mlp(ops::concat_cols(parts), triplet_mlp);
    const auto boxes = boxes_of(detections);
    set.positions = ternary_positions(set.triplets, boxes, img, positional_mlp);
    return set;
}

}  // namespace relhoi
