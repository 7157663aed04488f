#pragma once

// Independent reference implementations used by the test suite and by the
// self-test. They work on plain double matrices with straightforward loops
// and share no arithmetic code with the engine.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "relhoi/categories.hpp"
#include "relhoi/evaluation.hpp"
#include "relhoi/geometry.hpp"
#include "relhoi/scene.hpp"
#include "relhoi/tensor.hpp"
#include "relhoi/weights.hpp"

namespace relhoi::verify {

using Matrix = std::vector<std::vector<double>>;

Matrix to_matrix(const Tensor& t);
std::vector<double> to_vector(const Tensor& t);
double max_abs_diff(const Tensor& actual, const Matrix& expected);

Matrix mat_mul(const Matrix& a, const Matrix& b);
Matrix mat_add(const Matrix& a, const Matrix& b);
Matrix affine(const Matrix& x, const Linear& layer);
Matrix perceptron(const Matrix& x, const Mlp& mlp);
Matrix row_softmax(const Matrix& x);
Matrix normalize_rows(const Matrix& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

Matrix attention_oracle(const Matrix& content_q, const Matrix& pos_q, const Matrix& content_k, const Matrix& pos_k,
                        const Matrix& value, const AttentionWeights& w, std::size_t heads);
Matrix block_oracle(const Matrix& queries, const Matrix& query_pos, const Matrix& memory, const Matrix& memory_pos,
                    const DecoderBlockWeights& w, std::size_t heads);
Matrix decoder_oracle(const Matrix& tokens, const Matrix& positions, const Matrix& memory, const Matrix& memory_pos,
                      const DecoderWeights& w, std::size_t heads);

std::array<double, 36> spatial_oracle(const Box& bi, const Box& bj, ImageSize img, double eps = 1e-3);

// Exhaustive filters over every ordered index tuple.
std::vector<PairIndex> brute_force_pairs(std::span<const Detection> detections, const CategoryTable& categories);
std::vector<TripletIndex> brute_force_triplets(std::span<const Detection> detections,
                                               const CategoryTable& categories, const KnowledgeBank& bank);

// For each pair, scan all triplets and add the matching rows (float, in
// triplet order), then add alpha times that sum to the binary row.
std::vector<float> fuse_oracle(const Tensor& binary, const Tensor& ternary, std::span<const std::size_t> assignment,
                               double alpha);

// Direct textbook focal term with explicit logs.
double focal_oracle(double logit, bool positive, double gamma, double focal_alpha);

// Precision at every recall step, each interpolated by a brute-force max over
// all later ranks, averaged over ground truths.
double ap_oracle(std::span<const RankedHit> hits, std::size_t num_gt);

}  // namespace relhoi::verify
