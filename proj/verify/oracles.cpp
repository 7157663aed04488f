#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace relhoi::verify {

Matrix to_matrix(const Tensor& t) {
    if (t.rank() != 2) throw std::invalid_argument("to_matrix needs a rank-2 tensor");
    Matrix out(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t r = 0; r < t.rows(); ++r)
        for (std::size_t c = 0; c < t.cols(); ++c) out[r][c] = t.at(r, c);
    return out;
}

std::vector<double> to_vector(const Tensor& t) {
    std::vector<double> out;
    for (float v : t.values()) out.push_back(v);
    return out;
}

double max_abs_diff(const Tensor& actual, const Matrix& expected) {
    if (actual.rows() != expected.size()) return INFINITY;
    double worst = 0;
    for (std::size_t r = 0; r < expected.size(); ++r) {
        if (actual.cols() != expected[r].size()) return INFINITY;
        for (std::size_t c = 0; c < expected[r].size(); ++c)
            worst = std::max(worst, std::fabs(double{actual.at(r, c)} - expected[r][c]));
    }
    return worst;
}

Matrix mat_mul(const Matrix& a, const Matrix& b) {
    const std::size_t n = b.empty() ? 0 : b[0].size();
    Matrix out(a.size(), std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
    return out;
}

Matrix mat_add(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) out[i][j] += b[i][j];
    return out;
}

Matrix affine(const Matrix& x, const Linear& layer) {
    Matrix out = mat_mul(x, to_matrix(layer.weight));
    for (auto& row : out)
        for (std::size_t j = 0; j < row.size(); ++j) row[j] += layer.bias[j];
    return out;
}

Matrix perceptron(const Matrix& x, const Mlp& mlp) {
    Matrix hidden = affine(x, mlp.first);
    for (auto& row : hidden)
        for (auto& v : row) v = v > 0 ? v : 0;
    return affine(hidden, mlp.second);
}

Matrix row_softmax(const Matrix& x) {
    Matrix out = x;
    for (auto& row : out) {
        const double top = *std::max_element(row.begin(), row.end());
        double total = 0;
        for (auto& v : row) total += (v = std::exp(v - top));
        for (auto& v : row) v /= total;
    }
    return out;
}

Matrix normalize_rows(const Matrix& x, const Tensor& gain, const Tensor& bias, double eps) {
    Matrix out = x;
    for (auto& row : out) {
        const double n = static_cast<double>(row.size());
        double mean = 0;
        for (double v : row) mean += v / n;
        double var = 0;
        for (double v : row) var += (v - mean) * (v - mean) / n;
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean) / std::sqrt(var + eps) * gain[j] + bias[j];
    }
    return out;
}

Matrix attention_oracle(const Matrix& content_q, const Matrix& pos_q, const Matrix& content_k, const Matrix& pos_k,
                        const Matrix& value, const AttentionWeights& w, std::size_t heads) {
    const Matrix q = affine(mat_add(content_q, pos_q), w.query);
    const Matrix k = affine(mat_add(content_k, pos_k), w.key);
    const Matrix v = affine(value, w.value);
    const std::size_t width = w.query.out_features();
    const std::size_t hd = width / heads;
    Matrix concat(q.size(), std::vector<double>(width, 0.0));
    for (std::size_t h = 0; h < heads; ++h) {
        Matrix scores(q.size(), std::vector<double>(k.size(), 0.0));
        for (std::size_t i = 0; i < q.size(); ++i)
            for (std::size_t j = 0; j < k.size(); ++j) {
                for (std::size_t d = 0; d < hd; ++d) scores[i][j] += q[i][h * hd + d] * k[j][h * hd + d];
                scores[i][j] /= std::sqrt(static_cast<double>(hd));
            }
        const Matrix p = row_softmax(scores);
        for (std::size_t i = 0; i < q.size(); ++i)
            for (std::size_t d = 0; d < hd; ++d)
                for (std::size_t j = 0; j < k.size(); ++j) concat[i][h * hd + d] += p[i][j] * v[j][h * hd + d];
    }
    return normalize_rows(mat_add(affine(concat, w.output), content_q), w.norm_gain, w.norm_bias);
}

Matrix block_oracle(const Matrix& queries, const Matrix& query_pos, const Matrix& memory, const Matrix& memory_pos,
                    const DecoderBlockWeights& w, std::size_t heads) {
    const Matrix self = attention_oracle(queries, query_pos, queries, query_pos, queries, w.self_attn, heads);
    const Matrix cross = attention_oracle(self, query_pos, memory, memory_pos, memory, w.cross_attn, heads);
    return normalize_rows(mat_add(cross, perceptron(cross, w.ffn)), w.norm_gain, w.norm_bias);
}

Matrix decoder_oracle(const Matrix& tokens, const Matrix& positions, const Matrix& memory, const Matrix& memory_pos,
                      const DecoderWeights& w, std::size_t heads) {
    Matrix x = tokens;
    for (const auto& block : w.blocks) x = block_oracle(x, positions, memory, memory_pos, block, heads);
    return x;
}

std::array<double, 36> spatial_oracle(const Box& bi, const Box& bj, ImageSize img, double eps) {
    const double W = img.width, H = img.height;
    auto describe = [&](const Box& b) {
        const double w = double{b.x2} - b.x1, h = double{b.y2} - b.y1;
        return std::array<double, 6>{(double{b.x1} + b.x2) / 2 / W, (double{b.y1} + b.y2) / 2 / H, w / W, h / H,
                                     w * h / (W * H), w / (h + eps)};
    };
    const auto di = describe(bi), dj = describe(bj);
    const double wi = double{bi.x2} - bi.x1, hi = double{bi.y2} - bi.y1;
    const double wj = double{bj.x2} - bj.x1, hj = double{bj.y2} - bj.y1;

    const double ix = std::max(0.0, std::min(double{bi.x2}, double{bj.x2}) - std::max(double{bi.x1}, double{bj.x1}));
    const double iy = std::max(0.0, std::min(double{bi.y2}, double{bj.y2}) - std::max(double{bi.y1}, double{bj.y1}));
    const double inter = ix * iy;
    const double uni = wi * hi + wj * hj - inter;
    const double overlap = uni > 0 ? inter / uni : 0.0;

    // Centre offsets in pixels.
    const double ox = (double{bj.x1} + bj.x2 - bi.x1 - bi.x2) / 2;
    const double oy = (double{bj.y1} + bj.y2 - bi.y1 - bi.y2) / 2;

    std::array<double, 36> f{};
    for (int s = 0; s < 6; ++s) {
        f[s] = di[s];
        f[6 + s] = dj[s];
    }
    f[12] = overlap;
    f[13] = wi * hi / (wj * hj + eps);
    f[14] = ox / (wi + eps);
    f[15] = oy / (hi + eps);
    f[16] = std::sqrt(ox * ox + oy * oy) / std::sqrt(W * W + H * H);
    f[17] = di[5] / (dj[5] + eps);
    for (int s = 0; s < 18; ++s) {
        if (s == 14 || s == 15) {
            const double mag = std::log(1 + std::fabs(f[s]));
            f[18 + s] = f[s] < 0 ? -mag : mag;
        } else {
            f[18 + s] = std::log(f[s] + eps);
        }
    }
    return f;
}

std::vector<PairIndex> brute_force_pairs(std::span<const Detection> detections, const CategoryTable& categories) {
    std::vector<PairIndex> out;
    const std::size_t n = detections.size();
    for (std::size_t code = 0; code < n * n; ++code) {
        const std::size_t i = code / n, j = code % n;
        if (i != j && detections[i].category == categories.human_id()) out.emplace_back(i, j);
    }
    return out;
}

std::vector<TripletIndex> brute_force_triplets(std::span<const Detection> detections,
                                               const CategoryTable& categories, const KnowledgeBank& bank) {
    std::vector<TripletIndex> out;
    const std::size_t n = detections.size();
    for (std::size_t code = 0; code < n * n * n; ++code) {
        const std::size_t i = code / (n * n), j = (code / n) % n, k = code % n;
        if (i == j || j == k || i == k) continue;
        if (detections[i].category != categories.human_id()) continue;
        const std::pair<int, int> key{detections[j].category, detections[k].category};
        if (std::find(bank.pairs().begin(), bank.pairs().end(), key) != bank.pairs().end()) out.push_back({i, j, k});
    }
    return out;
}

std::vector<float> fuse_oracle(const Tensor& binary, const Tensor& ternary, std::span<const std::size_t> assignment,
                               double alpha) {
    const std::size_t m = binary.rows(), c = binary.cols();
    std::vector<float> out(binary.values().begin(), binary.values().end());
    if (alpha == 0.0) return out;
    for (std::size_t l = 0; l < m; ++l) {
        for (std::size_t a = 0; a < c; ++a) {
            float sum = 0.0f;
            bool any = false;
            for (std::size_t o = 0; o < assignment.size(); ++o) {
                if (assignment[o] != l) continue;
                sum += ternary.at(o, a);
                any = true;
            }
            if (any) out[l * c + a] = binary.at(l, a) + static_cast<float>(alpha) * sum;
        }
    }
    return out;
}

double focal_oracle(double logit, bool positive, double gamma, double focal_alpha) {
    const double p = 1.0 / (1.0 + std::exp(-logit));
    if (positive) return -focal_alpha * std::pow(1.0 - p, gamma) * std::log(p);
    return -(1.0 - focal_alpha) * std::pow(p, gamma) * std::log(1.0 - p);
}

double ap_oracle(std::span<const RankedHit> hits, std::size_t num_gt) {
    const std::size_t n = hits.size();
    // rank[i]: number of hits ahead of i (higher score, or equal score and earlier).
    std::vector<std::size_t> at_rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t ahead = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (hits[j].score > hits[i].score || (hits[j].score == hits[i].score && j < i)) ++ahead;
        at_rank[ahead] = i;
    }
    std::vector<double> precision(n);
    std::size_t tp = 0;
    for (std::size_t k = 0; k < n; ++k) {
        tp += hits[at_rank[k]].true_positive ? 1 : 0;
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    }
    double total = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (!hits[at_rank[k]].true_positive) continue;
        double best = 0;
        for (std::size_t later = k; later < n; ++later) best = std::max(best, precision[later]);
        total += best;
    }
    return total / static_cast<double>(num_gt);
}

}  // namespace relhoi::verify
