#include "relhoi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "relhoi/error.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "numeric-kernel";

std::size_t product(const Dims& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

void require_matrix(const Tensor& t, const char* what) {
    if (t.rank() != 2) {
        fail(ErrorKind::Shape, kModule, std::string(what) + " must be rank 2, got " + dims_to_string(t.dims()));
    }
}

void require_vector(const Tensor& t, std::size_t n, const char* what) {
    if (t.rank() != 1 || t.dims()[0] != n) {
        fail(ErrorKind::Shape, kModule,
             std::string(what) + " must be [" + std::to_string(n) + "], got " + dims_to_string(t.dims()));
    }
}

}  // namespace

std::string dims_to_string(const Dims& dims) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) os << 'x';
        os << dims[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Dims dims, std::vector<float> data) : dims_(std::move(dims)), data_(std::move(data)) {
    if (product(dims_) != data_.size()) {
        fail(ErrorKind::Shape, kModule,
             "dims " + dims_to_string(dims_) + " hold " + std::to_string(product(dims_)) + " values, got " +
                 std::to_string(data_.size()));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            fail(ErrorKind::Validation, kModule, "non-finite value at flat index " + std::to_string(i));
        }
    }
}

Tensor Tensor::zeros(Dims dims) { return filled(std::move(dims), 0.0f); }

Tensor Tensor::filled(Dims dims, float value) {
    const std::size_t n = product(dims);
    return Tensor(std::move(dims), std::vector<float>(n, value));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<float> data) {
    return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<float>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<float> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) fail(ErrorKind::Shape, kModule, "ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vector(std::vector<float> data) {
    const std::size_t n = data.size();
    return Tensor({n}, std::move(data));
}

std::size_t Tensor::rows() const {
    require_matrix(*this, "tensor");
    return dims_[0];
}

std::size_t Tensor::cols() const {
    require_matrix(*this, "tensor");
    return dims_[1];
}

std::span<const float> Tensor::row(std::size_t r) const {
    const std::size_t c = cols();
    if (r >= dims_[0]) fail(ErrorKind::Index, kModule, "row " + std::to_string(r) + " out of range");
    return std::span<const float>(data_).subspan(r * c, c);
}

Tensor Tensor::reshaped(Dims dims) const { return Tensor(std::move(dims), data_); }

bool Tensor::bitwise_equal(const Tensor& other) const noexcept {
    return dims_ == other.dims_ &&
           (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0);
}

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul lhs");
    require_matrix(b, "matmul rhs");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) {
        fail(ErrorKind::Shape, kModule,
             "matmul " + dims_to_string(a.dims()) + " by " + dims_to_string(b.dims()));
    }
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> acc(n);
    std::vector<float> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            const float* brow = bv.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) acc[j] += aip * brow[j];
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = static_cast<float>(acc[j]);
    }
    return Tensor({m, n}, std::move(out));
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose input");
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<float> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.at(i, j);
    return Tensor({n, m}, std::move(out));
}

Tensor softmax_rows(const Tensor& x) {
    require_matrix(x, "softmax input");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<float> out(m * n);
    std::vector<double> e(n);
    for (std::size_t i = 0; i < m; ++i) {
        const auto row = x.row(i);
        const float mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            e[j] = std::exp(static_cast<double>(row[j]) - mx);
            sum += e[j];
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = static_cast<float>(e[j] / sum);
    }
    return Tensor({m, n}, std::move(out));
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
    require_matrix(x, "layer_norm input");
    const std::size_t m = x.rows(), n = x.cols();
    if (n < 2) fail(ErrorKind::Shape, kModule, "layer_norm needs at least 2 columns, got " + std::to_string(n));
    require_vector(gain, n, "layer_norm gain");
    require_vector(bias, n, "layer_norm bias");
    std::vector<float> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const auto row = x.row(i);
        double mean = 0.0;
        for (float v : row) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (float v : row) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = static_cast<float>((row[j] - mean) * inv * gain[j] + bias[j]);
        }
    }
    return Tensor({m, n}, std::move(out));
}

Tensor linear(const Tensor& x, const Linear& layer) {
    require_matrix(x, "linear input");
    require_matrix(layer.weight, "linear weight");
    const std::size_t m = x.rows(), k = x.cols(), n = layer.weight.cols();
    if (layer.weight.rows() != k) {
        fail(ErrorKind::Shape, kModule,
             "linear input " + dims_to_string(x.dims()) + " vs weight " + dims_to_string(layer.weight.dims()));
    }
    require_vector(layer.bias, n, "linear bias");
    const auto xv = x.values();
    const auto wv = layer.weight.values();
    std::vector<double> acc(n);
    std::vector<float> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) acc[j] = layer.bias[j];
        for (std::size_t p = 0; p < k; ++p) {
            const double xip = xv[i * k + p];
            const float* wrow = wv.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) acc[j] += xip * wrow[j];
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = static_cast<float>(acc[j]);
    }
    return Tensor({m, n}, std::move(out));
}

Tensor relu(const Tensor& x) {
    std::vector<float> out(x.values().begin(), x.values().end());
    for (float& v : out) v = v > 0.0f ? v : 0.0f;
    return Tensor(x.dims(), std::move(out));
}

Tensor mlp(const Tensor& x, const Mlp& layers) { return linear(relu(linear(x, layers.first)), layers.second); }

float sigmoid(float x) { return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x)))); }

Tensor sigmoid(const Tensor& x) {
    std::vector<float> out(x.values().begin(), x.values().end());
    for (float& v : out) v = sigmoid(v);
    return Tensor(x.dims(), std::move(out));
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.dims() != b.dims()) {
        fail(ErrorKind::Shape, kModule, "add " + dims_to_string(a.dims()) + " + " + dims_to_string(b.dims()));
    }
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return Tensor(a.dims(), std::move(out));
}

Tensor scale(const Tensor& a, float factor) {
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
    return Tensor(a.dims(), std::move(out));
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) fail(ErrorKind::Shape, kModule, "concat_cols of nothing");
    const std::size_t m = parts[0].rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rows() != m) fail(ErrorKind::Shape, kModule, "concat_cols row counts differ");
        total += p.cols();
    }
    std::vector<float> out;
    out.reserve(m * total);
    for (std::size_t i = 0; i < m; ++i)
        for (const auto& p : parts) {
            const auto r = p.row(i);
            out.insert(out.end(), r.begin(), r.end());
        }
    return Tensor({m, total}, std::move(out));
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) fail(ErrorKind::Shape, kModule, "concat_rows of nothing");
    const std::size_t n = parts[0].cols();
    std::size_t total = 0;
    std::vector<float> out;
    for (const auto& p : parts) {
        if (p.cols() != n) fail(ErrorKind::Shape, kModule, "concat_rows column counts differ");
        total += p.rows();
        out.insert(out.end(), p.values().begin(), p.values().end());
    }
    return Tensor({total, n}, std::move(out));
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
    if (begin > end || end > a.cols()) fail(ErrorKind::Index, kModule, "column slice out of range");
    const std::size_t m = a.rows(), w = end - begin;
    std::vector<float> out;
    out.reserve(m * w);
    for (std::size_t i = 0; i < m; ++i) {
        const auto r = a.row(i);
        out.insert(out.end(), r.begin() + static_cast<std::ptrdiff_t>(begin),
                   r.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return Tensor({m, w}, std::move(out));
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices) {
    const std::size_t n = a.cols();
    std::vector<float> out;
    out.reserve(indices.size() * n);
    for (std::size_t idx : indices) {
        if (idx >= a.rows()) fail(ErrorKind::Index, kModule, "gather row " + std::to_string(idx) + " out of range");
        const auto r = a.row(idx);
        out.insert(out.end(), r.begin(), r.end());
    }
    return Tensor({indices.size(), n}, std::move(out));
}

Tensor repeat_row(const Tensor& row_vector, std::size_t times) {
    if (row_vector.rank() != 1) fail(ErrorKind::Shape, kModule, "repeat_row expects a rank-1 tensor");
    const std::size_t n = row_vector.size();
    std::vector<float> out;
    out.reserve(times * n);
    for (std::size_t i = 0; i < times; ++i)
        out.insert(out.end(), row_vector.values().begin(), row_vector.values().end());
    return Tensor({times, n}, std::move(out));
}

Tensor mean_rows(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    if (m == 0) fail(ErrorKind::Shape, kModule, "mean over zero rows");
    std::vector<double> acc(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto r = a.row(i);
        for (std::size_t j = 0; j < n; ++j) acc[j] += r[j];
    }
    std::vector<float> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<float>(acc[j] / static_cast<double>(m));
    return Tensor({n}, std::move(out));
}

}  // namespace ops

Linear make_linear(Tensor weight, Tensor bias) {
    require_matrix(weight, "linear weight");
    require_vector(bias, weight.cols(), "linear bias");
    return Linear{std::move(weight), std::move(bias)};
}

Linear zero_linear(std::size_t in, std::size_t out) { return Linear{Tensor::zeros({in, out}), Tensor::zeros({out})}; }

Mlp zero_mlp(std::size_t in, std::size_t out) {
    const std::size_t hidden = mlp_hidden_width(out);
    return Mlp{zero_linear(in, hidden), zero_linear(hidden, out)};
}

}  // namespace relhoi
