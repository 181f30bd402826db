#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "r2se/common.hpp"

namespace r2se::nn {

// Dense row-major matrix. Small enough at desk scale that no BLAS backing
// is needed; everything downstream assumes value semantics.
struct Matrix {
    int rows = 0;
    int cols = 0;
    Vector data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix zeros(int r, int c) { return Matrix(r, c); }
    static Matrix randn(int r, int c, double stddev, std::uint64_t seed);
};

Vector matvec(const Matrix& m, const Vector& x);
Vector tmatvec(const Matrix& m, const Vector& x);  // m^T x
Matrix matmul(const Matrix& a, const Matrix& b);
void add_outer(Matrix& m, const Vector& g, const Vector& x);  // m += g x^T
void axpy(double a, const Vector& x, Vector& y);              // y += a x

Vector softmax(const Vector& logits);
Vector log_softmax(const Vector& logits);

// Fixed feed-forward planner: two rectified-linear hidden layers with a
// linear logits head over the M-entry vocabulary. The perception head
// branches off the first hidden layer so the perception path stays shared
// when the planning layers are adapted.
//
//   h1 = relu(w_in x + b_in)
//   perception = w_perc h1 + b_perc
//   h2 = relu(w_plan h1 + b_plan)
//   logits = w_out h2 + b_out
struct NetworkWeights {
    Matrix w_in;
    Vector b_in;
    Matrix w_perc;
    Vector b_perc;
    Matrix w_plan;
    Vector b_plan;
    Matrix w_out;
    Vector b_out;

    int input_dim() const { return w_in.cols; }
    int hidden_dim() const { return w_in.rows; }
    int perception_dim() const { return w_perc.rows; }
    int vocab_size() const { return w_out.rows; }

    void validate() const;  // throws ShapeError naming the offending layer

    static NetworkWeights init(int input_dim, int hidden_dim, int vocab_size, int perception_dim,
                               std::uint64_t seed);

    Vector flatten() const;
    void unflatten(const Vector& flat);
    size_t param_count() const;
};

// Gradients are shape-congruent with the weights they differentiate, so the
// same container works for both.
using GradientSet = NetworkWeights;

struct PolicyOutput {
    Vector logits;
    Vector probs;  // softmax(logits)
    Vector perception;
};

// Intermediate activations kept for the backward pass. Dropout masks are
// inverted-dropout scales (0 or 1/(1-p)); empty mask means no dropout.
struct ForwardCache {
    Vector h1_pre, h1;
    Vector h2_pre, h2;
    PolicyOutput out;
};

PolicyOutput forward(const NetworkWeights& w, const Vector& features);
ForwardCache forward_cached(const NetworkWeights& w, const Vector& features,
                            const Vector& drop1 = {}, const Vector& drop2 = {});

GradientSet backward(const NetworkWeights& w, const Vector& features, const ForwardCache& cache,
                     const Vector& dlogits, const Vector& dperception,
                     const Vector& drop1 = {}, const Vector& drop2 = {});
GradientSet backward(const NetworkWeights& w, const Vector& features, const Vector& dlogits,
                     const Vector& dperception);

Vector dropout_mask(int n, double rate, std::uint64_t seed);

void sgd_step(NetworkWeights& params, const GradientSet& grads, double learning_rate);

struct KmeansResult {
    std::vector<Vector> centers;
    std::vector<int> assignment;
    double cost = 0.0;  // total within-cluster squared distance
};

// Lloyd iterations with k-means++ seeding. Deterministic for a fixed seed;
// assignment ties break toward the lowest center index.
KmeansResult kmeans(const std::vector<Vector>& points, int k, std::uint64_t seed,
                    int max_iters = 100);

}  // namespace r2se::nn
