#include "r2se/tensor_nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace r2se::nn {

Matrix Matrix::randn(int r, int c, double stddev, std::uint64_t seed) {
    Matrix m(r, c);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : m.data) v = dist(rng);
    return m;
}

Vector matvec(const Matrix& m, const Vector& x) {
    if (static_cast<int>(x.size()) != m.cols)
        throw ShapeError("matvec: vector length " + std::to_string(x.size()) +
                         " does not match matrix cols " + std::to_string(m.cols));
    Vector y(m.rows, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        const double* row = m.data.data() + static_cast<size_t>(i) * m.cols;
        for (int j = 0; j < m.cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

Vector tmatvec(const Matrix& m, const Vector& x) {
    if (static_cast<int>(x.size()) != m.rows)
        throw ShapeError("tmatvec: vector length " + std::to_string(x.size()) +
                         " does not match matrix rows " + std::to_string(m.rows));
    Vector y(m.cols, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + static_cast<size_t>(i) * m.cols;
        for (int j = 0; j < m.cols; ++j) y[j] += row[j] * x[i];
    }
    return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions disagree");
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            double av = a(i, k);
            if (av == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) c(i, j) += av * b(k, j);
        }
    return c;
}

void add_outer(Matrix& m, const Vector& g, const Vector& x) {
    if (static_cast<int>(g.size()) != m.rows || static_cast<int>(x.size()) != m.cols)
        throw ShapeError("add_outer: shape mismatch");
    for (int i = 0; i < m.rows; ++i) {
        double gi = g[i];
        double* row = m.data.data() + static_cast<size_t>(i) * m.cols;
        for (int j = 0; j < m.cols; ++j) row[j] += gi * x[j];
    }
}

void axpy(double a, const Vector& x, Vector& y) {
    if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
    for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vector softmax(const Vector& logits) {
    Vector p(logits.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

Vector log_softmax(const Vector& logits) {
    Vector lp(logits.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    double lse = mx + std::log(sum);
    for (size_t i = 0; i < logits.size(); ++i) lp[i] = logits[i] - lse;
    return lp;
}

void NetworkWeights::validate() const {
    auto check = [](const Matrix& m, const Vector& b, const char* name, int expect_cols) {
        if (static_cast<int>(b.size()) != m.rows)
            throw ShapeError(std::string("layer ") + name + ": bias length does not match rows");
        if (expect_cols >= 0 && m.cols != expect_cols)
            throw ShapeError(std::string("layer ") + name + ": input width " +
                             std::to_string(m.cols) + " does not compose with previous layer " +
                             std::to_string(expect_cols));
    };
    check(w_in, b_in, "encoder", -1);
    check(w_perc, b_perc, "perception_head", w_in.rows);
    check(w_plan, b_plan, "planning_hidden", w_in.rows);
    check(w_out, b_out, "logits_head", w_plan.rows);
}

NetworkWeights NetworkWeights::init(int input_dim, int hidden_dim, int vocab_size,
                                    int perception_dim, std::uint64_t seed) {
    if (input_dim < 1 || hidden_dim < 1 || vocab_size < 2 || perception_dim < 1)
        throw ConfigError("network init: all dimensions must be positive and vocab_size >= 2");
    NetworkWeights w;
    auto scale = [](int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
    w.w_in = Matrix::randn(hidden_dim, input_dim, scale(input_dim), seed + 1);
    w.b_in.assign(hidden_dim, 0.0);
    w.w_perc = Matrix::randn(perception_dim, hidden_dim, scale(hidden_dim), seed + 2);
    w.b_perc.assign(perception_dim, 0.0);
    w.w_plan = Matrix::randn(hidden_dim, hidden_dim, scale(hidden_dim), seed + 3);
    w.b_plan.assign(hidden_dim, 0.0);
    w.w_out = Matrix::randn(vocab_size, hidden_dim, scale(hidden_dim), seed + 4);
    w.b_out.assign(vocab_size, 0.0);
    return w;
}

Vector NetworkWeights::flatten() const {
    Vector flat;
    flat.reserve(param_count());
    for (const Matrix* m : {&w_in, &w_perc, &w_plan, &w_out})
        flat.insert(flat.end(), m->data.begin(), m->data.end());
    for (const Vector* b : {&b_in, &b_perc, &b_plan, &b_out})
        flat.insert(flat.end(), b->begin(), b->end());
    return flat;
}

void NetworkWeights::unflatten(const Vector& flat) {
    if (flat.size() != param_count()) throw ShapeError("unflatten: flat length mismatch");
    size_t pos = 0;
    for (Matrix* m : {&w_in, &w_perc, &w_plan, &w_out}) {
        std::copy(flat.begin() + pos, flat.begin() + pos + m->data.size(), m->data.begin());
        pos += m->data.size();
    }
    for (Vector* b : {&b_in, &b_perc, &b_plan, &b_out}) {
        std::copy(flat.begin() + pos, flat.begin() + pos + b->size(), b->begin());
        pos += b->size();
    }
}

size_t NetworkWeights::param_count() const {
    return w_in.data.size() + w_perc.data.size() + w_plan.data.size() + w_out.data.size() +
           b_in.size() + b_perc.size() + b_plan.size() + b_out.size();
}

namespace {

Vector affine(const Matrix& w, const Vector& b, const Vector& x, const char* name) {
    if (static_cast<int>(x.size()) != w.cols)
        throw ShapeError(std::string("layer ") + name + ": expected input of length " +
                         std::to_string(w.cols) + ", got " + std::to_string(x.size()));
    Vector y = matvec(w, x);
    for (size_t i = 0; i < y.size(); ++i) y[i] += b[i];
    return y;
}

void apply_mask(Vector& v, const Vector& mask) {
    if (mask.empty()) return;
    if (mask.size() != v.size()) throw ShapeError("dropout mask length mismatch");
    for (size_t i = 0; i < v.size(); ++i) v[i] *= mask[i];
}

}  // namespace

ForwardCache forward_cached(const NetworkWeights& w, const Vector& features, const Vector& drop1,
                            const Vector& drop2) {
    ForwardCache c;
    c.h1_pre = affine(w.w_in, w.b_in, features, "encoder");
    c.h1 = c.h1_pre;
    for (double& v : c.h1) v = v > 0.0 ? v : 0.0;
    apply_mask(c.h1, drop1);
    c.out.perception = affine(w.w_perc, w.b_perc, c.h1, "perception_head");
    c.h2_pre = affine(w.w_plan, w.b_plan, c.h1, "planning_hidden");
    c.h2 = c.h2_pre;
    for (double& v : c.h2) v = v > 0.0 ? v : 0.0;
    apply_mask(c.h2, drop2);
    c.out.logits = affine(w.w_out, w.b_out, c.h2, "logits_head");
    c.out.probs = softmax(c.out.logits);
    return c;
}

PolicyOutput forward(const NetworkWeights& w, const Vector& features) {
    return forward_cached(w, features).out;
}

GradientSet backward(const NetworkWeights& w, const Vector& features, const ForwardCache& cache,
                     const Vector& dlogits, const Vector& dperception, const Vector& drop1,
                     const Vector& drop2) {
    if (static_cast<int>(dlogits.size()) != w.vocab_size())
        throw ShapeError("backward: upstream logits gradient length mismatch");
    if (static_cast<int>(dperception.size()) != w.perception_dim())
        throw ShapeError("backward: upstream perception gradient length mismatch");
    for (size_t i = 0; i < dlogits.size(); ++i)
        if (!std::isfinite(dlogits[i]))
            throw NumericError("backward: non-finite upstream gradient at logits[" +
                               std::to_string(i) + "]");
    for (size_t i = 0; i < dperception.size(); ++i)
        if (!std::isfinite(dperception[i]))
            throw NumericError("backward: non-finite upstream gradient at perception[" +
                               std::to_string(i) + "]");

    GradientSet g;
    g.w_in = Matrix::zeros(w.w_in.rows, w.w_in.cols);
    g.b_in.assign(w.b_in.size(), 0.0);
    g.w_perc = Matrix::zeros(w.w_perc.rows, w.w_perc.cols);
    g.b_perc.assign(w.b_perc.size(), 0.0);
    g.w_plan = Matrix::zeros(w.w_plan.rows, w.w_plan.cols);
    g.b_plan.assign(w.b_plan.size(), 0.0);
    g.w_out = Matrix::zeros(w.w_out.rows, w.w_out.cols);
    g.b_out.assign(w.b_out.size(), 0.0);

    add_outer(g.w_out, dlogits, cache.h2);
    g.b_out = dlogits;

    Vector dh2 = tmatvec(w.w_out, dlogits);
    apply_mask(dh2, drop2);
    for (size_t i = 0; i < dh2.size(); ++i)
        if (cache.h2_pre[i] <= 0.0) dh2[i] = 0.0;

    add_outer(g.w_plan, dh2, cache.h1);
    g.b_plan = dh2;

    add_outer(g.w_perc, dperception, cache.h1);
    g.b_perc = dperception;

    Vector dh1 = tmatvec(w.w_plan, dh2);
    Vector dh1_perc = tmatvec(w.w_perc, dperception);
    for (size_t i = 0; i < dh1.size(); ++i) dh1[i] += dh1_perc[i];
    apply_mask(dh1, drop1);
    for (size_t i = 0; i < dh1.size(); ++i)
        if (cache.h1_pre[i] <= 0.0) dh1[i] = 0.0;

    add_outer(g.w_in, dh1, features);
    g.b_in = dh1;
    return g;
}

GradientSet backward(const NetworkWeights& w, const Vector& features, const Vector& dlogits,
                     const Vector& dperception) {
    ForwardCache cache = forward_cached(w, features);
    return backward(w, features, cache, dlogits, dperception);
}

Vector dropout_mask(int n, double rate, std::uint64_t seed) {
    if (rate <= 0.0) return {};
    if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
    Vector mask(n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double keep = 1.0 - rate;
    for (double& v : mask) v = u(rng) < keep ? 1.0 / keep : 0.0;
    return mask;
}

void sgd_step(NetworkWeights& params, const GradientSet& grads, double learning_rate) {
    auto step_m = [&](Matrix& p, const Matrix& g, const char* name) {
        if (!p.same_shape(g)) throw ShapeError(std::string("sgd_step: shape mismatch in ") + name);
        for (size_t i = 0; i < p.data.size(); ++i) p.data[i] -= learning_rate * g.data[i];
    };
    auto step_v = [&](Vector& p, const Vector& g, const char* name) {
        if (p.size() != g.size()) throw ShapeError(std::string("sgd_step: shape mismatch in ") + name);
        for (size_t i = 0; i < p.size(); ++i) p[i] -= learning_rate * g[i];
    };
    step_m(params.w_in, grads.w_in, "w_in");
    step_v(params.b_in, grads.b_in, "b_in");
    step_m(params.w_perc, grads.w_perc, "w_perc");
    step_v(params.b_perc, grads.b_perc, "b_perc");
    step_m(params.w_plan, grads.w_plan, "w_plan");
    step_v(params.b_plan, grads.b_plan, "b_plan");
    step_m(params.w_out, grads.w_out, "w_out");
    step_v(params.b_out, grads.b_out, "b_out");
}

namespace {

double sq_dist(const Vector& a, const Vector& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

}  // namespace

KmeansResult kmeans(const std::vector<Vector>& points, int k, std::uint64_t seed, int max_iters) {
    if (k < 2) throw ConfigError("kmeans: need k >= 2");
    if (static_cast<int>(points.size()) < k)
        throw ConfigError("kmeans: fewer points (" + std::to_string(points.size()) +
                          ") than clusters (" + std::to_string(k) + ")");
    const size_t n = points.size();
    const size_t dim = points[0].size();
    for (const Vector& p : points)
        if (p.size() != dim) throw ShapeError("kmeans: points have mixed dimensions");

    std::mt19937_64 rng(seed);
    KmeansResult res;
    res.centers.reserve(k);

    // k-means++ seeding
    std::uniform_int_distribution<size_t> first(0, n - 1);
    res.centers.push_back(points[first(rng)]);
    Vector d2(n);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vector& ctr : res.centers) best = std::min(best, sq_dist(points[i], ctr));
            d2[i] = best;
            total += best;
        }
        size_t pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double r = u(rng), acc = 0.0;
            for (size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = first(rng);
        }
        res.centers.push_back(points[pick]);
    }

    res.assignment.assign(n, -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = sq_dist(points[i], res.centers[0]);
            for (int c = 1; c < k; ++c) {
                double d = sq_dist(points[i], res.centers[c]);
                if (d < bd) {  // strict: ties keep the lowest index
                    bd = d;
                    best = c;
                }
            }
            if (res.assignment[i] != best) {
                res.assignment[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        std::vector<Vector> sums(k, Vector(dim, 0.0));
        std::vector<int> counts(k, 0);
        for (size_t i = 0; i < n; ++i) {
            counts[res.assignment[i]]++;
            for (size_t j = 0; j < dim; ++j) sums[res.assignment[i]][j] += points[i][j];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // reseed an empty cluster at the point farthest from its center
                size_t far = 0;
                double fd = -1.0;
                for (size_t i = 0; i < n; ++i) {
                    double d = sq_dist(points[i], res.centers[res.assignment[i]]);
                    if (d > fd) {
                        fd = d;
                        far = i;
                    }
                }
                res.centers[c] = points[far];
                continue;
            }
            for (size_t j = 0; j < dim; ++j) res.centers[c][j] = sums[c][j] / counts[c];
        }
    }

    // final assignment + cost against converged centers
    res.cost = 0.0;
    for (size_t i = 0; i < n; ++i) {
        int best = 0;
        double bd = sq_dist(points[i], res.centers[0]);
        for (int c = 1; c < k; ++c) {
            double d = sq_dist(points[i], res.centers[c]);
            if (d < bd) {
                bd = d;
                best = c;
            }
        }
        res.assignment[i] = best;
        res.cost += bd;
    }
    return res;
}

}  // namespace r2se::nn
