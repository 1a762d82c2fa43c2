#include "wmtkit/kernel_invariants.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "wmtkit/decoder.hpp"
#include "wmtkit/kernels.hpp"

namespace wmtkit::kernels {
namespace {

struct Shape {
  std::size_t t, d, h, dk;
};

class Checker {
 public:
  explicit Checker(const InvariantConfig& config) : config_(config) {
    if (config.max_dim < 2) throw std::invalid_argument("max_dim must be at least 2");
    if (config.trials == 0) throw std::invalid_argument("trials must be positive");
  }

  rng::Engine engine(std::uint64_t check, std::uint64_t trial) const {
    return rng::Engine(rng::derive_seed(config_.seed, check, trial));
  }

  std::size_t dim(rng::Engine& e, std::size_t lo = 1) const {
    return lo + rng::uniform_index(e, config_.max_dim - lo + 1);
  }

  Shape shape(rng::Engine& e) const {
    Shape s{};
    s.t = dim(e, 2);
    s.h = dim(e);
    s.dk = dim(e);
    s.d = s.h * s.dk;
    return s;
  }

  // Runs `trial` for every trial and records the largest deviation.
  void run(const std::string& name, double tolerance,
           const std::function<double(rng::Engine&)>& trial) {
    InvariantResult r;
    r.name = name;
    r.tolerance = tolerance;
    r.trials = config_.trials;
    const std::uint64_t check = results_.size() + 1;
    try {
      for (std::size_t i = 0; i < config_.trials; ++i) {
        auto e = engine(check, i);
        const double dev = trial(e);
        if (!(dev <= r.worst)) r.worst = dev;  // also catches NaN
      }
      r.passed = r.worst <= tolerance;
    } catch (const std::exception& ex) {
      r.passed = false;
      r.detail = ex.what();
    }
    results_.push_back(std::move(r));
  }

  std::vector<InvariantResult> take() { return std::move(results_); }

 private:
  const InvariantConfig& config_;
  std::vector<InvariantResult> results_;
};

// Perturbs rows after `pos` and reports the largest change in rows 0..pos.
double causal_deviation(const Matrix& x, rng::Engine& e,
                        const std::function<Matrix(const Matrix&)>& f) {
  const Matrix base = f(x);
  double worst = 0.0;
  for (std::size_t pos = 0; pos + 1 < x.rows(); ++pos) {
    Matrix y = x;
    for (std::size_t r = pos + 1; r < y.rows(); ++r) {
      for (auto& v : y.row(r)) v += 2.0 * rng::uniform01(e) - 1.0;
    }
    const Matrix out = f(y);
    worst = std::max(worst, max_abs_diff(base.row_slice(0, pos + 1), out.row_slice(0, pos + 1)));
  }
  return worst;
}

// Naive reference: per head, per query, explicit exp/normalize/accumulate.
Matrix loop_attention(const std::vector<Matrix>& q, const std::vector<Matrix>& k,
                      const std::vector<Matrix>& v, bool causal) {
  const std::size_t h = q.size();
  const std::size_t tq = q[0].rows(), tk = k[0].rows(), dv = v[0].cols();
  Matrix out(tq, h * dv);
  for (std::size_t head = 0; head < h; ++head) {
    const double s = 1.0 / std::sqrt(static_cast<double>(q[head].cols()));
    for (std::size_t i = 0; i < tq; ++i) {
      const std::size_t limit = causal ? std::min(i + 1, tk) : tk;
      std::vector<double> w(limit);
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < limit; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < q[head].cols(); ++c) dot += q[head](i, c) * k[head](j, c);
        w[j] = dot * s;
        mx = std::max(mx, w[j]);
      }
      double z = 0.0;
      for (auto& x : w) z += (x = std::exp(x - mx));
      for (std::size_t j = 0; j < limit; ++j) {
        for (std::size_t c = 0; c < dv; ++c) out(i, head * dv + c) += w[j] / z * v[head](j, c);
      }
    }
  }
  return out;
}

std::vector<Matrix> random_heads(std::size_t h, std::size_t t, std::size_t dk, rng::Engine& e) {
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < h; ++i) out.push_back(Matrix::random(t, dk, e, 2.0));
  return out;
}

}  // namespace

std::vector<InvariantResult> run_kernel_invariants(const InvariantConfig& config) {
  if (config.w_l.has_value() != config.w_w.has_value()) {
    throw std::invalid_argument("W_l and W_w must be given together");
  }
  if (config.w_l && (config.w_l->rows() != config.w_l->cols() ||
                     config.w_w->rows() != config.w_l->rows() ||
                     config.w_w->cols() != config.w_l->rows() || config.w_l->rows() == 0)) {
    throw std::invalid_argument("head mixers must be square and of equal size");
  }
  Checker ck(config);

  ck.run("softmax_rows_sum", 1e-9, [&](rng::Engine& e) {
    const Matrix m = Matrix::random(ck.dim(e), ck.dim(e), e, 30.0);
    const Matrix s = softmax_rows(m);
    double worst = 0.0;
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double sum = 0.0;
      for (double v : s.row(r)) {
        if (v < 0.0) return std::numeric_limits<double>::infinity();
        sum += v;
      }
      worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
  });

  ck.run("softmax_shift_invariance", 1e-9, [&](rng::Engine& e) {
    Matrix m = Matrix::random(ck.dim(e), ck.dim(e), e, 5.0);
    Matrix shifted = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const double c = 100.0 * (2.0 * rng::uniform01(e) - 1.0);
      for (auto& v : shifted.row(r)) v += c;
    }
    return max_abs_diff(softmax_rows(m), softmax_rows(shifted));
  });

  ck.run("attention_loop_reference", 1e-9, [&](rng::Engine& e) {
    const Shape s = ck.shape(e);
    const bool causal = rng::bernoulli(e, 0.5);
    auto q = random_heads(s.h, s.t, s.dk, e);
    auto k = random_heads(s.h, s.t, s.dk, e);
    auto v = random_heads(s.h, s.t, s.dk, e);
    return max_abs_diff(multi_head_attention(q, k, v, causal), loop_attention(q, k, v, causal));
  });

  ck.run("talking_heads_identity", 1e-6, [&](rng::Engine& e) {
    const Shape s = ck.shape(e);
    const bool causal = rng::bernoulli(e, 0.5);
    auto q = random_heads(s.h, s.t, s.dk, e);
    auto k = random_heads(s.h, s.t, s.dk, e);
    auto v = random_heads(s.h, s.t, s.dk, e);
    const Matrix eye = Matrix::identity(s.h);
    return max_abs_diff(talking_heads_attention(q, k, v, eye, eye, causal),
                        multi_head_attention(q, k, v, causal));
  });

  ck.run("aan_prefix_sum", 1e-12, [&](rng::Engine& e) {
    const Matrix y = Matrix::random(ck.dim(e), ck.dim(e), e, 10.0);
    Matrix expect(y.rows(), y.cols());
    for (std::size_t c = 0; c < y.cols(); ++c) {
      double prefix = 0.0;
      for (std::size_t i = 0; i < y.rows(); ++i) {
        prefix += y(i, c);
        expect(i, c) = prefix / static_cast<double>(i + 1);
      }
    }
    return max_abs_diff(aan_context(y, FeedForward::identity(y.cols())), expect);
  });

  ck.run("exp_weighted_alpha_zero", 0.0, [&](rng::Engine& e) {
    const Matrix y = Matrix::random(ck.dim(e), ck.dim(e), e, 10.0);
    return max_abs_diff(exp_weighted_context(y, 0.0, FeedForward::identity(y.cols())), y);
  });

  ck.run("exp_weighted_fixture", 1e-12, [&](rng::Engine&) {
    const Matrix c = exp_weighted_context(Matrix{{1.0}, {1.0}, {1.0}}, 0.7, FeedForward::identity(1));
    return max_abs_diff(c, Matrix{{0.3}, {0.51}, {0.657}});
  });

  using KernelFn = std::function<Matrix(const Matrix&)>;
  using Builder = std::function<KernelFn(const Shape&, rng::Engine&)>;
  std::vector<std::pair<std::string, Builder>> masked = {
      {"causal_scaled_dot_attention",
       [](const Shape&, rng::Engine&) -> KernelFn {
         return [](const Matrix& x) { return scaled_dot_attention(x, x, x, true); };
       }},
      {"causal_multi_head_attention",
       [](const Shape& s, rng::Engine& e) -> KernelFn {
         auto p = AttentionParams::random(s.d, s.h, s.dk, e);
         return [p](const Matrix& x) { return attention_forward(x, x, p, true); };
       }},
      {"causal_talking_heads_attention",
       [](const Shape& s, rng::Engine& e) -> KernelFn {
         auto p = AttentionParams::random(s.d, s.h, s.dk, e, true);
         return [p](const Matrix& x) { return attention_forward(x, x, p, true); };
       }},
      {"causal_aan_context",
       [](const Shape& s, rng::Engine& e) -> KernelFn {
         auto f = FeedForward::random(s.d, 2 * s.d, e);
         return [f](const Matrix& x) { return aan_context(x, f); };
       }},
      {"causal_exp_weighted_context",
       [](const Shape& s, rng::Engine& e) -> KernelFn {
         auto f = FeedForward::random(s.d, 2 * s.d, e);
         return [f](const Matrix& x) { return exp_weighted_context(x, 0.7, f); };
       }},
      {"causal_dual_attention",
       [](const Shape& s, rng::Engine& e) -> KernelFn {
         auto p = AttentionParams::random(s.d, s.h, s.dk, e);
         auto f = FeedForward::random(s.d, 2 * s.d, e);
         return [p, f](const Matrix& x) { return dual_attention(x, p, f); };
       }},
  };
  if (config.w_l) {
    masked.emplace_back("causal_talking_heads_given_mixers",
                        [&config](const Shape& s, rng::Engine& e) -> KernelFn {
                          const std::size_t h = config.w_l->rows();
                          auto p = AttentionParams::random(h * s.dk, h, s.dk, e);
                          p.w_l = config.w_l;
                          p.w_w = config.w_w;
                          return [p](const Matrix& x) { return attention_forward(x, x, p, true); };
                        });
  }
  for (auto pattern : all_stack_patterns()) {
    for (auto norm : {NormPlacement::pre, NormPlacement::post}) {
      const std::string name = "causal_stack_" + to_string(pattern) +
                               (norm == NormPlacement::pre ? "_pre" : "_post");
      masked.emplace_back(name, [pattern, norm](const Shape& s, rng::Engine& e) -> KernelFn {
        const std::size_t depth = 1 + rng::uniform_index(e, 4);
        StackSpec stack = build_stack(pattern, depth, norm);
        auto params = random_stack_params(stack, s.d, s.h, 2 * s.d, e);
        Matrix enc = Matrix::random(1 + rng::uniform_index(e, 5), s.d, e, 1.0);
        return [stack, params, enc](const Matrix& x) {
          return decoder_stack_forward(x, enc, stack, params);
        };
      });
    }
  }
  for (const auto& entry : masked) {
    const std::string& name = entry.first;
    const Builder& build = entry.second;
    ck.run(name, 0.0, [&](rng::Engine& e) {
      Shape s = ck.shape(e);
      if (name == "causal_talking_heads_given_mixers") s.d = config.w_l->rows() * s.dk;
      if (name == "causal_scaled_dot_attention") s.d = s.dk;
      const KernelFn f = build(s, e);
      const Matrix x = Matrix::random(s.t, s.d, e, 1.0);
      return causal_deviation(x, e, f);
    });
  }

  ck.run("deterministic_rerun", 0.0, [&](rng::Engine& e) {
    const Shape s = ck.shape(e);
    StackSpec stack = build_stack(StackPattern::dual, 2);
    auto params = random_stack_params(stack, s.d, s.h, 2 * s.d, e, true);
    const Matrix x = Matrix::random(s.t, s.d, e, 1.0);
    const Matrix a = decoder_stack_forward(x, x, stack, params);
    const Matrix b = decoder_stack_forward(x, x, stack, params);
    return a == b ? 0.0 : std::numeric_limits<double>::infinity();
  });

  return ck.take();
}

}  // namespace wmtkit::kernels
