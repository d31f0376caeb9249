#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tgadv::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// A named trainable tensor (matrix or column vector) with its gradient.
struct Param {
  std::string name;
  Mat value;
  Mat grad;

  Param() = default;
  Param(std::string n, Mat v)
      : name(std::move(n)), value(std::move(v)), grad(Mat::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  [[nodiscard]] auto size() const -> Index { return value.size(); }
};

/// Handle to a vector-valued node on a Tape.
struct Var {
  std::int32_t id = -1;
  [[nodiscard]] auto valid() const -> bool { return id >= 0; }
};

/// Reverse-mode automatic differentiation over vector-valued nodes.
///
/// Every op evaluates eagerly. When recording is off no backward closures are
/// stored, so the same forward code serves inference.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) { nodes_.reserve(64); }

  [[nodiscard]] auto recording() const -> bool { return record_; }
  [[nodiscard]] auto size() const -> std::size_t { return nodes_.size(); }
  [[nodiscard]] auto value(Var v) const -> const Vec& { return nodes_[idx(v)].value; }
  [[nodiscard]] auto scalar(Var v) const -> double { return nodes_[idx(v)].value[0]; }
  [[nodiscard]] auto grad(Var v) const -> const Vec& { return nodes_[idx(v)].grad; }

  auto constant(Vec v) -> Var { return push(std::move(v), {}); }

  auto param(Param& p) -> Var {
    assert(p.value.cols() == 1);
    Param* pp = &p;
    return push(p.value.col(0), [pp](Tape& t, std::int32_t self) {
      pp->grad.col(0) += t.nodes_[self].grad;
    });
  }

  auto matvec(Param& w, Var x) -> Var {
    Param* wp = &w;
    Vec out = w.value * value(x);
    return push(std::move(out), [wp, x](Tape& t, std::int32_t self) {
      const Vec& g = t.nodes_[self].grad;
      wp->grad.noalias() += g * t.value(x).transpose();
      t.acc(x).noalias() += wp->value.transpose() * g;
    });
  }

  auto affine(Param& w, Param& b, Var x) -> Var {
    Param* wp = &w;
    Param* bp = &b;
    Vec out = w.value * value(x) + b.value.col(0);
    return push(std::move(out), [wp, bp, x](Tape& t, std::int32_t self) {
      const Vec& g = t.nodes_[self].grad;
      wp->grad.noalias() += g * t.value(x).transpose();
      bp->grad.col(0) += g;
      t.acc(x).noalias() += wp->value.transpose() * g;
    });
  }

  auto add(Var a, Var b) -> Var {
    return push(value(a) + value(b), [a, b](Tape& t, std::int32_t self) {
      t.acc(a) += t.nodes_[self].grad;
      t.acc(b) += t.nodes_[self].grad;
    });
  }

  auto add(std::initializer_list<Var> xs) -> Var { return sum(std::span<const Var>(xs.begin(), xs.size())); }

  /// Elementwise sum of equally sized vectors.
  auto sum(std::span<const Var> xs) -> Var {
    assert(!xs.empty());
    Vec out = value(xs[0]);
    for (std::size_t i = 1; i < xs.size(); ++i) out += value(xs[i]);
    std::vector<Var> ids(xs.begin(), xs.end());
    return push(std::move(out), [ids = std::move(ids)](Tape& t, std::int32_t self) {
      for (Var v : ids) t.acc(v) += t.nodes_[self].grad;
    });
  }

  auto sub(Var a, Var b) -> Var {
    return push(value(a) - value(b), [a, b](Tape& t, std::int32_t self) {
      t.acc(a) += t.nodes_[self].grad;
      t.acc(b) -= t.nodes_[self].grad;
    });
  }

  auto mul(Var a, Var b) -> Var {
    return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, std::int32_t self) {
      const Vec& g = t.nodes_[self].grad;
      t.acc(a) += g.cwiseProduct(t.value(b));
      t.acc(b) += g.cwiseProduct(t.value(a));
    });
  }

  /// Elementwise product with a constant vector (e.g. a dropout mask).
  auto mul(Var a, const Vec& c) -> Var {
    return push(value(a).cwiseProduct(c), [a, c](Tape& t, std::int32_t self) {
      t.acc(a) += t.nodes_[self].grad.cwiseProduct(c);
    });
  }

  auto scale(Var a, double s) -> Var {
    return push(value(a) * s, [a, s](Tape& t, std::int32_t self) {
      t.acc(a) += s * t.nodes_[self].grad;
    });
  }

  /// 1 - a, elementwise.
  auto one_minus(Var a) -> Var {
    return push(Vec::Ones(value(a).size()) - value(a), [a](Tape& t, std::int32_t self) {
      t.acc(a) -= t.nodes_[self].grad;
    });
  }

  auto sigmoid(Var a) -> Var {
    Vec y = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    return push(std::move(y), [a](Tape& t, std::int32_t self) {
      const Vec& y = t.nodes_[self].value;
      t.acc(a).array() += t.nodes_[self].grad.array() * y.array() * (1.0 - y.array());
    });
  }

  auto tanh(Var a) -> Var {
    Vec y = value(a).array().tanh();
    return push(std::move(y), [a](Tape& t, std::int32_t self) {
      const Vec& y = t.nodes_[self].value;
      t.acc(a).array() += t.nodes_[self].grad.array() * (1.0 - y.array().square());
    });
  }

  auto relu(Var a) -> Var {
    Vec y = value(a).cwiseMax(0.0);
    return push(std::move(y), [a](Tape& t, std::int32_t self) {
      const Vec& x = t.value(a);
      t.acc(a).array() += (x.array() > 0.0).select(t.nodes_[self].grad.array(), 0.0);
    });
  }

  auto cos(Var a) -> Var {
    Vec y = value(a).array().cos();
    return push(std::move(y), [a](Tape& t, std::int32_t self) {
      t.acc(a).array() -= t.nodes_[self].grad.array() * t.value(a).array().sin();
    });
  }

  auto concat(std::initializer_list<Var> xs) -> Var {
    return concat(std::span<const Var>(xs.begin(), xs.size()));
  }

  auto concat(std::span<const Var> xs) -> Var {
    Index n = 0;
    for (Var v : xs) n += value(v).size();
    Vec out(n);
    Index off = 0;
    for (Var v : xs) {
      const auto& x = value(v);
      out.segment(off, x.size()) = x;
      off += x.size();
    }
    std::vector<Var> ids(xs.begin(), xs.end());
    return push(std::move(out), [ids = std::move(ids)](Tape& t, std::int32_t self) {
      Index off = 0;
      for (Var v : ids) {
        const auto len = t.value(v).size();
        t.acc(v) += t.nodes_[self].grad.segment(off, len);
        off += len;
      }
    });
  }

  auto slice(Var a, Index start, Index len) -> Var {
    return push(value(a).segment(start, len), [a, start, len](Tape& t, std::int32_t self) {
      t.acc(a).segment(start, len) += t.nodes_[self].grad;
    });
  }

  /// Inner product as a 1-vector.
  auto dot(Var a, Var b) -> Var {
    Vec out(1);
    out[0] = value(a).dot(value(b));
    return push(std::move(out), [a, b](Tape& t, std::int32_t self) {
      const double g = t.nodes_[self].grad[0];
      t.acc(a) += g * t.value(b);
      t.acc(b) += g * t.value(a);
    });
  }

  auto softmax(Var a) -> Var {
    const Vec& x = value(a);
    Vec y = (x.array() - x.maxCoeff()).exp();
    y /= y.sum();
    return push(std::move(y), [a](Tape& t, std::int32_t self) {
      const Vec& y = t.nodes_[self].value;
      const Vec& g = t.nodes_[self].grad;
      const double inner = g.dot(y);
      t.acc(a).array() += y.array() * (g.array() - inner);
    });
  }

  /// sum_i w[i] * xs[i].
  auto weighted_sum(Var w, std::span<const Var> xs) -> Var {
    const Vec& wv = value(w);
    assert(static_cast<std::size_t>(wv.size()) == xs.size());
    Vec out = Vec::Zero(value(xs[0]).size());
    for (std::size_t i = 0; i < xs.size(); ++i) out += wv[static_cast<Index>(i)] * value(xs[i]);
    std::vector<Var> ids(xs.begin(), xs.end());
    return push(std::move(out), [w, ids = std::move(ids)](Tape& t, std::int32_t self) {
      const Vec& g = t.nodes_[self].grad;
      Vec gw(static_cast<Index>(ids.size()));
      for (std::size_t i = 0; i < ids.size(); ++i) {
        gw[static_cast<Index>(i)] = g.dot(t.value(ids[i]));
        t.acc(ids[i]) += t.value(w)[static_cast<Index>(i)] * g;
      }
      t.acc(w) += gw;
    });
  }

  /// Cosine similarity as a 1-vector; defined as 0 when either norm is 0.
  auto cosine(Var a, Var b) -> Var {
    const Vec& x = value(a);
    const Vec& y = value(b);
    const double nx = x.norm();
    const double ny = y.norm();
    Vec out(1);
    out[0] = (nx > 0.0 && ny > 0.0) ? x.dot(y) / (nx * ny) : 0.0;
    return push(std::move(out), [a, b, nx, ny](Tape& t, std::int32_t self) {
      if (!(nx > 0.0 && ny > 0.0)) return;
      const double g = t.nodes_[self].grad[0];
      const double c = t.nodes_[self].value[0];
      const Vec& x = t.value(a);
      const Vec& y = t.value(b);
      t.acc(a) += g * (y / (nx * ny) - c * x / (nx * nx));
      t.acc(b) += g * (x / (nx * ny) - c * y / (ny * ny));
    });
  }

  /// -log(clamp(p, eps, 1 - eps)) on a 1-vector; zero gradient where clamped.
  auto neg_log_clamped(Var p, double eps) -> Var {
    const double x = scalar(p);
    const double c = std::clamp(x, eps, 1.0 - eps);
    Vec out(1);
    out[0] = -std::log(c);
    return push(std::move(out), [p, x, c](Tape& t, std::int32_t self) {
      if (x != c) return;
      t.acc(p)[0] -= t.nodes_[self].grad[0] / c;
    });
  }

  /// -log(1 - clamp(p, eps, 1 - eps)) on a 1-vector.
  auto neg_log1m_clamped(Var p, double eps) -> Var {
    const double x = scalar(p);
    const double c = std::clamp(x, eps, 1.0 - eps);
    Vec out(1);
    out[0] = -std::log1p(-c);
    return push(std::move(out), [p, x, c](Tape& t, std::int32_t self) {
      if (x != c) return;
      t.acc(p)[0] += t.nodes_[self].grad[0] / (1.0 - c);
    });
  }

  /// Propagates d(root)/d(.) into every node and parameter gradient.
  void backward(Var root, double seed = 1.0) {
    assert(record_);
    for (auto& n : nodes_) n.grad.setZero(n.value.size());
    nodes_[idx(root)].grad.setConstant(seed);
    for (auto i = static_cast<std::int32_t>(idx(root)); i >= 0; --i) {
      auto& n = nodes_[static_cast<std::size_t>(i)];
      if (n.back && !n.grad.isZero(0.0)) n.back(*this, i);
    }
  }

 private:
  using Backward = std::function<void(Tape&, std::int32_t)>;

  struct Node {
    Vec value;
    Vec grad;
    Backward back;
  };

  [[nodiscard]] static auto idx(Var v) -> std::size_t {
    assert(v.valid());
    return static_cast<std::size_t>(v.id);
  }

  auto acc(Var v) -> Vec& { return nodes_[idx(v)].grad; }

  auto push(Vec value, Backward back) -> Var {
    Node n;
    n.value = std::move(value);
    if (record_) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
  bool record_;
};

}  // namespace tgadv::nn
