#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "tgadv/nn/tape.hpp"
#include "tgadv/util/error.hpp"
#include "tgadv/util/rng.hpp"

namespace tgadv::tgnn {

using nn::Index;
using nn::Mat;
using nn::Param;
using nn::Vec;

/// Architecture hyperparameters. Defaults follow the reference TGN setup.
struct TgnnHyper {
  Index memory_dim = 100;
  Index time_dim = 100;
  Index edge_dim = 0;
  Index heads = 2;
  std::size_t neighbors = 10;
  std::size_t layers = 1;
  double dropout = 0.2;
  std::uint64_t init_seed = 0;

  [[nodiscard]] auto message_dim() const -> Index { return 2 * memory_dim + time_dim + edge_dim; }
  [[nodiscard]] auto query_dim() const -> Index { return memory_dim + time_dim; }
  [[nodiscard]] auto key_dim() const -> Index { return memory_dim + edge_dim + time_dim; }
  [[nodiscard]] auto head_dim() const -> Index { return memory_dim / heads; }

  friend auto operator==(const TgnnHyper&, const TgnnHyper&) -> bool = default;
};

/// Phi(dt) = cos(omega * dt + phi).
struct TimeEncoder {
  Param omega;
  Param phi;

  [[nodiscard]] auto dim() const -> Index { return omega.value.rows(); }
};

/// Plain evaluation of the time encoding.
inline auto encode_time(const TimeEncoder& enc, double dt) -> Vec {
  if (dt < 0.0) throw InputError("encode_time: negative time interval");
  return (enc.omega.value.col(0) * dt + enc.phi.value.col(0)).array().cos();
}

/// GRU memory updater blocks: update (z), reset (r) and candidate (c) gates.
struct GruParams {
  Param w_z, u_z, b_z;
  Param w_r, u_r, b_r;
  Param w_c, u_c, b_c;
};

/// Single-layer multi-head temporal attention.
struct AttentionParams {
  Param w_q;  // (heads * head_dim) x query_dim
  Param w_k;  // (heads * head_dim) x key_dim
  Param w_v;  // (heads * head_dim) x key_dim
  Param w_o;  // memory_dim x (heads * head_dim + query_dim)
  Param b_o;
};

/// Two-layer MLP edge scorer over [h_u || h_v].
struct ScorerParams {
  Param w1, b1;  // d x 2d, d
  Param w2, b2;  // 1 x d, 1
};

/// Parameters of the temporal graph network.
class TgnnModel {
 public:
  TgnnModel() = default;

  explicit TgnnModel(const TgnnHyper& hyper) : hyper_(hyper) {
    const auto d = hyper.memory_dim;
    const auto dt = hyper.time_dim;
    if (d <= 0 || dt <= 0 || hyper.heads <= 0 || d % hyper.heads != 0) {
      throw InputError("memory_dim must be a positive multiple of heads");
    }
    if (hyper.layers != 1) throw InputError("only single-layer attention is supported");
    if (hyper.dropout < 0.0 || hyper.dropout >= 1.0) throw InputError("dropout must be in [0, 1)");
    Rng rng(derive_seed({hyper.init_seed, 0x7467'6e6eULL}));

    // Geometric frequency ladder 10^{-9 j/(dt-1)} spanning raw time scales.
    Mat omega(dt, 1);
    for (Index j = 0; j < dt; ++j) {
      const double frac = dt > 1 ? static_cast<double>(j) / static_cast<double>(dt - 1) : 0.0;
      omega(j, 0) = std::pow(10.0, -9.0 * frac);
    }
    time_.omega = Param("time.omega", omega);
    time_.phi = Param("time.phi", Mat::Zero(dt, 1));

    const auto m = hyper.message_dim();
    gru_.w_z = weight("gru.w_z", d, m, rng);
    gru_.u_z = weight("gru.u_z", d, d, rng);
    gru_.b_z = bias("gru.b_z", d);
    gru_.w_r = weight("gru.w_r", d, m, rng);
    gru_.u_r = weight("gru.u_r", d, d, rng);
    gru_.b_r = bias("gru.b_r", d);
    gru_.w_c = weight("gru.w_c", d, m, rng);
    gru_.u_c = weight("gru.u_c", d, d, rng);
    gru_.b_c = bias("gru.b_c", d);

    const auto hd = hyper.heads * hyper.head_dim();
    attn_.w_q = weight("attn.w_q", hd, hyper.query_dim(), rng);
    attn_.w_k = weight("attn.w_k", hd, hyper.key_dim(), rng);
    attn_.w_v = weight("attn.w_v", hd, hyper.key_dim(), rng);
    attn_.w_o = weight("attn.w_o", d, hd + hyper.query_dim(), rng);
    attn_.b_o = bias("attn.b_o", d);

    clf_.w1 = weight("clf.w1", d, 2 * d, rng);
    clf_.b1 = bias("clf.b1", d);
    clf_.w2 = weight("clf.w2", 1, d, rng);
    clf_.b2 = bias("clf.b2", 1);
  }

  [[nodiscard]] auto hyper() const -> const TgnnHyper& { return hyper_; }
  [[nodiscard]] auto time_encoder() const -> const TimeEncoder& { return time_; }
  auto time_encoder() -> TimeEncoder& { return time_; }
  [[nodiscard]] auto gru() const -> const GruParams& { return gru_; }
  auto gru() -> GruParams& { return gru_; }
  [[nodiscard]] auto attention() const -> const AttentionParams& { return attn_; }
  auto attention() -> AttentionParams& { return attn_; }
  [[nodiscard]] auto scorer() const -> const ScorerParams& { return clf_; }
  auto scorer() -> ScorerParams& { return clf_; }

  /// Every trainable tensor, in a fixed order.
  auto parameters() -> std::vector<Param*> {
    return {&time_.omega, &time_.phi, &gru_.w_z, &gru_.u_z, &gru_.b_z, &gru_.w_r,
            &gru_.u_r,    &gru_.b_r,  &gru_.w_c, &gru_.u_c, &gru_.b_c, &attn_.w_q,
            &attn_.w_k,   &attn_.w_v, &attn_.w_o, &attn_.b_o, &clf_.w1, &clf_.b1,
            &clf_.w2,     &clf_.b2};
  }

  [[nodiscard]] auto parameters() const -> std::vector<const Param*> {
    auto ps = const_cast<TgnnModel*>(this)->parameters();
    return {ps.begin(), ps.end()};
  }

  [[nodiscard]] auto find(const std::string& name) -> Param* {
    for (auto* p : parameters()) {
      if (p->name == name) return p;
    }
    return nullptr;
  }

  [[nodiscard]] auto num_parameters() const -> Index {
    Index n = 0;
    for (const auto* p : parameters()) n += p->size();
    return n;
  }

  /// Copies parameter values only (gradients untouched).
  void assign_values(const TgnnModel& other) {
    auto dst = parameters();
    auto src = other.parameters();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i]->value = src[i]->value;
  }

 private:
  static auto weight(std::string name, Index rows, Index cols, Rng& rng) -> Param {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> u(-bound, bound);
    Mat w(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) w(i, j) = u(rng);
    }
    return Param(std::move(name), std::move(w));
  }

  static auto bias(std::string name, Index rows) -> Param {
    return Param(std::move(name), Mat::Zero(rows, 1));
  }

  TgnnHyper hyper_;
  TimeEncoder time_;
  GruParams gru_;
  AttentionParams attn_;
  ScorerParams clf_;
};

}  // namespace tgadv::tgnn
