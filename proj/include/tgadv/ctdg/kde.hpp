#pragma once

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "tgadv/ctdg/graph.hpp"
#include "tgadv/util/error.hpp"
#include "tgadv/util/rng.hpp"

namespace tgadv {

/// One-dimensional Gaussian KDE over min-max normalized support points.
///
/// Raw values map to [0, 1] through the fitted range [lo, hi]; a zero-width
/// range maps every value to 0.5 and maps back to lo.
class KdeSampler {
 public:
  static constexpr double kDefaultBandwidth = 0.1;
  static constexpr int kMaxProposals = 1000;

  KdeSampler(std::vector<double> raw_values, double bandwidth, std::uint64_t seed,
             std::optional<std::pair<double, double>> range = std::nullopt)
      : bandwidth_(bandwidth), rng_(seed), seed_(seed) {
    if (raw_values.empty()) throw InputError("KDE needs at least one support point");
    if (!(bandwidth > 0.0)) throw InputError("KDE bandwidth must be positive");
    if (range) {
      lo_ = range->first;
      hi_ = range->second;
      if (hi_ < lo_) throw InputError("KDE range is inverted");
    } else {
      const auto [mn, mx] = std::minmax_element(raw_values.begin(), raw_values.end());
      lo_ = *mn;
      hi_ = *mx;
    }
    support_.reserve(raw_values.size());
    for (double x : raw_values) support_.push_back(normalize(x));
  }

  [[nodiscard]] auto support_points() const -> const std::vector<double>& { return support_; }
  [[nodiscard]] auto bandwidth() const -> double { return bandwidth_; }
  [[nodiscard]] auto seed() const -> std::uint64_t { return seed_; }
  [[nodiscard]] auto range() const -> std::pair<double, double> { return {lo_, hi_}; }

  [[nodiscard]] auto normalize(double raw) const -> double {
    return hi_ > lo_ ? (raw - lo_) / (hi_ - lo_) : 0.5;
  }
  [[nodiscard]] auto denormalize(double x) const -> double {
    return hi_ > lo_ ? lo_ + x * (hi_ - lo_) : lo_;
  }

  /// One draw s + bandwidth * z in normalized units.
  auto sample_normalized(Rng& rng) const -> double {
    std::uniform_int_distribution<std::size_t> pick(0, support_.size() - 1);
    std::normal_distribution<double> z(0.0, 1.0);
    const double s = support_[pick(rng)];
    return s + bandwidth_ * z(rng);
  }
  auto sample_normalized() -> double { return sample_normalized(rng_); }

  auto sample(Rng& rng) const -> double { return denormalize(sample_normalized(rng)); }
  auto sample() -> double { return sample(rng_); }

  /// CDF of the (untruncated) KDE in normalized units.
  [[nodiscard]] auto cdf_normalized(double x) const -> double {
    double acc = 0.0;
    for (double s : support_) acc += 0.5 * std::erfc(-(x - s) / (bandwidth_ * std::sqrt(2.0)));
    return acc / static_cast<double>(support_.size());
  }

  /// Number of draws that fell back to uniform sampling so far.
  [[nodiscard]] auto fallback_count() const -> std::size_t { return fallbacks_; }

  /// Exactly k sorted raw timestamps in [lo, hi], rejection-sampled from the
  /// KDE restricted to that interval. A draw that exhausts kMaxProposals
  /// falls back to uniform over [lo, hi].
  auto sample_in(std::size_t k, double lo, double hi) -> std::vector<double> {
    return sample_in(k, lo, hi, rng_);
  }

  /// As above, drawing from a caller-owned generator.
  auto sample_in(std::size_t k, double lo, double hi, Rng& rng) -> std::vector<double> {
    if (!(lo <= hi)) throw InputError("sample_in: lo must not exceed hi");
    std::vector<double> out;
    out.reserve(k);
    if (lo == hi) {
      out.assign(k, lo);
      return out;
    }
    std::size_t local_fallbacks = 0;
    for (std::size_t i = 0; i < k; ++i) {
      bool accepted = false;
      for (int attempt = 0; attempt < kMaxProposals; ++attempt) {
        const double x = sample(rng);
        if (x >= lo && x <= hi) {
          out.push_back(x);
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        std::uniform_real_distribution<double> uni(lo, hi);
        out.push_back(uni(rng));
        ++local_fallbacks;
      }
    }
    if (local_fallbacks > 0) {
      fallbacks_ += local_fallbacks;
      spdlog::warn("KDE rejection sampling fell back to uniform for {} of {} draws in [{}, {}]",
                   local_fallbacks, k, lo, hi);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<double> support_;
  double bandwidth_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  Rng rng_;
  std::uint64_t seed_;
  std::size_t fallbacks_ = 0;
};

/// KDE over interaction timestamps. The normalization range defaults to the
/// observed min/max.
inline auto fit_time_kde(const std::vector<TemporalInteraction>& edges,
                         double bandwidth = KdeSampler::kDefaultBandwidth, std::uint64_t seed = 0,
                         std::optional<std::pair<double, double>> range = std::nullopt)
    -> KdeSampler {
  if (edges.empty()) throw InputError("fit_time_kde: empty edge set");
  std::vector<double> ts;
  ts.reserve(edges.size());
  for (const auto& e : edges) ts.push_back(e.t);
  return KdeSampler(std::move(ts), bandwidth, seed, range);
}

inline auto fit_time_kde(const DynamicGraph& g, double bandwidth = KdeSampler::kDefaultBandwidth,
                         std::uint64_t seed = 0) -> KdeSampler {
  return fit_time_kde(g.interactions(), bandwidth, seed);
}

/// Independent per-dimension KDEs over edge feature vectors.
class FeatureKde {
 public:
  FeatureKde(const std::vector<const Eigen::VectorXd*>& features, double bandwidth,
             std::uint64_t seed) {
    if (features.empty()) throw InputError("fit_feature_kde: no edges");
    const auto dim = features.front()->size();
    if (dim == 0) throw InputError("fit_feature_kde: edges carry no features");
    dims_.reserve(static_cast<std::size_t>(dim));
    for (Eigen::Index j = 0; j < dim; ++j) {
      std::vector<double> column;
      column.reserve(features.size());
      for (const auto* f : features) {
        if (f->size() != dim) throw InputError("fit_feature_kde: ragged features");
        column.push_back((*f)[j]);
      }
      dims_.emplace_back(std::move(column), bandwidth,
                         derive_seed({seed, static_cast<std::uint64_t>(j)}));
    }
  }

  [[nodiscard]] auto dim() const -> Eigen::Index { return static_cast<Eigen::Index>(dims_.size()); }
  [[nodiscard]] auto dimension(Eigen::Index j) const -> const KdeSampler& {
    return dims_[static_cast<std::size_t>(j)];
  }

  auto sample_normalized() -> Eigen::VectorXd {
    Eigen::VectorXd out(dim());
    for (Eigen::Index j = 0; j < dim(); ++j) out[j] = dims_[static_cast<std::size_t>(j)].sample_normalized();
    return out;
  }

  auto sample(Rng& rng) const -> Eigen::VectorXd {
    Eigen::VectorXd out(dim());
    for (Eigen::Index j = 0; j < dim(); ++j) out[j] = dims_[static_cast<std::size_t>(j)].sample(rng);
    return out;
  }

  auto sample() -> Eigen::VectorXd {
    Eigen::VectorXd out(dim());
    for (Eigen::Index j = 0; j < dim(); ++j) out[j] = dims_[static_cast<std::size_t>(j)].sample();
    return out;
  }

 private:
  std::vector<KdeSampler> dims_;
};

inline auto fit_feature_kde(const DynamicGraph& g, IndexRange edges,
                            double bandwidth = KdeSampler::kDefaultBandwidth, std::uint64_t seed = 0)
    -> FeatureKde {
  std::vector<const Eigen::VectorXd*> feats;
  for (auto i = edges.begin; i < edges.end; ++i) feats.push_back(&g[i].features);
  return FeatureKde(feats, bandwidth, seed);
}

}  // namespace tgadv
