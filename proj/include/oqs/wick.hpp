#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "oqs/bath.hpp"
#include "oqs/common.hpp"

namespace oqs {

// One interaction-picture reservoir operator in a product: channel 1 carries
// the annihilation combination, channel 2 the creation combination.
struct BathToken {
  int channel = 1;  // 1 or 2
  double t = 0.0;
};

// Thermal average of an ordered product of reservoir operators as the sum
// over all pairings, each pairing contributing the product of pair averages
// with the original operator order kept inside each pair.  Odd products
// vanish; the empty product is 1.  Cost is (n-1)!! pair products, fine for
// the short strings this is meant for.
inline cplx wick_contraction_sum(const BathCorrelation& corr,
                                 const std::vector<BathToken>& tokens) {
  const size_t n = tokens.size();
  if (n % 2 != 0) return 0.0;
  if (n == 0) return 1.0;
  std::vector<char> used(n, 0);
  auto pair_value = [&](size_t i, size_t j) {
    return corr.time(channel_pair(tokens[i].channel, tokens[j].channel),
                     tokens[i].t - tokens[j].t);
  };
  std::function<cplx(size_t)> rec = [&](size_t remaining) -> cplx {
    if (remaining == 0) return cplx(1.0, 0.0);
    size_t first = 0;
    while (used[first]) ++first;
    used[first] = 1;
    cplx acc = 0.0;
    for (size_t j = first + 1; j < n; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      acc += pair_value(first, j) * rec(remaining - 2);
      used[j] = 0;
    }
    used[first] = 0;
    return acc;
  };
  return rec(n);
}

// Exact thermal expectation values on a truncated Fock space for a discrete
// mode set, used as the independent check on the pairing sum.  States are
// occupation tuples with each mode capped at n_max; weights are the truncated
// Gibbs factors.  Operators are applied matrix-free, so memory stays at a few
// vectors of length (n_max+1)^K.
class FockOracle {
 public:
  FockOracle(const DiscreteModes& modes, double beta, int n_max)
      : modes_(modes), beta_(beta), n_max_(n_max) {
    if (n_max_ < 2) throw ConfigError("fock oracle needs n_max >= 2");
    const int k = static_cast<int>(modes_.omega.size());
    if (k == 0) throw ConfigError("fock oracle needs at least one mode");
    dim_ = 1;
    stride_.assign(k, 0);
    for (int m = 0; m < k; ++m) {
      stride_[m] = dim_;
      dim_ *= n_max_ + 1;
      if (dim_ > 4096) throw ConfigError("fock oracle dimension exceeds 4096");
    }
    weights_.assign(dim_, 0.0);
    double z = 0.0;
    for (int i = 0; i < dim_; ++i) {
      double e = 0.0;
      int rest = i;
      for (int m = 0; m < k; ++m) {
        const int occ = rest % (n_max_ + 1);
        rest /= n_max_ + 1;
        e += occ * modes_.omega[m];
      }
      const double w = is_infinite_beta(beta_) ? (i == 0 ? 1.0 : 0.0) : std::exp(-beta_ * e);
      weights_[i] = w;
      z += w;
    }
    for (double& w : weights_) w /= z;
    // Weight the truncation lost relative to the untruncated partition sum,
    // per mode 1 - exp(-beta (n_max+1) omega).
    if (is_infinite_beta(beta_)) {
      truncation_weight_ = 0.0;
    } else {
      double keep = 1.0;
      for (int m = 0; m < k; ++m) keep *= 1.0 - std::exp(-beta_ * (n_max_ + 1) * modes_.omega[m]);
      truncation_weight_ = 1.0 - keep;
    }
  }

  int dim() const { return dim_; }
  double truncation_weight() const { return truncation_weight_; }

  // <product of tokens> in the truncated thermal state.  Tokens are listed
  // left to right, so the last one acts first.
  cplx expectation(const std::vector<BathToken>& tokens) const {
    const int k = static_cast<int>(modes_.omega.size());
    std::vector<cplx> v(dim_), next(dim_);
    cplx acc = 0.0;
    for (int i = 0; i < dim_; ++i) {
      if (weights_[i] < 1e-18) continue;
      std::fill(v.begin(), v.end(), cplx(0.0, 0.0));
      v[i] = 1.0;
      for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
        std::fill(next.begin(), next.end(), cplx(0.0, 0.0));
        for (int m = 0; m < k; ++m) {
          const cplx amp =
              modes_.lambda[m] * std::exp(cplx(0.0, (it->channel == 1 ? -1.0 : 1.0) *
                                                        modes_.omega[m] * it->t));
          apply_mode(v, next, m, it->channel, amp);
        }
        std::swap(v, next);
      }
      acc += weights_[i] * v[i];
    }
    return acc;
  }

 private:
  // next += amp * (b_m or b_m^dag) v, truncating above n_max.
  void apply_mode(const std::vector<cplx>& v, std::vector<cplx>& next, int m, int channel,
                  cplx amp) const {
    const int s = stride_[m];
    const int block = s * (n_max_ + 1);
    for (int base = 0; base < dim_; base += block) {
      for (int off = 0; off < s; ++off) {
        if (channel == 1) {
          for (int occ = 1; occ <= n_max_; ++occ) {
            const int idx = base + off + occ * s;
            next[idx - s] += amp * std::sqrt(static_cast<double>(occ)) * v[idx];
          }
        } else {
          for (int occ = 0; occ < n_max_; ++occ) {
            const int idx = base + off + occ * s;
            next[idx + s] += amp * std::sqrt(static_cast<double>(occ + 1)) * v[idx];
          }
        }
      }
    }
  }

  DiscreteModes modes_;
  double beta_;
  int n_max_;
  int dim_ = 0;
  std::vector<int> stride_;
  std::vector<double> weights_;
  double truncation_weight_ = 0.0;
};

struct WickReport {
  int samples = 0;
  double max_dev = 0.0;          // relative where the value is nonzero
  double truncation_weight = 0.0;
  int dim = 0;
};

// Randomized comparison of the pairing sum against the Fock oracle for
// products of every even length up to max_len.  Half the draws force balanced
// channel counts (nonzero averages); the rest draw channels uniformly.
inline WickReport verify_wick(const DiscreteModes& modes, double beta, int n_max, int max_len,
                              int samples_per_len, std::uint64_t seed) {
  BathSpec spec{modes, beta};
  BathCorrelation corr(spec, effective_cutoff(spec, 0.0, 0.0));
  FockOracle oracle(modes, beta, n_max);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time_dist(-2.0, 2.0);
  std::uniform_int_distribution<int> chan_dist(1, 2);

  WickReport report;
  report.dim = oracle.dim();
  report.truncation_weight = oracle.truncation_weight();
  for (int len = 2; len <= max_len; len += 2) {
    for (int s = 0; s < samples_per_len; ++s) {
      std::vector<BathToken> tokens(len);
      if (s % 2 == 0) {
        std::vector<int> chans(len);
        for (int i = 0; i < len; ++i) chans[i] = (i < len / 2) ? 1 : 2;
        std::shuffle(chans.begin(), chans.end(), rng);
        for (int i = 0; i < len; ++i) tokens[i].channel = chans[i];
      } else {
        for (int i = 0; i < len; ++i) tokens[i].channel = chan_dist(rng);
      }
      for (int i = 0; i < len; ++i) tokens[i].t = time_dist(rng);
      const cplx w = wick_contraction_sum(corr, tokens);
      const cplx f = oracle.expectation(tokens);
      const double denom = std::max(std::abs(w), std::abs(f));
      const double dev = (denom < 1e-12) ? std::abs(w - f) : std::abs(w - f) / denom;
      report.max_dev = std::max(report.max_dev, dev);
      ++report.samples;
    }
  }
  return report;
}

}  // namespace oqs
