// Independent reference computations used by the unit and acceptance suites.
// Everything here is a literal transcription with plain loops, kept apart
// from the production code paths it checks.
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "sharpnerf/autodiff/params.hpp"
#include "sharpnerf/awp/weight_proposal.hpp"
#include "sharpnerf/geometry.hpp"

namespace oracles {

using sharpnerf::Mat3;
using sharpnerf::Vec3;

// Truncated matrix-exponential series: exp(K) = sum K^n / n!.
inline Mat3 expm_series(const Mat3& k, int terms = 30) {
  Mat3 sum = Mat3::identity();
  Mat3 pow = Mat3::identity();
  double fact = 1.0;
  for (int n = 1; n <= terms; ++n) {
    pow = pow * k;
    fact *= n;
    sum = sum + pow * (1.0 / fact);
  }
  return sum;
}

// G = sum K^n / (n+1)! (the screw translation factor).
inline Mat3 g_series(const Mat3& k, int terms = 30) {
  Mat3 sum = Mat3::identity();
  Mat3 pow = Mat3::identity();
  double fact = 1.0;
  for (int n = 1; n <= terms; ++n) {
    pow = pow * k;
    fact *= (n + 1);
    sum = sum + pow * (1.0 / fact);
  }
  return sum;
}

inline double max_abs_diff(const Mat3& a, const Mat3& b) {
  double m = 0.0;
  for (int i = 0; i < 9; ++i) m = std::max(m, std::abs(a.m[i] - b.m[i]));
  return m;
}

// Direct per-sample compositing loop.
struct RenderOracle {
  Vec3 color;
  std::vector<double> w, T;
};

inline RenderOracle render_loop(const std::vector<double>& t, double t_far,
                                const std::vector<double>& sigma, const std::vector<Vec3>& c) {
  RenderOracle r;
  const std::size_t n = t.size();
  r.w.resize(n);
  r.T.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < i; ++j)
      acc += sigma[j] * ((j + 1 < n ? t[j + 1] : t_far) - t[j]);
    r.T[i] = std::exp(-acc);
    const double delta = (i + 1 < n ? t[i + 1] : t_far) - t[i];
    r.w[i] = r.T[i] * (1.0 - std::exp(-sigma[i] * delta));
    r.color += c[i] * r.w[i];
  }
  return r;
}

// Step-by-step transcription of the motion aggregation block, reading the
// same parameters from the store. Input tensors are one-pixel batches
// (1, Nm, Ns, C2) and (1, Nm, C3).
inline std::vector<double> mam_loop(const sharpnerf::ad::ParameterStore& store,
                                    const sharpnerf::awp::AwpConfig& cfg,
                                    const sharpnerf::ad::Tensor& zeta_hat,
                                    const sharpnerf::ad::Tensor& eta_hat) {
  const std::size_t nm = zeta_hat.shape()[1];
  const std::size_t ns = zeta_hat.shape()[2];
  const std::size_t c2 = cfg.embed_dim, c3 = cfg.cond_dim, c4 = cfg.corr_dim,
                    hid = cfg.mam_hidden;

  auto W = [&](const std::string& n) { return store.get("awp/" + n + "/w").values(); };
  auto B = [&](const std::string& n) { return store.get("awp/" + n + "/b").values(); };

  auto lin = [](std::span<const double> w, std::span<const double> b,
                const std::vector<double>& x, std::size_t in, std::size_t out) {
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < in; ++i) s += x[i] * w[i * out + o];
      y[o] = s;
    }
    return y;
  };

  std::vector<std::vector<double>> emb(nm * ns);
  for (std::size_t m = 0; m < nm; ++m)
    for (std::size_t s = 0; s < ns; ++s) {
      std::vector<double> x(c2);
      for (std::size_t c = 0; c < c2; ++c) x[c] = zeta_hat.at((m * ns + s) * c2 + c);
      auto y = lin(W("pool_embed"), B("pool_embed"), x, c2, c3);
      for (auto& v : y) v = std::max(v, 0.0);
      emb[m * ns + s] = y;
    }

  auto score = [&](const std::vector<double>& v, const char* layer) {
    double s = B(layer)[0];
    for (std::size_t c = 0; c < c3; ++c) s += v[c] * W(layer)[c];
    return s;
  };
  std::vector<std::vector<double>> per_sample(ns, std::vector<double>(c3, 0.0));
  for (std::size_t s = 0; s < ns; ++s) {
    std::vector<double> sc(nm);
    double mx = -1e300;
    for (std::size_t m = 0; m < nm; ++m)
      mx = std::max(mx, sc[m] = score(emb[m * ns + s], "pool_motion"));
    double z = 0.0;
    for (auto& v : sc) z += (v = std::exp(v - mx));
    for (std::size_t m = 0; m < nm; ++m)
      for (std::size_t c = 0; c < c3; ++c) per_sample[s][c] += sc[m] / z * emb[m * ns + s][c];
  }
  std::vector<std::vector<double>> per_motion(nm, std::vector<double>(c3, 0.0));
  for (std::size_t m = 0; m < nm; ++m) {
    std::vector<double> sc(ns);
    double mx = -1e300;
    for (std::size_t s = 0; s < ns; ++s)
      mx = std::max(mx, sc[s] = score(emb[m * ns + s], "pool_sample"));
    double z = 0.0;
    for (auto& v : sc) z += (v = std::exp(v - mx));
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t c = 0; c < c3; ++c) per_motion[m][c] += sc[s] / z * emb[m * ns + s][c];
  }

  std::vector<std::vector<double>> samp(ns), mot(nm), cond(nm);
  for (std::size_t s = 0; s < ns; ++s)
    samp[s] = lin(W("proj_sample"), B("proj_sample"), per_sample[s], c3, c4);
  for (std::size_t m = 0; m < nm; ++m)
    mot[m] = lin(W("proj_motion"), B("proj_motion"), per_motion[m], c3, c4);
  for (std::size_t m = 0; m < nm; ++m) {
    std::vector<double> x(c3);
    for (std::size_t c = 0; c < c3; ++c) x[c] = eta_hat.at(m * c3 + c);
    cond[m] = lin(W("proj_cond"), B("proj_cond"), x, c3, c4);
  }

  auto correlate = [&](const std::vector<std::vector<double>>& summary) {
    std::vector<std::vector<double>> agg(nm, std::vector<double>(c4, 0.0));
    for (std::size_t m = 0; m < nm; ++m) {
      std::vector<double> sc(summary.size());
      double mx = -1e300;
      for (std::size_t s = 0; s < summary.size(); ++s) {
        double dot = 0.0;
        for (std::size_t c = 0; c < c4; ++c) dot += cond[m][c] * summary[s][c];
        mx = std::max(mx, sc[s] = dot);
      }
      double z = 0.0;
      for (auto& v : sc) z += (v = std::exp(v - mx));
      for (std::size_t s = 0; s < summary.size(); ++s)
        for (std::size_t c = 0; c < c4; ++c) agg[m][c] += sc[s] / z * summary[s][c];
    }
    return agg;
  };
  auto agg_s = correlate(samp);
  auto agg_m = correlate(mot);

  std::vector<double> result(nm * c3);
  for (std::size_t m = 0; m < nm; ++m) {
    std::vector<double> cat(2 * c4);
    for (std::size_t c = 0; c < c4; ++c) {
      cat[c] = agg_s[m][c];
      cat[c4 + c] = agg_m[m][c];
    }
    auto h = lin(W("mix0"), B("mix0"), cat, 2 * c4, hid);
    for (auto& v : h) v = std::max(v, 0.0);
    auto o = lin(W("mix1"), B("mix1"), h, hid, c3);
    for (std::size_t c = 0; c < c3; ++c) result[m * c3 + c] = o[c] + eta_hat.at(m * c3 + c);
  }
  return result;
}

}  // namespace oracles
