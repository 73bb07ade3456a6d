// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace covqa::testing {

using numcore::ParamStore;
using numcore::Tensor;

std::map<std::string, Tensor> fd_gradients(ParamStore& store, const std::function<double()>& eval,
                                           double step) {
  std::map<std::string, Tensor> grads;
  for (auto& [name, tensor] : store.all()) {
    Tensor g(tensor.shape());
    for (int i = 0; i < tensor.size(); ++i) {
      double saved = tensor[i];
      tensor[i] = saved + step;
      double fp = eval();
      tensor[i] = saved - step;
      double fm = eval();
      tensor[i] = saved;
      g[i] = (fp - fm) / (2.0 * step);
    }
    grads[name] = std::move(g);
  }
  return grads;
}

double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_rel_err(const std::map<std::string, Tensor>& analytic,
                   const std::map<std::string, Tensor>& numeric, double floor) {
  double worst = 0;
  for (const auto& [name, num] : numeric) {
    auto it = analytic.find(name);
    for (int i = 0; i < num.size(); ++i) {
      double a = it == analytic.end() ? 0.0 : it->second[i];
      worst = std::max(worst, rel_err(a, num[i], floor));
    }
  }
  return worst;
}

std::vector<double> softmax_reference(const std::vector<double>& logits) {
  long double mx = -std::numeric_limits<long double>::infinity();
  for (double v : logits)
    if (static_cast<long double>(v) > mx) mx = v;
  long double z = 0;
  std::vector<long double> e(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    e[i] = expl(static_cast<long double>(logits[i]) - mx);
    z += e[i];
  }
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<double>(e[i] / z);
  return out;
}

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> affine(const std::vector<std::vector<double>>& w, const std::vector<double>& x,
                           const std::vector<double>& b) {
  std::vector<double> y(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    double s = b[i];
    for (size_t j = 0; j < x.size(); ++j) s += w[i][j] * x[j];
    y[i] = s;
  }
  return y;
}

}  // namespace

std::vector<double> gru_reference(const std::vector<double>& x, const std::vector<double>& h,
                                  const std::vector<std::vector<double>>& wr,
                                  const std::vector<std::vector<double>>& ur,
                                  const std::vector<double>& br,
                                  const std::vector<std::vector<double>>& wz,
                                  const std::vector<std::vector<double>>& uz,
                                  const std::vector<double>& bz,
                                  const std::vector<std::vector<double>>& wn,
                                  const std::vector<std::vector<double>>& un,
                                  const std::vector<double>& bn) {
  size_t d = h.size();
  std::vector<double> r(d), z(d), rh(d), n(d), out(d);
  std::vector<double> ax = affine(wr, x, br), ah = affine(ur, h, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < d; ++i) r[i] = sig(ax[i] + ah[i]);
  ax = affine(wz, x, bz);
  ah = affine(uz, h, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < d; ++i) z[i] = sig(ax[i] + ah[i]);
  for (size_t i = 0; i < d; ++i) rh[i] = r[i] * h[i];
  ax = affine(wn, x, bn);
  ah = affine(un, rh, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < d; ++i) n[i] = std::tanh(ax[i] + ah[i]);
  for (size_t i = 0; i < d; ++i) out[i] = z[i] * h[i] + (1.0 - z[i]) * n[i];
  return out;
}

std::vector<std::vector<double>> gvr_reference(const std::vector<std::vector<double>>& V,
                                               const std::vector<double>& q,
                                               const std::vector<std::array<double, 4>>& boxes,
                                               const GvrRefParams& p, const GvrRefConfig& cfg,
                                               GvrRefDiagnostics* diag) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  int m = static_cast<int>(V.size());
  int dh = cfg.d_q / cfg.heads;
  int waves = dh / 8;

  // joint embedding v'_i = fuse_w [v_i || q]
  std::vector<std::vector<double>> nodes(static_cast<size_t>(m), std::vector<double>(static_cast<size_t>(cfg.d_q)));
  for (int i = 0; i < m; ++i) {
    std::vector<double> cat;
    cat.insert(cat.end(), V[static_cast<size_t>(i)].begin(), V[static_cast<size_t>(i)].end());
    cat.insert(cat.end(), q.begin(), q.end());
    for (int r = 0; r < cfg.d_q; ++r) {
      double s = 0;
      for (size_t c = 0; c < cat.size(); ++c) s += p.fuse_w[static_cast<size_t>(r)][c] * cat[c];
      nodes[static_cast<size_t>(i)][static_cast<size_t>(r)] = s;
    }
  }

  auto geometry_embedding = [&](int i, int j) {
    const auto& bi = boxes[static_cast<size_t>(i)];
    const auto& bj = boxes[static_cast<size_t>(j)];
    double dx = std::abs(bi[0] - bj[0]);
    double dy = std::abs(bi[1] - bj[1]);
    if (dx == 0.0) dx = cfg.geo_eps;
    if (dy == 0.0) dy = cfg.geo_eps;
    double g[4] = {std::log(dx / bi[2]), std::log(dy / bi[3]), std::log(bj[2] / bi[2]),
                   std::log(bj[3] / bi[3])};
    std::vector<double> emb;
    for (double comp : g)
      for (int k = 0; k < waves; ++k) {
        double lam = cfg.wavelength_scale * std::pow(cfg.wavelength_progression, double(k) / waves);
        emb.push_back(std::sin(comp / lam));
        emb.push_back(std::cos(comp / lam));
      }
    return emb;
  };

  std::vector<std::vector<double>> out(static_cast<size_t>(m), std::vector<double>(static_cast<size_t>(cfg.d_q)));
  for (int h = 0; h < cfg.heads; ++h) {
    // projections
    auto project = [&](const std::vector<std::vector<double>>& w, int i) {
      std::vector<double> y(static_cast<size_t>(dh));
      for (int r = 0; r < dh; ++r) {
        double s = 0;
        for (int c = 0; c < cfg.d_q; ++c)
          s += w[static_cast<size_t>(r)][static_cast<size_t>(c)] * nodes[static_cast<size_t>(i)][static_cast<size_t>(c)];
        y[static_cast<size_t>(r)] = s;
      }
      return y;
    };

    std::vector<std::vector<double>> e(static_cast<size_t>(m), std::vector<double>(static_cast<size_t>(m)));
    for (int i = 0; i < m; ++i) {
      auto qi = project(p.wq[static_cast<size_t>(h)], i);
      for (int j = 0; j < m; ++j) {
        auto kj = project(p.wk[static_cast<size_t>(h)], j);
        double dotv = std::inner_product(qi.begin(), qi.end(), kj.begin(), 0.0);
        double visual = dotv / std::sqrt(double(dh));
        auto emb = geometry_embedding(i, j);
        double geo = std::inner_product(p.geo_w[static_cast<size_t>(h)].begin(),
                                        p.geo_w[static_cast<size_t>(h)].end(), emb.begin(), 0.0);
        if (diag) diag->min_geo_margin = std::min(diag->min_geo_margin, std::abs(geo));
        geo = std::max(0.0, geo);
        e[static_cast<size_t>(i)][static_cast<size_t>(j)] = geo == 0.0 ? neg_inf : visual + std::log(geo);
      }
    }

    for (int i = 0; i < m; ++i) {
      // full stable sort for the neighborhood
      std::vector<int> order(static_cast<size_t>(m));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return e[static_cast<size_t>(i)][static_cast<size_t>(a)] > e[static_cast<size_t>(i)][static_cast<size_t>(b)];
      });
      int take = std::min(cfg.k, m);
      if (diag && take < m) {
        double border = e[static_cast<size_t>(i)][static_cast<size_t>(order[static_cast<size_t>(take - 1)])];
        double next = e[static_cast<size_t>(i)][static_cast<size_t>(order[static_cast<size_t>(take)])];
        double gap = (border == neg_inf && next == neg_inf) ? 0.0 : border - next;
        if (std::isfinite(border) && next == neg_inf) gap = 1e300;
        diag->min_topk_gap = std::min(diag->min_topk_gap, gap);
      }
      order.resize(static_cast<size_t>(take));

      double mx = neg_inf;
      for (int j : order) mx = std::max(mx, e[static_cast<size_t>(i)][static_cast<size_t>(j)]);
      if (mx == neg_inf) throw std::runtime_error("gvr_reference: fully masked row");
      double z = 0;
      std::vector<double> wgt(static_cast<size_t>(take));
      for (size_t t = 0; t < order.size(); ++t) {
        wgt[t] = std::exp(e[static_cast<size_t>(i)][static_cast<size_t>(order[t])] - mx);
        z += wgt[t];
      }
      for (double& wv : wgt) wv /= z;

      for (int r = 0; r < dh; ++r) {
        double s = 0;
        for (size_t t = 0; t < order.size(); ++t) {
          auto vj = project(p.wv[static_cast<size_t>(h)], order[t]);
          s += wgt[t] * vj[static_cast<size_t>(r)];
        }
        if (diag) diag->min_out_margin = std::min(diag->min_out_margin, std::abs(s));
        out[static_cast<size_t>(i)][static_cast<size_t>(h * dh + r)] = std::max(0.0, s);
      }
    }
  }
  return out;
}

double bleu_reference(const std::vector<std::vector<std::string>>& candidates,
                      const std::vector<std::vector<std::vector<std::string>>>& references,
                      int max_n) {
  if (candidates.empty() || candidates.size() != references.size())
    throw std::invalid_argument("bleu_reference: corpus shape");
  auto ngrams = [](const std::vector<std::string>& toks, int n) {
    std::map<std::string, int> counts;
    for (int i = 0; i + n <= static_cast<int>(toks.size()); ++i) {
      std::string key;
      for (int j = 0; j < n; ++j) {
        key += toks[static_cast<size_t>(i + j)];
        key += '\x1f';
      }
      ++counts[key];
    }
    return counts;
  };

  long long cand_len = 0, ref_len = 0;
  std::vector<long long> matched(static_cast<size_t>(max_n), 0), total(static_cast<size_t>(max_n), 0);
  for (size_t s = 0; s < candidates.size(); ++s) {
    const auto& cand = candidates[s];
    cand_len += static_cast<long long>(cand.size());
    long long best_ref = 0;
    long long best_diff = std::numeric_limits<long long>::max();
    for (const auto& ref : references[s]) {
      long long len = static_cast<long long>(ref.size());
      long long diff = std::llabs(len - static_cast<long long>(cand.size()));
      if (diff < best_diff || (diff == best_diff && len < best_ref)) {
        best_diff = diff;
        best_ref = len;
      }
    }
    ref_len += best_ref;
    for (int n = 1; n <= max_n; ++n) {
      auto cn = ngrams(cand, n);
      std::map<std::string, int> rmax;
      for (const auto& ref : references[s])
        for (const auto& [k, v] : ngrams(ref, n)) rmax[k] = std::max(rmax[k], v);
      for (const auto& [k, v] : cn) {
        total[static_cast<size_t>(n - 1)] += v;
        auto it = rmax.find(k);
        if (it != rmax.end()) matched[static_cast<size_t>(n - 1)] += std::min(v, it->second);
      }
    }
  }

  double log_sum = 0;
  for (int n = 0; n < max_n; ++n) {
    if (total[static_cast<size_t>(n)] == 0 || matched[static_cast<size_t>(n)] == 0) return 0.0;
    log_sum += std::log(double(matched[static_cast<size_t>(n)]) / double(total[static_cast<size_t>(n)]));
  }
  double bp = cand_len >= ref_len ? 1.0 : std::exp(1.0 - double(ref_len) / double(cand_len));
  return 100.0 * bp * std::exp(log_sum / max_n);
}

}  // namespace covqa::testing
