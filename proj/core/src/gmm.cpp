/*
 Copyright 2026 The MDGPS Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "mdgps/gmm.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "mdgps/errors.hpp"
#include "mdgps/random.hpp"

namespace mdgps {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

struct Factored {
  Mat chol;
  double log_det;
};

Factored factor(const Mat& cov) {
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("GMM component covariance is not PD");
  Mat l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  return {std::move(l), log_det};
}

// Row-wise log N(x; mean, cov) for the rows of `data`.
Vec log_pdf_rows(const Mat& data, const Vec& mean, const Factored& f) {
  const Mat centered = (data.rowwise() - mean.transpose()).transpose();
  const Mat white = f.chol.triangularView<Eigen::Lower>().solve(centered);
  const double d = static_cast<double>(mean.size());
  return (-0.5 * (d * kLog2Pi + f.log_det)) - 0.5 * white.colwise().squaredNorm().transpose().array();
}

double log_sum_exp(const Eigen::Ref<const Vec>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

Mat data_covariance(const Mat& data) {
  const Vec mean = data.colwise().mean();
  const Mat centered = data.rowwise() - mean.transpose();
  return linalg::symmetrize(centered.transpose() * centered / static_cast<double>(data.rows()));
}

int count_distinct_rows(const Mat& data, int enough) {
  std::vector<Eigen::Index> distinct;
  for (Eigen::Index i = 0; i < data.rows() && static_cast<int>(distinct.size()) < enough; ++i) {
    bool seen = false;
    for (auto j : distinct) {
      if (data.row(i) == data.row(j)) {
        seen = true;
        break;
      }
    }
    if (!seen) distinct.push_back(i);
  }
  return static_cast<int>(distinct.size());
}

struct EmRun {
  std::vector<GmmComponent> components;
  std::vector<double> trace;
  bool regularized = false;
};

// Returns true if the covariance needed flooring.
bool floor_covariance(Mat& cov, double floor) {
  const Mat sym = linalg::symmetrize(cov);
  if (linalg::min_eigenvalue(sym) >= floor) {
    cov = sym;
    return false;
  }
  cov = linalg::floor_eigenvalues(sym, floor);
  return true;
}

EmRun run_em(const Mat& data, const GmmOptions& opt, std::uint64_t seed, const Mat& global_cov,
             double floor) {
  const Eigen::Index n = data.rows();
  const int k = opt.n_components;
  Rng rng(seed);

  // k-means++ seeding over distinct points.
  std::vector<Vec> means;
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  means.push_back(data.row(pick(rng)).transpose());
  Vec d2(n);
  while (static_cast<int>(means.size()) < k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& m : means) best = std::min(best, (data.row(i).transpose() - m).squaredNorm());
      d2[i] = best;
    }
    const double total = d2.sum();
    Eigen::Index chosen = pick(rng);
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= d2[i];
        if (r <= 0.0 && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    }
    means.push_back(data.row(chosen).transpose());
  }

  EmRun run;
  Mat init_cov = global_cov / std::max(1.0, static_cast<double>(k));
  run.regularized |= floor_covariance(init_cov, floor);
  for (int c = 0; c < k; ++c) run.components.push_back({1.0 / k, means[c], init_cov});

  Mat log_resp(n, k);
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opt.max_em_iters; ++iter) {
    // E-step
    for (int c = 0; c < k; ++c) {
      const auto& comp = run.components[c];
      log_resp.col(c) = log_pdf_rows(data, comp.mean, factor(comp.cov)).array() +
                        std::log(std::max(comp.weight, 1e-300));
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double lse = log_sum_exp(log_resp.row(i).transpose());
      log_resp.row(i).array() -= lse;
      ll += lse;
    }
    ll /= static_cast<double>(n);
    run.trace.push_back(ll);
    if (iter > 0 && ll - prev < opt.tolerance) break;
    prev = ll;

    // M-step
    const Mat resp = log_resp.array().exp().matrix();
    for (int c = 0; c < k; ++c) {
      const double nk = resp.col(c).sum();
      auto& comp = run.components[c];
      if (nk < 1e-10) {
        // Empty component: park it on the global moments with negligible weight.
        comp.weight = 1e-10;
        comp.mean = data.colwise().mean().transpose();
        comp.cov = global_cov;
        run.regularized |= floor_covariance(comp.cov, floor);
        continue;
      }
      comp.weight = nk / static_cast<double>(n);
      comp.mean = (data.transpose() * resp.col(c)) / nk;
      const Mat centered = data.rowwise() - comp.mean.transpose();
      comp.cov = (centered.transpose() * resp.col(c).asDiagonal() * centered) / nk;
      run.regularized |= floor_covariance(comp.cov, floor);
    }
    double wsum = 0.0;
    for (const auto& comp : run.components) wsum += comp.weight;
    for (auto& comp : run.components) comp.weight /= wsum;
  }
  return run;
}

}  // namespace

Vec GmmPrior::responsibilities(const Vec& point) const {
  if (components.empty()) throw InvalidInput("GMM has no components");
  linalg::check_dims(point, dim(), "GMM query point");
  Vec logw(size());
  const Mat row = point.transpose();
  for (int c = 0; c < size(); ++c) {
    const auto& comp = components[c];
    logw[c] = std::log(std::max(comp.weight, 1e-300)) + log_pdf_rows(row, comp.mean, factor(comp.cov))[0];
  }
  const double lse = log_sum_exp(logw);
  return (logw.array() - lse).exp().matrix();
}

std::pair<Vec, Mat> GmmPrior::moments_at(const Vec& point) const {
  const Vec r = responsibilities(point);
  Vec mu = Vec::Zero(dim());
  for (int c = 0; c < size(); ++c) mu += r[c] * components[c].mean;
  Mat sigma = Mat::Zero(dim(), dim());
  for (int c = 0; c < size(); ++c) {
    const Vec d = components[c].mean - mu;
    sigma += r[c] * (components[c].cov + d * d.transpose());
  }
  return {mu, linalg::symmetrize(sigma)};
}

double GmmPrior::mean_log_likelihood(const Mat& data) const {
  Mat lp(data.rows(), size());
  for (int c = 0; c < size(); ++c) {
    lp.col(c) = log_pdf_rows(data, components[c].mean, factor(components[c].cov)).array() +
                std::log(std::max(components[c].weight, 1e-300));
  }
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) ll += log_sum_exp(lp.row(i).transpose());
  return ll / static_cast<double>(data.rows());
}

GmmPrior fit_gmm(const Mat& data, const GmmOptions& options) {
  if (options.n_components <= 0) throw InvalidInput("fit_gmm: n_components must be positive");
  if (options.max_em_iters <= 0) throw InvalidInput("fit_gmm: max_em_iters must be positive");
  if (!data.allFinite()) throw InvalidInput("fit_gmm: data contains non-finite values");
  if (count_distinct_rows(data, options.n_components) < options.n_components) {
    throw InvalidInput(fmt::format("fit_gmm: need at least {} distinct vectors",
                                   options.n_components));
  }

  const Mat global_cov = data_covariance(data);
  const double scale = std::max(global_cov.trace() / static_cast<double>(data.cols()), 1e-12);
  const double floor = options.min_eigenvalue * scale;

  EmRun best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    EmRun run = run_em(data, options, derive_seed(options.seed, {static_cast<std::uint64_t>(r)}),
                       global_cov, floor);
    if (run.trace.back() > best_ll) {
      best_ll = run.trace.back();
      best = std::move(run);
    }
  }

  GmmPrior prior;
  prior.components = std::move(best.components);
  prior.log_likelihood_trace = std::move(best.trace);
  prior.regularized = best.regularized;
  prior.strength = options.strength;
  return prior;
}

}  // namespace mdgps
