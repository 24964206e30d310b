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


#include <benchmark/benchmark.h>

#include "mdgps/fitting.hpp"
#include "mdgps/lqr.hpp"
#include "mdgps/random.hpp"
#include "mdgps/trajdist.hpp"

namespace {

using namespace mdgps;

Mat random_matrix(Rng& rng, int r, int c, double scale) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * standard_normal(rng, 1)(0);
  return m;
}

Mat random_pd(Rng& rng, int n, double floor) {
  const Mat a = random_matrix(rng, n, n, 0.3);
  return a * a.transpose() + floor * Mat::Identity(n, n);
}

struct Problem {
  TimeVaryingLinGauss dyn;
  TimeVaryingLinGauss pi_bar;
  QuadraticCostExpansion cost;
  GaussianState init;
};

Problem make_problem(int horizon, int dx, int du) {
  Rng rng(7);
  std::vector<LinGaussStep> dyn_steps;
  std::vector<LinGaussStep> pol_steps;
  for (int t = 0; t < horizon; ++t) {
    Mat g(dx, dx + du);
    g << Mat::Identity(dx, dx) + random_matrix(rng, dx, dx, 0.05), random_matrix(rng, dx, du, 0.1);
    dyn_steps.push_back({g, random_matrix(rng, dx, 1, 0.01).col(0), 1e-3 * Mat::Identity(dx, dx)});
    pol_steps.push_back({random_matrix(rng, du, dx, 0.1), Vec::Zero(du), Mat::Identity(du, du)});
  }
  QuadraticCostExpansion cost = QuadraticCostExpansion::zero(horizon, dx, du);
  for (auto& s : cost.steps) {
    s.lxx = Mat::Identity(dx, dx);
    s.luu = 0.1 * Mat::Identity(du, du);
    s.lx = Vec::Ones(dx);
  }
  return {TimeVaryingLinGauss(dyn_steps), TimeVaryingLinGauss(pol_steps), cost,
          GaussianState{Vec::Ones(dx), 0.01 * Mat::Identity(dx, dx)}};
}

void BM_MaxentLqrBackward(benchmark::State& state) {
  const Problem p = make_problem(100, static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(maxent_lqr_backward(p.dyn, p.cost));
}
BENCHMARK(BM_MaxentLqrBackward)->Arg(4)->Arg(6)->Arg(12);

void BM_TrajKl(benchmark::State& state) {
  const Problem p = make_problem(100, static_cast<int>(state.range(0)), 2);
  const BackwardResult b = maxent_lqr_backward(p.dyn, p.cost);
  for (auto _ : state) benchmark::DoNotOptimize(traj_kl(b.controller, p.pi_bar, p.dyn, p.init));
}
BENCHMARK(BM_TrajKl)->Arg(4)->Arg(6);

void BM_CStep(benchmark::State& state) {
  const Problem p = make_problem(100, 4, 2);
  for (auto _ : state) benchmark::DoNotOptimize(c_step(p.dyn, p.cost, p.pi_bar, 1.0, p.init));
}
BENCHMARK(BM_CStep);

void BM_FitConditional(benchmark::State& state) {
  Rng rng(3);
  const int n = static_cast<int>(state.range(0));
  const Mat in = random_matrix(rng, n, 6, 1.0);
  const Mat out = in * random_matrix(rng, 6, 4, 1.0) + random_matrix(rng, n, 4, 0.1);
  const GmmPrior prior;
  for (auto _ : state) benchmark::DoNotOptimize(fit_conditional(in, out, prior));
}
BENCHMARK(BM_FitConditional)->Arg(5)->Arg(50);

void BM_FitGmm(benchmark::State& state) {
  Rng rng(5);
  const Mat data = random_matrix(rng, 500, 10, 1.0);
  GmmOptions o;
  for (auto _ : state) benchmark::DoNotOptimize(fit_gmm(data, o));
}
BENCHMARK(BM_FitGmm);

}  // namespace

BENCHMARK_MAIN();
