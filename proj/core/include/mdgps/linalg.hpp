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

#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace mdgps {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace linalg {

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

bool is_symmetric(const Mat& m, double tol = 1e-10);

double min_eigenvalue(const Mat& symmetric);

/// Symmetrizes and raises every eigenvalue to at least `floor`.
Mat floor_eigenvalues(const Mat& m, double floor);

/// log|A| from a Cholesky factorization; throws InvalidInput when A is not PD.
double log_det_pd(const Mat& a, std::string_view what = "matrix");

/// Inverse of a symmetric PD matrix; throws InvalidInput when A is not PD.
Mat inverse_pd(const Mat& a, std::string_view what = "matrix");

void check_dims(const Mat& m, Eigen::Index rows, Eigen::Index cols, std::string_view what);
void check_dims(const Vec& v, Eigen::Index size, std::string_view what);

}  // namespace linalg
}  // namespace mdgps
