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

#include "mdgps/linalg.hpp"

#include <fmt/format.h>

#include "mdgps/errors.hpp"

namespace mdgps::linalg {

bool is_symmetric(const Mat& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double min_eigenvalue(const Mat& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(symmetric), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Mat floor_eigenvalues(const Mat& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  Vec ev = es.eigenvalues().cwiseMax(floor);
  return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

double log_det_pd(const Mat& a, std::string_view what) {
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput(fmt::format("{} is not positive definite", what));
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Mat inverse_pd(const Mat& a, std::string_view what) {
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput(fmt::format("{} is not positive definite", what));
  }
  return symmetrize(llt.solve(Mat::Identity(a.rows(), a.cols())));
}

void check_dims(const Mat& m, Eigen::Index rows, Eigen::Index cols, std::string_view what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InvalidInput(fmt::format("{}: expected {}x{}, got {}x{}", what, rows, cols, m.rows(),
                                   m.cols()));
  }
}

void check_dims(const Vec& v, Eigen::Index size, std::string_view what) {
  if (v.size() != size) {
    throw InvalidInput(fmt::format("{}: expected length {}, got {}", what, size, v.size()));
  }
}

}  // namespace mdgps::linalg
