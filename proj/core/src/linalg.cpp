#include "cisim/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace cisim {

Mat expm(const Mat& a) {
  constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                          1187353796428800.0,  129060195264000.0,   10559470521600.0,
                          670442572800.0,      33522128640.0,       1323241920.0,
                          40840800.0,          960960.0,            16380.0,
                          182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;
  const Eigen::Index n = a.rows();
  if (n == 0) return a;

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13) s = std::max(0, int(std::ceil(std::log2(norm1 / theta13))));
  const Mat x = a / std::ldexp(1.0, s);

  const Mat id = Mat::Identity(n, n);
  const Mat x2 = x * x;
  const Mat x4 = x2 * x2;
  const Mat x6 = x4 * x2;
  const Mat u = x * (x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 +
                     b[3] * x2 + b[1] * id);
  const Mat v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 +
                b[2] * x2 + b[0] * id;
  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

Mat expm_hermitian(const Mat& h, cplx factor) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const Vec d = (factor * es.eigenvalues().cast<cplx>()).array().exp().matrix();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double hermiticity_defect(const Mat& m) { return max_abs(m - m.adjoint()); }

double min_eigenvalue_hermitian(const Mat& m) {
  const Mat h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace cisim
