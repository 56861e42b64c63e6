#pragma once

#include <complex>

#include <Eigen/Dense>

namespace cisim {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Scaling-and-squaring with a degree-13 Pade approximant.
Mat expm(const Mat& a);

// exp(factor * h) for Hermitian h via eigendecomposition.
Mat expm_hermitian(const Mat& h, cplx factor);

double max_abs(const Mat& m);
double hermiticity_defect(const Mat& m);  // max|M - M^dagger|
double min_eigenvalue_hermitian(const Mat& m);
Mat kron(const Mat& a, const Mat& b);

}  // namespace cisim
