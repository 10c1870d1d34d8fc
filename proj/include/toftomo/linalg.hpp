#pragma once

#include <complex>
#include <functional>

#include <Eigen/Dense>

namespace toftomo {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

CMatrix hermitize(const CMatrix& m);

// V f(Λ) V† for Hermitian h.
CMatrix hermitian_function(const CMatrix& h, const std::function<double(double)>& f);

// exp(-i·scale·h) for Hermitian h; exactly unitary up to round-off.
CMatrix unitary_exp(const CMatrix& h, double scale);

// Clamped principal square root of a PSD matrix.
CMatrix psd_sqrt(const CMatrix& m);

}  // namespace toftomo
