#include "toftomo/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace toftomo {

CMatrix hermitize(const CMatrix& m) {
    return 0.5 * (m + m.adjoint());
}

CMatrix hermitian_function(const CMatrix& h, const std::function<double(double)>& f) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(h));
    RVector fl = es.eigenvalues().unaryExpr(f);
    const CMatrix& v = es.eigenvectors();
    return v * fl.cast<cplx>().asDiagonal() * v.adjoint();
}

CMatrix unitary_exp(const CMatrix& h, double scale) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(h));
    const RVector& l = es.eigenvalues();
    CVector phase(l.size());
    for (Eigen::Index i = 0; i < l.size(); ++i) {
        phase(i) = std::polar(1.0, -scale * l(i));
    }
    const CMatrix& v = es.eigenvectors();
    return v * phase.asDiagonal() * v.adjoint();
}

CMatrix psd_sqrt(const CMatrix& m) {
    return hermitian_function(m, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

}  // namespace toftomo
