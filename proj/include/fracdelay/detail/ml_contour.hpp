#pragma once

#include <complex>

namespace fracdelay::detail {

// Complex-argument Mittag-Leffler evaluation used internally by the matrix
// function. Inverts the Laplace transform s^(a-b)/(s^a - z) on an optimal
// parabolic contour (Garrappa, SIAM J. Numer. Anal. 53, 2015) and adds the
// residues of the poles left outside the contour.
std::complex<double> ml_laplace(double alpha, double beta, std::complex<double> z);

// Series for moderate |z|, contour quadrature otherwise.
std::complex<double> ml_complex(double alpha, double beta, std::complex<double> z);

}  // namespace fracdelay::detail
