#ifndef BUNDLEGEN_LINALG_HPP
#define BUNDLEGEN_LINALG_HPP

#include <cstddef>
#include <vector>

namespace bundlegen {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b);
double norm(const Vec& v);
void axpy(double alpha, const Vec& x, Vec& y);  // y += alpha * x
Vec scaled(const Vec& v, double alpha);
/// v / ||v||; the zero vector is returned unchanged.
Vec normalized(const Vec& v);
bool all_finite(const Vec& v);

struct EigenResult {
    std::vector<double> values;     // descending
    std::vector<Vec> vectors;       // vectors[k] pairs with values[k], unit norm
};

/// Eigendecomposition of a symmetric matrix via cyclic Jacobi rotations.
/// Deterministic; intended for the small covariance matrices used here.
EigenResult symmetric_eigen(const std::vector<Vec>& matrix);

}  // namespace bundlegen

#endif
