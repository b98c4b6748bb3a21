#include "enhance/hermitian.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace enhance {

namespace {
constexpr std::size_t kMaxSweeps = 60;
}

HermitianEig::HermitianEig(std::size_t n) : n_(n) {
  values.resize(n);
  work_.resize(n * n);
  vecs_.resize(n * n);
  order_.resize(n);
}

void HermitianEig::decompose(std::span<const cplx> matrix) {
  if (matrix.size() != n_ * n_) throw std::invalid_argument("matrix size mismatch");
  const std::size_t n = n_;
  auto& a = work_;
  auto& v = vecs_;

  // Symmetrize the working copy; rounding can leave the input slightly off.
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      a[r * n + c] = 0.5 * (matrix[r * n + c] + std::conj(matrix[c * n + r]));
    }
  }
  std::fill(v.begin(), v.end(), cplx(0.0, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = cplx(1.0, 0.0);

  double frob2 = 0.0;
  for (const auto& x : a) frob2 += std::norm(x);
  const double tol = 1e-30 * frob2;

  for (std::size_t sweep = 0; sweep < kMaxSweeps && n > 1; ++sweep) {
    double off2 = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = r + 1; c < n; ++c) off2 += std::norm(a[r * n + c]);
    }
    if (off2 <= tol) break;

    for (std::size_t p = 0; p < n - 1; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a[p * n + q];
        const double r = std::abs(apq);
        if (r * r <= tol / static_cast<double>(n * n)) continue;

        const cplx phase = apq / r;  // e^{i alpha}
        const double app = a[p * n + p].real();
        const double aqq = a[q * n + q].real();
        const double tau = (aqq - app) / (2.0 * r);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const cplx s_pos = s * phase;             // G_pq
        const cplx s_neg = s * std::conj(phase);  // -conj(G_qp)

        // A <- G^H A G, touching rows/columns p and q only.
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const cplx akp = a[k * n + p];
          const cplx akq = a[k * n + q];
          const cplx nkp = c * akp - s_neg * akq;
          const cplx nkq = s_pos * akp + c * akq;
          a[k * n + p] = nkp;
          a[p * n + k] = std::conj(nkp);
          a[k * n + q] = nkq;
          a[q * n + k] = std::conj(nkq);
        }
        const double npp = c * c * app + s * s * aqq - 2.0 * c * s * r;
        const double nqq = s * s * app + c * c * aqq + 2.0 * c * s * r;
        a[p * n + p] = cplx(npp, 0.0);
        a[q * n + q] = cplx(nqq, 0.0);
        a[p * n + q] = cplx(0.0, 0.0);
        a[q * n + p] = cplx(0.0, 0.0);

        for (std::size_t k = 0; k < n; ++k) {
          const cplx vkp = v[k * n + p];
          const cplx vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s_neg * vkq;
          v[k * n + q] = s_pos * vkp + c * vkq;
        }
      }
    }
  }

  // Sort descending by eigenvalue, permuting the vector columns to match.
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::sort(order_.begin(), order_.end(),
            [&](std::size_t i, std::size_t j) { return a[i * n + i].real() > a[j * n + j].real(); });
  std::vector<cplx> sorted(n * n);
  for (std::size_t out = 0; out < n; ++out) {
    const std::size_t src = order_[out];
    values[out] = a[src * n + src].real();
    for (std::size_t row = 0; row < n; ++row) sorted[row * n + out] = v[row * n + src];
  }
  vecs_ = std::move(sorted);
}

}  // namespace enhance
