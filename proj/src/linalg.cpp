#include "dsp/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>

namespace dsp {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double condition_number(const CMat& m) {
  Eigen::JacobiSVD<CMat> svd(m);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

CMat random_frame(int n, std::mt19937_64& rng, double max_condition) {
  CMat q(n, n);
  while (true) {
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < n; ++r) {
        double x = 0.0;
        double y = 0.0;
        do {
          x = 2.0 * uniform01(rng) - 1.0;
          y = 2.0 * uniform01(rng) - 1.0;
        } while (x * x + y * y > 1.0);
        q(r, c) = cd(x, y);
      }
    }
    if (condition_number(q) <= max_condition) return q;
  }
}

namespace {

CVec vec(const CMat& m) { return Eigen::Map<const CVec>(m.data(), m.size()); }

// Gram-Schmidt twice against an orthonormal list; returns the residual.
CVec orthogonalize(CVec v, const std::vector<CVec>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) v -= b * b.dot(v);
  }
  return v;
}

}  // namespace

AlgebraSpan algebra_span(std::span<const CMat> mats, double tol) {
  AlgebraSpan out;
  if (mats.empty()) return out;
  const auto n = mats.front().rows();
  const auto full = static_cast<std::size_t>(n * n);
  CMat id = CMat::Identity(n, n);
  id /= id.norm();
  out.basis.push_back(vec(id));
  out.words.push_back(id);
  for (std::size_t next = 0; next < out.words.size() && out.basis.size() < full; ++next) {
    for (const auto& m : mats) {
      CMat w = m * out.words[next];
      const double norm = w.norm();
      if (norm == 0.0) continue;
      w /= norm;
      CVec r = orthogonalize(vec(w), out.basis);
      const double rn = r.norm();
      if (rn > tol) {
        out.basis.push_back(r / rn);
        out.words.push_back(w);
        if (out.basis.size() == full) break;
      }
    }
  }
  return out;
}

int burnside_dimension(std::span<const CMat> mats, double tol) {
  return static_cast<int>(algebra_span(mats, tol).basis.size());
}

int centralizer_dimension(std::span<const CMat> mats, double tol) {
  if (mats.empty()) return 0;
  const auto n = mats.front().rows();
  const auto nn = n * n;
  CMat stacked(nn * static_cast<Eigen::Index>(mats.size()), nn);
  const CMat id = CMat::Identity(n, n);
  for (std::size_t j = 0; j < mats.size(); ++j) {
    const CMat& m = mats[j];
    // vec(M X - X M) = (I (x) M - M^T (x) I) vec(X)
    CMat block = CMat::Zero(nn, nn);
    for (Eigen::Index c = 0; c < n; ++c) {
      block.block(c * n, c * n, n, n) += m;
      for (Eigen::Index r = 0; r < n; ++r) block.block(r * n, c * n, n, n) -= m(c, r) * id;
    }
    stacked.middleRows(static_cast<Eigen::Index>(j) * nn, nn) = block;
  }
  Eigen::BDCSVD<CMat> svd(stacked);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return static_cast<int>(nn);
  int zero = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) <= tol * s(0)) ++zero;
  }
  return zero;
}

CMat cyclic_submodule(std::span<const CMat> mats, const CVec& v, double tol) {
  std::vector<CVec> basis{v.normalized()};
  const auto n = static_cast<std::size_t>(v.size());
  for (std::size_t next = 0; next < basis.size() && basis.size() < n; ++next) {
    for (const auto& m : mats) {
      CVec w = m * basis[next];
      const double norm = w.norm();
      if (norm == 0.0) continue;
      CVec r = orthogonalize(w / norm, basis);
      const double rn = r.norm();
      if (rn > tol) {
        basis.push_back(r / rn);
        if (basis.size() == n) break;
      }
    }
  }
  CMat out(v.size(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = basis[i];
  return out;
}

std::optional<CMat> find_invariant_subspace(std::span<const CMat> mats, double tol, std::uint64_t seed,
                                            int repeats) {
  if (mats.empty()) return std::nullopt;
  const auto n = mats.front().rows();
  const auto span = algebra_span(mats, tol);
  if (span.basis.size() == static_cast<std::size_t>(n * n)) return std::nullopt;

  std::optional<CMat> best;
  auto rng = derived_rng(seed, 0);
  for (int rep = 0; rep < repeats; ++rep) {
    CMat a = CMat::Zero(n, n);
    for (const auto& w : span.words) a += cd(2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0) * w;
    Eigen::ComplexEigenSolver<CMat> es(a);
    if (es.info() != Eigen::Success) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      CMat sub = cyclic_submodule(mats, es.eigenvectors().col(i), tol);
      if (sub.cols() < n && (!best || sub.cols() < best->cols())) best = std::move(sub);
    }
    if (best && best->cols() == 1) break;
  }
  return best;
}

}  // namespace dsp
