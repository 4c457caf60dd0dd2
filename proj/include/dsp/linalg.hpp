#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace dsp {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

/// Uniform double in [0, 1) built from the raw 64-bit stream, so that the
/// sequence is identical on every standard library.
double uniform01(std::mt19937_64& rng);

/// Generator for stream `index` of a run seeded with `seed`.
std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t index);

/// Matrix with entries uniform on the complex unit disc, redrawn until its
/// 2-norm condition number is at most `max_condition`.
CMat random_frame(int n, std::mt19937_64& rng, double max_condition = 1e3);

double condition_number(const CMat& m);

/// Orthonormal basis (as vectorized matrices) of the algebra generated by the
/// matrices, together with a normalized word representing each basis vector.
struct AlgebraSpan {
  std::vector<CVec> basis;
  std::vector<CMat> words;
};

AlgebraSpan algebra_span(std::span<const CMat> mats, double tol);

/// Dimension of the associative algebra generated by the matrices (and I).
int burnside_dimension(std::span<const CMat> mats, double tol = 1e-8);

/// Dimension of {X : X M = M X for every M}.
int centralizer_dimension(std::span<const CMat> mats, double tol = 1e-8);

/// Orthonormal basis of the smallest subspace containing v and invariant
/// under every matrix.
CMat cyclic_submodule(std::span<const CMat> mats, const CVec& v, double tol);

/// Randomized search for a proper common invariant subspace: eigenvectors of
/// random elements of the generated algebra seed cyclic submodules. Returns the
/// smallest proper one found, as an n x k matrix with orthonormal columns.
std::optional<CMat> find_invariant_subspace(std::span<const CMat> mats, double tol = 1e-8,
                                            std::uint64_t seed = 0, int repeats = 8);

}  // namespace dsp
