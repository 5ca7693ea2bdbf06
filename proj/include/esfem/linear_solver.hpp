#pragma once

#include "esfem/assembly.hpp"

#include <memory>
#include <string>

namespace esfem {

/// Sparse symmetric solver for K x = -f.
///
/// Uses a supernodal Cholesky factorization when available and falls back to
/// LDL^T and then LU for indefinite systems. The symbolic analysis is reused
/// while the matrix size and non-zero count stay the same.
class LinearSolver {
public:
    explicit LinearSolver(double rel_tol = 1e-10);
    ~LinearSolver();
    LinearSolver(LinearSolver&&) noexcept;
    LinearSolver& operator=(LinearSolver&&) noexcept;

    /// Throws SingularSystem when no backend meets ||K x + f|| <= rel_tol ||f||.
    Vector solve(const SparseMatrix& K, const Vector& f);
    void reset();
    /// Backend used by the last successful solve.
    const std::string& backend() const { return backend_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    double rel_tol_;
    std::string backend_;
};

/// One-shot convenience wrapper.
Vector linear_solve(const SparseMatrix& K, const Vector& f, double rel_tol = 1e-10);

}  // namespace esfem
