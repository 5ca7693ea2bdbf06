#include "esfem/linear_solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#ifdef ESFEM_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

namespace esfem {

struct LinearSolver::Impl {
#ifdef ESFEM_HAVE_CHOLMOD
    // Indefinite matrices are expected near fracture and handled by the fallbacks.
    Impl() { llt.cholmod().print = 0; }
    Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower> llt;
#else
    Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower> llt;
#endif
    bool analyzed = false;
    Eigen::Index rows = -1;
    Eigen::Index nnz = -1;
};

namespace {

// Solves with a factorization and polishes the result by iterative refinement.
template <class Factor>
bool solve_refined(const Factor& factor, const SparseMatrix& K, const Vector& f, double rel_tol, Vector& x) {
    x = factor.solve(-f);
    if (factor.info() != Eigen::Success || !x.allFinite()) return false;
    const double fn = f.norm();
    for (int pass = 0; pass < 3; ++pass) {
        const Vector r = K * x + f;
        if (r.norm() <= rel_tol * fn) return true;
        const Vector dx = factor.solve(-r);
        if (!dx.allFinite()) return false;
        x += dx;
    }
    return (K * x + f).norm() <= rel_tol * fn;
}

}  // namespace

LinearSolver::LinearSolver(double rel_tol) : impl_(std::make_unique<Impl>()), rel_tol_(rel_tol){}
LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

void LinearSolver::reset() { impl_ = std::make_unique<Impl>(); }

Vector LinearSolver::solve(const SparseMatrix& K, const Vector& f) {
    if (K.rows() != K.cols() || K.rows() != f.size()) throw SingularSystem("linear system size mismatch");
    if (f.norm() == 0.0) return Vector::Zero(f.size());

    auto& im = *impl_;
    if (!im.analyzed || im.rows != K.rows() || im.nnz != K.nonZeros()) {
        im.llt.analyzePattern(K);
        im.analyzed = true;
        im.rows = K.rows();
        im.nnz = K.nonZeros();
    }
    Vector x;
    im.llt.factorize(K);
    if (im.llt.info() == Eigen::Success && solve_refined(im.llt, K, f, rel_tol_, x)) {
        backend_ = "cholesky";
        return x;
    }

    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> ldlt(K);
    if (ldlt.info() == Eigen::Success && solve_refined(ldlt, K, f, rel_tol_, x)) {
        backend_ = "ldlt";
        return x;
    }

    Eigen::SparseLU<SparseMatrix> lu;
    lu.analyzePattern(K);
    lu.factorize(K);
    if (lu.info() == Eigen::Success && solve_refined(lu, K, f, rel_tol_, x)) {
        backend_ = "lu";
        return x;
    }
    throw SingularSystem("linear solve failed: matrix singular or residual above tolerance");
}

Vector linear_solve(const SparseMatrix& K, const Vector& f, double rel_tol) {
    LinearSolver solver(rel_tol);
    return solver.solve(K, f);
}

}  // namespace esfem
