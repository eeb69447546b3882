//! Exact 2×2 real-matrix kernel.

pub mod mat2;
pub mod solvers;

pub use mat2::{Eigenvalues2, Mat2, SymMat2};
pub use solvers::{
    gram_of, lyapunov_residual, relative_riccati_residual, relative_stein_residual, riccati_rhs,
    solve_care, solve_care_gram, solve_discrete_sylvester, solve_lyapunov, solve_stein, solve_x2,
    solve_x2_gram, stein_residual, CareMethod, CareRoot, CareSolution,
};
