//! Row-wise l1-regularized least squares for the dynamics matrix.

pub mod kkt;
pub mod lasso;
pub mod loss;
pub mod network;
pub mod report;

pub use kkt::{kkt_dual_check, KktDualReport};
pub use lasso::{
    kkt_certificate, lasso_solve, objective, signed_support_of, signed_support_string, solve_quadratic, LassoOptions,
    QuadraticSolution, RowEstimate, RowProblem,
};
pub use loss::{continuous_loss, discrete_loss, gradient_hessian, GradientHessian, GradientSource, LossMode, Moments};
pub use network::{
    recover_network, recover_row, theorem_lambda, theorem_lambda_for_row, LambdaGrid, LambdaRule, LambdaStrategy,
    NetworkEstimate, RecoveryContext, RowOutcome, SupportMatch, Theorem,
};
pub use report::{report_from_csv, report_rows, report_to_csv, report_to_json, ReportRow};
