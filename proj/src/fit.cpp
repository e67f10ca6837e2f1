#include "seqread/fit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "seqread/errors.hpp"

namespace seqread {

namespace {

struct ResidualFunctor {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const ResidualFn* f = nullptr;
    int n = 0;
    int m = 0;

    int inputs() const { return n; }
    int values() const { return m; }
    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& out) const {
        out = (*f)(p);
        return out.allFinite() ? 0 : -1;  // negative status aborts the minimizer
    }
};

using CentralDiff = Eigen::NumericalDiff<ResidualFunctor, Eigen::Central>;

}  // namespace

LmResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd p, const LmOptions& opts) {
    const Eigen::VectorXd r0 = residuals(p);
    const Eigen::Index m = r0.size(), n = p.size();
    if (m < n) fail(ErrorCode::RankDeficient, "fewer residuals than parameters");
    if (!r0.allFinite()) fail(ErrorCode::NumericDivergence, "non-finite residual at start point");

    ResidualFunctor functor;
    functor.f = &residuals;
    functor.n = static_cast<int>(n);
    functor.m = static_cast<int>(m);
    // NumericalDiff steps by sqrt(epsfcn) * |p|.
    CentralDiff diff(functor, opts.fd_relative_step * opts.fd_relative_step);
    Eigen::LevenbergMarquardt<CentralDiff> lm(diff);
    lm.parameters.ftol = opts.rtol;
    lm.parameters.xtol = opts.rtol;
    lm.parameters.maxfev = opts.max_iterations * static_cast<int>(2 * n + 1);
    const auto status = lm.minimize(p);

    using Status = Eigen::LevenbergMarquardtSpace::Status;
    if (status == Status::TooManyFunctionEvaluation)
        fail(ErrorCode::NonConvergence, "least squares did not converge in " + std::to_string(opts.max_iterations) +
                                            " iterations");
    if (status == Status::UserAsked) fail(ErrorCode::NumericDivergence, "non-finite residual during the fit");
    if (status == Status::ImproperInputParameters) fail(ErrorCode::InvalidArgument, "improper fit parameters");

    const Eigen::VectorXd r = residuals(p);
    Eigen::MatrixXd j(m, n);
    diff.df(p, j);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    // Column scaling keeps the rank test meaningful for badly scaled parameters.
    const Eigen::VectorXd s = jtj.diagonal().cwiseSqrt().cwiseMax(1e-300).cwiseInverse();
    const Eigen::MatrixXd scaled = s.asDiagonal() * jtj * s.asDiagonal();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(scaled);
    lu.setThreshold(1e-12);
    if (lu.rank() < n) fail(ErrorCode::RankDeficient, "normal matrix is singular at the optimum");

    LmResult out;
    out.params = p;
    out.chi2 = r.squaredNorm();
    out.iterations = static_cast<int>(lm.iter);
    const double dof = static_cast<double>(std::max<Eigen::Index>(m - n, 1));
    out.covariance = (out.chi2 / dof) * (s.asDiagonal() * lu.inverse() * s.asDiagonal());
    return out;
}

}  // namespace seqread
