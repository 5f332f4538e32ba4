#include "fbf/lifted_systems.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fbf {

ContinuousTransferFunction::ContinuousTransferFunction(std::vector<double> num, std::vector<double> den)
    : numerator(std::move(num)), denominator(std::move(den)) {
    if (denominator.empty()) throw std::invalid_argument("transfer function: empty denominator");
    if (denominator.front() == 0.0)
        throw std::invalid_argument("transfer function: leading denominator coefficient is zero");
    auto first = std::find_if(numerator.begin(), numerator.end(), [](double c) { return c != 0.0; });
    numerator.erase(numerator.begin(), first);
    if (numerator.empty()) numerator.push_back(0.0);
    if (numerator.size() > denominator.size()) {
        std::ostringstream os;
        os << "transfer function is improper: numerator degree " << numerator.size() - 1
           << " exceeds denominator degree " << denominator.size() - 1;
        throw std::invalid_argument(os.str());
    }
    for (double c : numerator)
        if (!std::isfinite(c)) throw std::invalid_argument("transfer function: non-finite numerator");
    for (double c : denominator)
        if (!std::isfinite(c)) throw std::invalid_argument("transfer function: non-finite denominator");
}

double ContinuousTransferFunction::dc_gain() const {
    const double den0 = denominator.back();
    if (den0 == 0.0) throw std::domain_error("transfer function has a pole at s = 0");
    return numerator.back() / den0;
}

DiscreteStateSpace::DiscreteStateSpace(Eigen::MatrixXd A, Eigen::VectorXd B, Eigen::RowVectorXd C, double D,
                                       double Ts)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(D), Ts_(Ts) {
    const auto n = A_.rows();
    if (A_.cols() != n || B_.size() != n || C_.size() != n)
        throw std::invalid_argument("state-space: inconsistent dimensions");
    if (!(Ts_ > 0.0)) throw std::invalid_argument("state-space: sampling interval must be positive");
    const double rho = pole_radius();
    if (!(rho < 1.0)) {
        std::ostringstream os;
        os << "state-space: model is not stable (pole radius " << rho << ")";
        throw std::invalid_argument(os.str());
    }
}

DiscreteStateSpace DiscreteStateSpace::static_gain(double gain, double Ts) {
    return {Eigen::MatrixXd(0, 0), Eigen::VectorXd(0), Eigen::RowVectorXd(0), gain, Ts};
}

DiscreteStateSpace DiscreteStateSpace::unit_delay(double Ts) {
    return {Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1), Eigen::RowVectorXd::Ones(1), 0.0, Ts};
}

double DiscreteStateSpace::pole_radius() const {
    if (A_.rows() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A_, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double DiscreteStateSpace::dc_gain() const {
    if (A_.rows() == 0) return D_;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(A_.rows(), A_.cols());
    return (C_ * (I - A_).partialPivLu().solve(B_))(0) + D_;
}

DiscreteStateSpace discretize_zoh(const ContinuousTransferFunction& ctf, double Ts) {
    if (!(Ts > 0.0)) throw std::invalid_argument("discretize_zoh: Ts must be positive");
    const int n = ctf.order();
    const double lead = ctf.denominator.front();
    if (n == 0) return DiscreteStateSpace::static_gain(ctf.numerator.back() / lead, Ts);

    // Ascending-power coefficients, monic denominator.
    std::vector<double> a(n + 1), b(n + 1, 0.0);
    for (int i = 0; i <= n; ++i) a[i] = ctf.denominator[n - i] / lead;
    const int m = static_cast<int>(ctf.numerator.size()) - 1;
    for (int i = 0; i <= m; ++i) b[i] = ctf.numerator[m - i] / lead;
    const double D = b[n];

    // Controllable canonical form in frequency-scaled coordinates z_i = x^{(i)} / w0^i,
    // which keeps the companion entries O(w0) for the high-order stiff models.
    const double w0 = a[0] != 0.0 ? std::pow(std::abs(a[0]), 1.0 / n) : 1.0;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd B = Eigen::VectorXd::Zero(n);
    Eigen::RowVectorXd C(n);
    for (int i = 0; i + 1 < n; ++i) A(i, i + 1) = w0;
    for (int i = 0; i < n; ++i) {
        A(n - 1, i) = -a[i] * std::pow(w0, i - (n - 1));
        C(i) = (b[i] - D * a[i]) * std::pow(w0, i);
    }
    B(n - 1) = std::pow(w0, -(n - 1));
    if (C.norm() > 0.0) {
        const double beta = std::sqrt(C.norm() / B.norm());
        B *= beta;
        C /= beta;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    const double max_real = es.eigenvalues().real().maxCoeff();
    if (!(max_real < 0.0)) {
        std::ostringstream os;
        os << "discretize_zoh: continuous model is not stable (max pole real part " << max_real << ")";
        throw std::invalid_argument(os.str());
    }

    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = A * Ts;
    aug.topRightCorner(n, 1) = B * Ts;
    const Eigen::MatrixXd E = aug.exp();
    return {E.topLeftCorner(n, n), E.topRightCorner(n, 1), C, D, Ts};
}

std::vector<double> impulse_response(const DiscreteStateSpace& model, int n) {
    if (n < 1) throw std::invalid_argument("impulse_response: n must be >= 1");
    std::vector<double> h(n, 0.0);
    h[0] = model.D();
    if (model.order() == 0) return h;
    Eigen::VectorXd x = model.B();
    for (int k = 1; k < n; ++k) {
        h[k] = model.C().dot(x);
        x = model.A() * x;
    }
    return h;
}

std::vector<double> truncated_impulse_response(const DiscreteStateSpace& model, double relative_tolerance) {
    if (model.order() == 0) return {model.D()};
    const double rho = model.pole_radius();
    const double tau = rho > 0.0 ? -1.0 / std::log(rho) : 0.0;  // in samples
    const int floor_len = static_cast<int>(std::ceil(5.0 * tau));
    const double decades = std::log(1.0 / relative_tolerance) + 20.0;
    const int horizon = std::clamp(static_cast<int>(std::ceil(1.5 * tau * decades)) + model.order() + 1, 64,
                                   2'000'000);
    std::vector<double> h = impulse_response(model, horizon);
    double peak = 0.0;
    for (double v : h) peak = std::max(peak, std::abs(v));
    const double thr = relative_tolerance * peak;
    int last = 0;
    for (int k = horizon - 1; k >= 0; --k)
        if (std::abs(h[k]) >= thr && h[k] != 0.0) {
            last = k;
            break;
        }
    const int len = std::max({last + 1, floor_len, 1});
    if (len > horizon) h = impulse_response(model, len);
    h.resize(len);
    return h;
}

std::vector<double> simulate(const DiscreteStateSpace& model, std::span<const double> input,
                             const Eigen::VectorXd& x0) {
    if (x0.size() != model.order()) throw std::invalid_argument("simulate: initial state has wrong size");
    std::vector<double> y(input.size());
    Eigen::VectorXd x = x0;
    for (std::size_t k = 0; k < input.size(); ++k) {
        y[k] = model.C().dot(x) + model.D() * input[k];
        if (model.order() > 0) x = model.A() * x + model.B() * input[k];
    }
    return y;
}

std::vector<double> simulate(const DiscreteStateSpace& model, std::span<const double> input) {
    return simulate(model, input, Eigen::VectorXd::Zero(model.order()));
}

std::vector<double> lifted_filter(std::span<const double> h, std::span<const double> input,
                                  std::span<const double> initial_tail) {
    const std::size_t tail = initial_tail.size();
    std::vector<double> x;
    x.reserve(tail + input.size());
    x.insert(x.end(), initial_tail.begin(), initial_tail.end());
    x.insert(x.end(), input.begin(), input.end());

    std::vector<double> out(input.size(), 0.0);
    if (h.empty()) return out;
    for (std::size_t k = 0; k < input.size(); ++k) {
        const std::size_t t = tail + k;
        const std::size_t imax = std::min(h.size() - 1, t);
        double acc = 0.0;
        for (std::size_t i = 0; i <= imax; ++i) acc += h[i] * x[t - i];
        out[k] = acc;
    }
    return out;
}

LiftedOperator LiftedOperator::from_impulse_response(std::span<const double> h, int rows, int cols,
                                                     int row_offset) {
    LiftedOperator op;
    op.row_offset = row_offset;
    op.matrix = Eigen::MatrixXd::Zero(rows, cols);
    const long len = static_cast<long>(h.size());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const long idx = static_cast<long>(r) + row_offset - c;
            if (idx >= 0 && idx < len) op.matrix(r, c) = h[idx];
        }
    return op;
}

}  // namespace fbf
