#include "fbf/basis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fbf {

void BasisConfig::validate() const {
    if (degree < 1) throw std::invalid_argument("basis: degree must be >= 1");
    if (knot_spacing < 1) throw std::invalid_argument("basis: knot_spacing must be >= 1");
    if (batch_length < 1) throw std::invalid_argument("basis: batch_length must be >= 1");
    if (batch_length % knot_spacing != 0)
        throw std::invalid_argument("basis: batch_length must be a multiple of knot_spacing");
    if (window_length != 2 * batch_length)
        throw std::invalid_argument("basis: window_length must equal 2 * batch_length");
}

double cardinal_bspline(int degree, double x) {
    if (x <= 0.0 || x >= degree + 1.0) {
        // degree 0 is the half-open indicator [0, 1)
        return (degree == 0 && x == 0.0) ? 1.0 : 0.0;
    }
    // N_{i,0} for i = 0..degree, then raise the degree in place.
    std::vector<double> N(degree + 1, 0.0);
    const int span = std::min(static_cast<int>(std::floor(x)), degree);
    N[span] = 1.0;
    for (int k = 1; k <= degree; ++k)
        for (int i = 0; i + k <= degree; ++i)
            N[i] = (x - i) / k * N[i] + (i + k + 1 - x) / k * N[i + 1];
    return N[0];
}

Eigen::MatrixXd build_bspline_basis(const BasisConfig& config, int horizon) {
    if (config.degree < 1 || config.knot_spacing < 1)
        throw std::invalid_argument("build_bspline_basis: invalid degree or knot spacing");
    if (horizon < config.support_steps()) {
        std::ostringstream os;
        os << "build_bspline_basis: horizon " << horizon << " shorter than one spline support ("
           << config.support_steps() << " steps)";
        throw std::invalid_argument(os.str());
    }
    const int m = config.knot_spacing;
    const int cols = (horizon - 2) / m + config.degree + 1;
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(horizon, cols);
    for (int c = 0; c < cols; ++c) {
        const int start = basis_column_start(config, c);
        const int lo = std::max(start + 1, 0);
        const int hi = std::min(start + config.support_steps() - 1, horizon - 1);
        for (int k = lo; k <= hi; ++k)
            basis(k, c) = cardinal_bspline(config.degree, static_cast<double>(k - start) / m);
    }
    return basis;
}

namespace {

// Samples of one spline at offsets 1 .. support-1 from its start.
std::vector<double> spline_pulse(const BasisConfig& config) {
    std::vector<double> pulse(config.support_steps(), 0.0);
    for (int t = 1; t < config.support_steps(); ++t)
        pulse[t] = cardinal_bspline(config.degree, static_cast<double>(t) / config.knot_spacing);
    return pulse;
}

// Unfiltered and filtered window samples of a spline starting `offset` steps
// after the window start (negative for splines that started earlier).
void fill_column(const std::vector<double>& pulse, const std::vector<double>& h, int offset, int rows,
                 Eigen::Ref<Eigen::VectorXd> raw, Eigen::Ref<Eigen::VectorXd> filtered) {
    const int support = static_cast<int>(pulse.size());
    const int len = static_cast<int>(h.size());
    for (int k = 0; k < rows; ++k) {
        const int t = k - offset;  // time since spline start
        raw(k) = (t > 0 && t < support) ? pulse[t] : 0.0;
        double acc = 0.0;
        const int tau_lo = std::max(1, t - len + 1);
        const int tau_hi = std::min(support - 1, t);
        for (int tau = tau_lo; tau <= tau_hi; ++tau) acc += pulse[tau] * h[t - tau];
        filtered(k) = acc;
    }
}

}  // namespace

BasisSet filter_and_partition(const BasisConfig& config, const DiscreteStateSpace& model, int window_index,
                              double max_condition) {
    config.validate();
    if (window_index < 0) throw std::invalid_argument("filter_and_partition: negative window index");

    const std::vector<double> h = truncated_impulse_response(model);
    const std::vector<double> pulse = spline_pulse(config);
    const int m = config.knot_spacing;
    const int rows = config.window_length;
    const int L = static_cast<int>(h.size());

    BasisSet set;
    set.config = config;
    set.impulse_length = L;
    set.n_c = config.current_count();
    // A spline starting i*m steps before the window still reaches it while
    // i*m <= support + L - 2.
    set.n_p = std::max((config.support_steps() + L - 2) / m, config.committed_per_batch());

    set.Psi_C.resize(rows, set.n_c);
    set.PsiT_C.resize(rows, set.n_c);
    set.Psi_PC.resize(rows, set.n_p);
    set.PsiT_PC.resize(rows, set.n_p);
    // The time origin cancels: every offset below is relative to the window
    // start, so window_index never enters the arithmetic.
    for (int c = 0; c < set.n_c; ++c) fill_column(pulse, h, c * m, rows, set.Psi_C.col(c), set.PsiT_C.col(c));
    for (int r = 0; r < set.n_p; ++r)
        fill_column(pulse, h, -(set.n_p - r) * m, rows, set.Psi_PC.col(r), set.PsiT_PC.col(r));

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(set.PsiT_C);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    set.condition_number = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    if (!(set.condition_number < max_condition)) {
        std::ostringstream os;
        os << "filter_and_partition: filtered current basis is ill-conditioned (condition "
           << set.condition_number << "); singular values:";
        for (Eigen::Index i = 0; i < sv.size(); ++i) os << ' ' << sv(i);
        throw std::invalid_argument(os.str());
    }
    return set;
}

}  // namespace fbf
