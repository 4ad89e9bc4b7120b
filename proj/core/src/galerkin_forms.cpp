#include "maxreg/galerkin_forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "maxreg/errors.hpp"

namespace maxreg {

std::shared_ptr<const GalerkinSpace> GalerkinSpace::create(const Mat& gram_h, const Mat& gram_v,
                                                           std::optional<double> embed_const) {
    if (gram_h.rows() != gram_v.rows() || gram_h.cols() != gram_v.cols())
        throw ConfigurationError("gram_H and gram_V have different shapes");
    auto hr = linalg::hermitian_roots(gram_h);
    auto vr = linalg::hermitian_roots(gram_v);

    std::shared_ptr<GalerkinSpace> s(new GalerkinSpace());
    s->gram_h_ = linalg::hermitian_part(gram_h);
    s->gram_v_ = linalg::hermitian_part(gram_v);
    s->h_sqrt_ = std::move(hr.sqrt);
    s->h_inv_sqrt_ = std::move(hr.inv_sqrt);
    s->v_sqrt_ = std::move(vr.sqrt);
    s->v_inv_sqrt_ = std::move(vr.inv_sqrt);
    s->h_llt_.compute(s->gram_h_);
    if (s->h_llt_.info() != Eigen::Success) throw ConfigurationError("gram_H is singular");

    const double lam_max =
        linalg::generalized_hermitian_eigenvalues(s->gram_h_, s->v_inv_sqrt_).maxCoeff();
    if (embed_const) {
        if (!(*embed_const > 0.0)) throw ConfigurationError("embed_const must be positive");
        if (lam_max > (*embed_const) * (*embed_const) * (1.0 + 1e-9))
            throw ConfigurationError("embedding constant too small: V does not embed into H with it");
        s->embed_const_ = *embed_const;
    } else {
        s->embed_const_ = std::sqrt(lam_max);
    }
    return s;
}

Mat GalerkinSpace::h_solve(const Mat& rhs) const { return h_llt_.solve(rhs); }

double GalerkinSpace::h_norm(const Vec& x) const {
    return std::sqrt(std::max(0.0, x.dot(gram_h_ * x).real()));
}

double GalerkinSpace::v_norm(const Vec& x) const {
    return std::sqrt(std::max(0.0, x.dot(gram_v_ * x).real()));
}

double GalerkinSpace::v_dual_norm(const Vec& x) const { return (v_inv_sqrt_ * (gram_h_ * x)).norm(); }

double GalerkinSpace::h_op_norm(const Mat& a) const {
    return linalg::spectral_norm(h_sqrt_ * a * h_inv_sqrt_);
}

double GalerkinSpace::hv_op_norm(const Mat& a) const {
    return linalg::spectral_norm(v_sqrt_ * a * h_inv_sqrt_);
}

double GalerkinSpace::vdual_op_norm(const Mat& a) const {
    const Mat right = h_solve(v_sqrt_);
    return linalg::spectral_norm(v_inv_sqrt_ * gram_h_ * a * right);
}

double GalerkinSpace::form_norm(const Mat& f) const {
    return linalg::spectral_norm(v_inv_sqrt_ * f * v_inv_sqrt_);
}

// ---------------------------------------------------------------------------

namespace {

void check_piece(const HolderPiece& p) {
    if (!(p.exponent > 0.0 && p.exponent <= 1.0))
        throw ConfigurationError("Hölder exponent must lie in (0, 1]");
    if (!(p.constant >= 0.0) || !std::isfinite(p.constant))
        throw ConfigurationError("Hölder constant must be finite and non-negative");
}

}  // namespace

ModulusOfContinuity ModulusOfContinuity::holder(double exponent, double constant) {
    ModulusOfContinuity m;
    m.kind_ = Kind::Holder;
    m.pieces_ = {HolderPiece{exponent, constant}};
    check_piece(m.pieces_[0]);
    return m;
}

ModulusOfContinuity ModulusOfContinuity::piecewise_holder(std::vector<double> breakpoints,
                                                          std::vector<HolderPiece> pieces) {
    if (pieces.size() != breakpoints.size() + 1)
        throw ConfigurationError("piecewise Hölder modulus needs one piece per subinterval");
    for (std::size_t k = 1; k < breakpoints.size(); ++k)
        if (!(breakpoints[k] > breakpoints[k - 1]))
            throw ConfigurationError("breakpoints must be strictly increasing");
    for (const auto& p : pieces) check_piece(p);
    ModulusOfContinuity m;
    m.kind_ = Kind::PiecewiseHolder;
    m.breakpoints_ = std::move(breakpoints);
    m.pieces_ = std::move(pieces);
    return m;
}

ModulusOfContinuity ModulusOfContinuity::tabulated(std::vector<double> gaps, std::vector<double> values) {
    if (gaps.empty() || gaps.size() != values.size())
        throw ConfigurationError("tabulated modulus needs matching non-empty gap/value lists");
    for (std::size_t k = 0; k < gaps.size(); ++k) {
        if (!std::isfinite(gaps[k]) || !std::isfinite(values[k]) || gaps[k] < 0.0 || values[k] < 0.0)
            throw ConfigurationError("tabulated modulus entries must be finite and non-negative");
        if (k > 0 && !(gaps[k] > gaps[k - 1]))
            throw ConfigurationError("tabulated gaps must be strictly increasing");
        if (k > 0 && values[k] < values[k - 1])
            throw ConfigurationError("tabulated modulus must be non-decreasing");
    }
    ModulusOfContinuity m;
    m.kind_ = Kind::Tabulated;
    m.gaps_ = std::move(gaps);
    m.values_ = std::move(values);
    return m;
}

double ModulusOfContinuity::operator()(double h) const {
    switch (kind_) {
        case Kind::Holder:
        case Kind::PiecewiseHolder: {
            if (h <= 0.0) return 0.0;
            double w = 0.0;
            for (const auto& p : pieces_)
                if (p.constant > 0.0) w = std::max(w, p.constant * std::pow(h, p.exponent));
            return w;
        }
        case Kind::Tabulated: {
            if (h <= gaps_.front()) return values_.front();
            if (h >= gaps_.back()) return values_.back();
            const auto it = std::upper_bound(gaps_.begin(), gaps_.end(), h);
            const std::size_t k = static_cast<std::size_t>(it - gaps_.begin());
            const double lam = (h - gaps_[k - 1]) / (gaps_[k] - gaps_[k - 1]);
            return values_[k - 1] + lam * (values_[k] - values_[k - 1]);
        }
    }
    return 0.0;
}

bool ModulusOfContinuity::vanishes_at_zero() const {
    if (kind_ != Kind::Tabulated) return true;
    return gaps_.front() == 0.0 && values_.front() == 0.0;
}

double ModulusOfContinuity::min_exponent() const {
    if (kind_ == Kind::Tabulated) throw DomainError("tabulated modulus has no Hölder exponent");
    double a = 1.0;
    for (const auto& p : pieces_) a = std::min(a, p.exponent);
    return a;
}

// ---------------------------------------------------------------------------

FormFamily::FormFamily(GalerkinSpacePtr space, double horizon, FormFunction form, Constants constants,
                       ModulusOfContinuity modulus, std::string id, FormFunction left_limit)
    : space_(std::move(space)),
      horizon_(horizon),
      form_(std::move(form)),
      left_(std::move(left_limit)),
      base_(constants),
      modulus_(std::move(modulus)),
      id_(std::move(id)) {
    if (!space_) throw ConfigurationError("form family needs a Galerkin space");
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw ConfigurationError("horizon τ must be positive");
    if (!form_) throw ConfigurationError("form family needs a form evaluator");
    if (!(base_.bound_M > 0.0)) throw ConfigurationError("bound M must be positive");
    if (!(base_.coercivity_alpha > 0.0)) throw ConfigurationError("coercivity α must be positive");
    if (!(base_.shift_delta >= 0.0)) throw ConfigurationError("shift δ must be non-negative");
    has_left_ = static_cast<bool>(left_);
    if (!has_left_) left_ = form_;
}

Mat FormFamily::form_at(double t) const {
    const double tc = std::clamp(t, 0.0, horizon_);
    Mat f = form_(tc);
    if (f.rows() != dim() || f.cols() != dim())
        throw ConfigurationError("form evaluator returned a matrix of the wrong size");
    if (mu_ != 0.0) f += mu_ * space_->gram_H();
    return f;
}

Mat FormFamily::form_left(double t) const {
    const double tc = std::clamp(t, 0.0, horizon_);
    Mat f = left_(tc);
    if (mu_ != 0.0) f += mu_ * space_->gram_H();
    return f;
}

double FormFamily::bound_M() const {
    const double c = space_->embed_const();
    return base_.bound_M + mu_ * c * c;
}

double FormFamily::shift_delta() const { return std::max(0.0, base_.shift_delta - mu_); }

FormFamily FormFamily::with_id(std::string id) const {
    FormFamily f = *this;
    f.id_ = std::move(id);
    return f;
}

FormFamily FormFamily::with_modulus(ModulusOfContinuity modulus) const {
    FormFamily f = *this;
    f.modulus_ = std::move(modulus);
    return f;
}

OperatorH assemble_operator(const FormFamily& family, double t) {
    return OperatorH{family.space().h_solve(family.form_at(t)), family.space_ptr(), family.shift_delta()};
}

OperatorH assemble_operator_left(const FormFamily& family, double t) {
    return OperatorH{family.space().h_solve(family.form_left(t)), family.space_ptr(), family.shift_delta()};
}

std::vector<double> sample_times(double horizon, int count) {
    if (count < 1) throw DomainError("need at least one sample time");
    if (count == 1) return {0.0};
    std::vector<double> t(count);
    for (int k = 0; k < count; ++k) t[k] = horizon * k / (count - 1);
    t.back() = horizon;
    return t;
}

BoundCheck verify_bounded(const FormFamily& family, const std::vector<double>& times) {
    if (times.empty()) throw DomainError("verify_bounded needs sample times");
    BoundCheck out;
    for (double t : times) out.M_est = std::max(out.M_est, family.space().form_norm(family.form_at(t)));
    out.violated = out.M_est > family.bound_M() * (1.0 + 1e-9);
    return out;
}

CoercivityCheck verify_coercive(const FormFamily& family, const std::vector<double>& times) {
    if (times.empty()) throw DomainError("verify_coercive needs sample times");
    CoercivityCheck out;
    out.delta_used = family.shift_delta();
    out.alpha_est = std::numeric_limits<double>::infinity();
    const auto& sp = family.space();
    for (double t : times) {
        const Mat s = linalg::hermitian_part(family.form_at(t)) + out.delta_used * sp.gram_H();
        const double lam = linalg::generalized_hermitian_eigenvalues(s, sp.v_inv_sqrt())(0);
        out.alpha_est = std::min(out.alpha_est, lam);
    }
    out.violated = out.alpha_est < family.coercivity_alpha() * (1.0 - 1e-9);
    return out;
}

std::vector<std::pair<double, double>> default_modulus_pairs(double horizon, int gaps, int starts) {
    if (gaps < 2 || starts < 1) throw DomainError("modulus pair grid too small");
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(static_cast<std::size_t>(gaps) * starts);
    for (int i = 0; i < gaps; ++i) {
        const double h = horizon * std::pow(10.0, -4.0 + 4.0 * i / (gaps - 1));
        for (int j = 0; j < starts; ++j) {
            const double s = starts == 1 ? 0.0 : (horizon - h) * j / (starts - 1);
            pairs.emplace_back(s, std::min(horizon, s + h));
        }
    }
    return pairs;
}

ModulusOfContinuity estimate_modulus(const FormFamily& family,
                                     const std::vector<std::pair<double, double>>& pair_grid) {
    struct Sample {
        double gap;
        double value;
    };
    std::vector<Sample> samples;
    samples.reserve(pair_grid.size());
    const auto& sp = family.space();
    for (const auto& [s, t] : pair_grid) {
        const double gap = std::abs(t - s);
        const double value = gap == 0.0 ? 0.0 : sp.form_norm(family.form_at(t) - family.form_at(s));
        samples.push_back({gap, value});
    }
    std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.gap < b.gap; });

    std::vector<double> gaps{0.0};
    std::vector<double> values{0.0};
    for (const auto& smp : samples) {
        if (smp.gap == 0.0) continue;
        if (smp.gap <= gaps.back() * (1.0 + 1e-9)) {
            values.back() = std::max(values.back(), smp.value);
        } else {
            gaps.push_back(smp.gap);
            values.push_back(smp.value);
        }
    }
    for (std::size_t k = 1; k < values.size(); ++k) values[k] = std::max(values[k], values[k - 1]);
    return ModulusOfContinuity::tabulated(std::move(gaps), std::move(values));
}

FormFamily shift_family(const FormFamily& family, double mu) {
    if (!(mu >= 0.0)) throw DomainError("shift μ must be non-negative");
    FormFamily out = family;
    out.mu_ = family.mu_ + mu;
    return out;
}

FormFamily constant_family(GalerkinSpacePtr space, double horizon, const Mat& form,
                           FormFamily::Constants constants, std::string id) {
    return FormFamily(std::move(space), horizon, [form](double) { return form; }, constants,
                      ModulusOfContinuity::zero(), std::move(id));
}

FormFamily::Constants measure_constants(GalerkinSpacePtr space, double horizon, const FormFunction& form,
                                        double delta, int samples, double slack) {
    FormFamily::Constants c;
    c.shift_delta = delta;
    double m = 0.0;
    double alpha = std::numeric_limits<double>::infinity();
    for (double t : sample_times(horizon, samples)) {
        const Mat f = form(t);
        m = std::max(m, space->form_norm(f));
        const Mat s = linalg::hermitian_part(f) + delta * space->gram_H();
        alpha = std::min(alpha, linalg::generalized_hermitian_eigenvalues(s, space->v_inv_sqrt())(0));
    }
    if (!(alpha > 0.0)) throw ConfigurationError("family is not coercive with the given δ");
    c.bound_M = m * (1.0 + slack);
    c.coercivity_alpha = alpha * (1.0 - slack);
    return c;
}

}  // namespace maxreg
