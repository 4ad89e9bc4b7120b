#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>

#include "maxreg/errors.hpp"
#include "maxreg/model_zoo.hpp"
#include "maxreg/pdo.hpp"
#include "maxreg/volterra.hpp"
#include "test_util.hpp"

using namespace maxreg;

namespace {

constexpr double kPi = 3.141592653589793;

Point pt(double a) { return Point::Constant(1, a); }

double japanese(double xi) { return std::sqrt(1.0 + xi * xi); }

SampledField gaussian_field(const FieldGrid& g, int m, double width = 0.5, double center = 0.0) {
    return SampledField::sample(g, m, [&](const Point& x) {
        Vec v(m);
        const double r2 = (x.array() - center).square().sum();
        for (int i = 0; i < m; ++i) v(i) = cplx(1.0 + i, 0.3 * i) * std::exp(-r2 / (2.0 * width * width));
        return v;
    });
}

SampledField random_field(const FieldGrid& g, int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    SampledField f(g, m);
    for (int p = 0; p < g.total_points(); ++p) f.values.col(p) = test::random_vector(rng, m);
    return f;
}

// Scalar symbol m(ξ) = 1/(1 + ξ²) blended with a first-order part; bounded by 1.
cplx scalar_m(double xi) { return cplx(1.0, 0.5 * xi) / (1.0 + xi * xi); }

Symbol scalar_multiplier(int dim_x = 1) {
    return Symbol::multiplier(dim_x, 1, [](const Point& xi) {
        Mat v(1, 1);
        v(0, 0) = scalar_m(xi.norm());
        return v;
    });
}

FormFamily scalar_family(double a) {
    Mat one = Mat::Identity(1, 1);
    return constant_family(GalerkinSpace::create(one, one), 1.0, a * one, {a, a, 0.0});
}

// Lipschitz constant 1 in x, identity in ξ.
Symbol lipschitz_symbol() {
    Symbol s(1, 1, [](const Point& x, const Point&) {
        Mat v(1, 1);
        v(0, 0) = std::sin(x(0));
        return v;
    });
    s.with_modulus(ModulusOfContinuity::holder(1.0, 1.0)).with_smoothing_delta(0.5);
    return s;
}

std::vector<Point> points(double lo, double hi, int count) {
    std::vector<Point> out;
    for (int i = 0; i < count; ++i) out.push_back(pt(lo + (hi - lo) * i / (count - 1)));
    return out;
}

std::vector<Point> log_frequencies(int count) {
    std::vector<Point> out{pt(0.0)};
    for (int i = 0; i < count; ++i) {
        const double xi = std::pow(10.0, -1.0 + 4.0 * i / (count - 1));
        out.push_back(pt(xi));
        out.push_back(pt(-xi));
    }
    return out;
}

}  // namespace

TEST(ApplyT, IdentityReproducesInput) {
    for (int n : {1, 2}) {
        FieldGrid g{n, 4.0, n == 1 ? 8 : 5};
        const auto f = random_field(g, 2, 3);
        const auto out = apply_T(Symbol::identity(n, 2), f);
        EXPECT_LT((out.values - f.values).norm(), 1e-12 * f.values.norm());
    }
}

TEST(ApplyT, MultiplierMatchesDenseDft) {
    FieldGrid g{1, 3.0, 6};
    const int size = g.points_per_axis();
    const auto f = random_field(g, 1, 5);
    const auto out = apply_T(scalar_multiplier(), f);
    // Dense DFT with the signed frequency convention.
    for (int j = 0; j < size; ++j) {
        cplx acc = 0.0;
        for (int k = 0; k < size; ++k) {
            const int ks = k < size / 2 ? k : k - size;
            const double xi = 2.0 * kPi * ks / (size * g.spacing());
            cplx fk = 0.0;
            for (int l = 0; l < size; ++l) fk += f.values(0, l) * std::polar(1.0, -2.0 * kPi * k * l / size);
            acc += scalar_m(std::abs(xi)) * fk * std::polar(1.0, 2.0 * kPi * k * j / size);
        }
        EXPECT_LT(std::abs(acc / double(size) - out.values(0, j)), 1e-12);
    }
}

TEST(ApplyT, AdjointPairing) {
    const auto fam = build_rotating_family(2, 0.75, 0.5);
    const auto sym = mr_symbol(fam);
    FieldGrid g{1, 2.0, 6};
    const auto f = random_field(g, 2, 1);
    const auto h = random_field(g, 2, 2);
    const auto tf = apply_T(sym, f);
    const auto th = apply_T_adjoint(sym, h);
    cplx lhs = 0.0, rhs = 0.0;
    for (int p = 0; p < g.total_points(); ++p) {
        lhs += h.values.col(p).dot(tf.values.col(p));
        rhs += th.values.col(p).dot(f.values.col(p));
    }
    EXPECT_LT(std::abs(lhs - rhs), 1e-11 * std::abs(lhs));
}

TEST(ApplyT, ScalarMaximalRegularitySymbolMatchesVolterraL) {
    // σ(ξ) = a(iξ + a)⁻¹ is convolution with a e^{−at}1_{t>0}: on data supported in (0, 1) it is L.
    const double a = 2.0;
    auto data = [](double t) { return t > 0.0 && t < 1.0 ? bump(pt(2.0 * t - 1.0)) : 0.0; };
    FieldGrid g{1, 8.0, 12};
    const auto f = SampledField::sample(g, 1, [&](const Point& x) { return Vec::Constant(1, data(x(0))); });
    const auto t_out = apply_T(mr_symbol(scalar_family(a)), f);
    EXPECT_FALSE(t_out.aliasing_warning);

    const int cells = 2048;  // node k·8 is box point 2048 + k
    const auto grid = TimeGrid::uniform(1.0, cells);
    const auto l_out = apply_L(scalar_family(a), GridFunction::sample_midpoints(grid, 1, [&](double t) {
        return Vec::Constant(1, data(t));
    }));

    double worst_t = 0.0, worst_l = 0.0, scale = 0.0;
    for (int k = 0; k <= cells; k += 64) {
        const double t = grid.node(k);
        auto integrand = [&](double s) { return a * std::exp(-a * (t - s)) * data(s); };
        const double oracle =
            t > 0.0 ? boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, t, 12, 1e-14) : 0.0;
        const int p = g.points_per_axis() / 2 + k / 8;
        ASSERT_NEAR(g.point(p)(0), t, 1e-12);
        worst_t = std::max(worst_t, std::abs(t_out.values(0, p) - oracle));
        worst_l = std::max(worst_l, std::abs(l_out.at(k)(0) - t_out.values(0, p)));
        scale = std::max(scale, std::abs(oracle));
    }
    EXPECT_LT(worst_t / scale, 1e-6);
    EXPECT_LT(worst_l / scale, 1e-6);
}

TEST(ApplyT, AliasingFlagged) {
    FieldGrid g{1, 1.0, 6};
    const auto f = SampledField::sample(g, 1, [](const Point&) { return Vec::Ones(1); });
    EXPECT_TRUE(apply_T(Symbol::identity(1, 1), f).aliasing_warning);
    EXPECT_FALSE(apply_T(Symbol::identity(1, 1), gaussian_field(FieldGrid{1, 8.0, 7}, 1)).aliasing_warning);
}

TEST(ApplyT, Linearity) {
    const auto sym = mr_symbol(build_rotating_family(2, 0.75, 0.5));
    FieldGrid g{1, 2.0, 7};
    const auto f = random_field(g, 2, 7);
    const auto h = random_field(g, 2, 8);
    const cplx a(0.7, -1.2), b(-0.4, 0.9);
    SampledField combo(g, Mat(a * f.values + b * h.values));
    const Mat lhs = apply_T(sym, combo).values;
    const Mat rhs = a * apply_T(sym, f).values + b * apply_T(sym, h).values;
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * rhs.norm());
}

TEST(ApplyT, MultiplierCommutesWithCyclicShift) {
    FieldGrid g{1, 4.0, 8};
    const auto f = random_field(g, 1, 13);
    const int shift = 37;
    const int size = g.points_per_axis();
    SampledField shifted(g, 1);
    for (int p = 0; p < size; ++p) shifted.values.col((p + shift) % size) = f.values.col(p);
    const auto out = apply_T(scalar_multiplier(), f);
    const auto out_shifted = apply_T(scalar_multiplier(), shifted);
    for (int p = 0; p < size; ++p)
        EXPECT_LT(std::abs(out_shifted.values(0, (p + shift) % size) - out.values(0, p)), 1e-13);
}

TEST(Split, XIndependentIsExact) {
    const auto sym = scalar_multiplier();
    const auto split = split_symbol(sym);
    for (double xi : {0.0, 1.0, -30.0})
        for (double x : {-1.0, 0.4}) {
            EXPECT_EQ((split.smooth.value_at(x, xi) - sym.value_at(x, xi)).norm(), 0.0);
            EXPECT_EQ(split.remainder.value_at(x, xi).norm(), 0.0);
        }
}

TEST(Split, LipschitzRemainderBound) {
    const auto sym = lipschitz_symbol();
    const auto split = split_symbol(sym);
    // First absolute moment of the normalized bump, by adaptive quadrature.
    auto bump1 = [](double y) { return bump(pt(y)); };
    auto moment1 = [](double y) { return std::abs(y) * bump(pt(y)); };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double moment = GK::integrate(moment1, -1.0, 1.0, 10, 1e-13) / GK::integrate(bump1, -1.0, 1.0, 10, 1e-13);
    for (double xi : {0.0, 1.0, 10.0, 100.0, 1e4})
        for (double x : {-2.0, -0.3, 0.0, 0.9, 1.7}) {
            const double bound = std::pow(japanese(xi), -0.5) * moment;
            EXPECT_LE(split.remainder.value_at(x, xi).norm(), bound * (1.0 + 1e-9));
        }
}

TEST(Split, PiecesSumToSymbol) {
    const auto sym = mr_symbol(build_rotating_family(2, 0.75, 0.5));
    const auto split = split_symbol(sym);
    for (double xi : {0.0, 3.0, -50.0})
        for (double x : {-0.2, 0.3, 0.8}) {
            const Mat s = split.smooth.value_at(x, xi) + split.remainder.value_at(x, xi);
            EXPECT_LT((s - sym.value_at(x, xi)).norm(), 1e-12);
        }
}

TEST(Split, OperatorsAddUp) {
    const auto sym = mr_symbol(build_rotating_family(2, 0.75, 0.5));
    const auto split = split_symbol(sym);
    FieldGrid g{1, 2.0, 6};
    const auto f = gaussian_field(g, 2, 0.3, 0.5);
    const Mat whole = apply_T(sym, f).values;
    const Mat parts = apply_T(split.smooth, f).values + apply_T(split.remainder, f).values;
    EXPECT_LT((whole - parts).norm(), 1e-10 * whole.norm());
}

TEST(Split, CheckedConstantsFinite) {
    const auto sym = lipschitz_symbol();
    const auto split = split_symbol(sym);
    const auto c = check_split(sym, split, points(-1.0, 1.0, 7), log_frequencies(6), 1);
    EXPECT_TRUE(std::isfinite(c.smooth_constant));
    EXPECT_TRUE(std::isfinite(c.remainder_constant));
    EXPECT_GT(c.remainder_constant, 0.0);
}

TEST(Split, InvalidDeltaRejected) {
    auto sym = lipschitz_symbol();
    sym.with_smoothing_delta(1.0);
    EXPECT_THROW(split_symbol(sym), DomainError);
    sym.with_smoothing_delta(0.0);
    EXPECT_THROW(split_symbol(sym), DomainError);
}

TEST(Conditions, IdentitySymbol) {
    const auto rep = check_symbol_conditions(Symbol::identity(1, 2), points(-1.0, 1.0, 5), log_frequencies(8), 2);
    ASSERT_EQ(rep.entries.size(), 3u);
    EXPECT_NEAR(rep.entries[0].c_alpha, 1.0, 1e-14);
    EXPECT_EQ(rep.entries[1].c_alpha, 0.0);
    EXPECT_EQ(rep.entries[2].c_alpha, 0.0);
    EXPECT_TRUE(rep.hypotheses_met);
}

TEST(Conditions, OrderAboveLimitRejected) {
    EXPECT_THROW(check_symbol_conditions(Symbol::identity(1, 1), points(0, 1, 3), log_frequencies(3), 3),
                 DomainError);
}

TEST(Conditions, SelfAdjointMaximalRegularitySymbol) {
    const auto fam = build_rotating_family(2, 0.75, 0.5);
    const auto rep = check_symbol_conditions(mr_symbol(fam), points(0.0, 1.0, 11), log_frequencies(25), 2);
    EXPECT_NEAR(rep.entries[0].c_alpha, 1.0, 1e-9);
    EXPECT_TRUE(std::isfinite(rep.entries[1].c_alpha));
    EXPECT_LT(rep.entries[1].c_alpha, 10.0);
    EXPECT_TRUE(rep.hypotheses_met);
}

TEST(Conditions, HolderRatiosStayBoundedUnderRefinement) {
    const auto fam = build_rotating_family(2, 0.75, 0.5);
    const auto sym = mr_symbol(fam);
    const auto coarse = check_symbol_conditions(sym, points(0.0, 1.0, 9), log_frequencies(10), 1);
    const auto fine = check_symbol_conditions(sym, points(0.0, 1.0, 33), log_frequencies(10), 1);
    for (std::size_t i = 0; i < coarse.entries.size(); ++i) {
        EXPECT_TRUE(std::isfinite(fine.entries[i].x_ratio));
        EXPECT_LE(fine.entries[i].x_ratio, 2.0 * coarse.entries[i].x_ratio);
    }
}

TEST(Conditions, DiniFailureMarksHypothesisUnmet) {
    // ω(t) = log(e/t)^{−1/4}: ∫₀¹ ω²/t dt diverges.
    std::vector<double> gaps, values;
    for (int i = 0; i <= 300; ++i) {
        const double t = std::pow(10.0, -300.0 + i);
        gaps.push_back(t);
        values.push_back(std::pow(std::log(std::exp(1.0) / t), -0.25));
    }
    auto sym = lipschitz_symbol();
    sym.with_modulus(ModulusOfContinuity::tabulated(gaps, values));
    const auto rep = check_symbol_conditions(sym, points(-1.0, 1.0, 5), log_frequencies(4), 1);
    EXPECT_FALSE(rep.dini_2log_finite);
    EXPECT_FALSE(rep.hypotheses_met);
    // The engine still runs.
    FieldGrid g{1, 6.0, 7};
    const auto out = apply_T(sym, gaussian_field(g, 1));
    EXPECT_TRUE(out.values.allFinite());
}

TEST(MrSymbol, IdentityAtZeroFrequency) {
    const auto sym = mr_symbol(build_rotating_family(3, 0.75, 0.5));
    for (double t : {0.0, 0.4, 1.0})
        EXPECT_LT((sym.value_at(t, 0.0) - Mat::Identity(3, 3)).norm(), 1e-12);
}

TEST(MrSymbol, ClampedOutsideHorizon) {
    const auto fam = build_rotating_family(3, 0.75, 0.5);
    const auto sym = mr_symbol(fam);
    for (double xi : {0.5, -7.0}) {
        EXPECT_EQ((sym.value_at(-0.3, xi) - sym.value_at(0.0, xi)).norm(), 0.0);
        EXPECT_EQ((sym.value_at(2.5, xi) - sym.value_at(1.0, xi)).norm(), 0.0);
    }
}

TEST(MrSymbol, BoundedWithDecayingDerivative) {
    const auto sym = mr_symbol(build_rotating_family(3, 0.75, 0.5));
    double c0 = 0.0, c1 = 0.0;
    for (const auto& xi : log_frequencies(30))
        for (double t : {0.0, 0.3, 0.7, 1.0}) {
            c0 = std::max(c0, sym.value_at(t, xi(0)).norm());
            c1 = std::max(c1, xi_derivative(sym, pt(t), xi, {1}).norm() * japanese(xi(0)));
        }
    EXPECT_LT(c0, 2.0);
    EXPECT_LT(c1, 5.0);
    // Large-ξ decay ∥σ∥ ≲ ∥A∥/|ξ|.
    const double a_norm = assemble_operator(build_rotating_family(3, 0.75, 0.5), 1.0).matrix.norm();
    EXPECT_LE(sym.value_at(1.0, 1e6).norm(), 2.0 * a_norm / 1e6);
}

TEST(Opnorm, ScaledIdentity) {
    const cplx c(0.6, -0.8);
    const auto sym = Symbol::multiplier(1, 2, [c](const Point&) { return Mat(c * Mat::Identity(2, 2)); });
    EXPECT_NEAR(opnorm_estimate(sym, FieldGrid{1, 2.0, 7}, 2), std::abs(c), 1e-10);
}

TEST(Opnorm, ScalarMultiplierSup) {
    FieldGrid g{1, 4.0, 8};
    double sup = 0.0;
    for (int p = 0; p < g.total_points(); ++p) sup = std::max(sup, std::abs(scalar_m(std::abs(g.frequency(p)(0)))));
    EXPECT_NEAR(opnorm_estimate(scalar_multiplier(), g, 3), sup, 0.01 * sup);
}

TEST(Opnorm, NonDecreasingInProbes) {
    const auto sym = mr_symbol(build_rotating_family(2, 0.75, 0.5));
    FieldGrid g{1, 2.0, 6};
    const double one = opnorm_estimate(sym, g, 1, 3, 20);
    const double three = opnorm_estimate(sym, g, 3, 3, 20);
    EXPECT_GE(three, one);
}

TEST(Opnorm, SelfAdjointMaximalRegularityContraction) {
    const auto sym = mr_symbol(build_rotating_family(2, 0.75, 0.5));
    const double est = opnorm_estimate(sym, FieldGrid{1, 2.0, 7}, 2);
    EXPECT_LE(est, 1.05);
    EXPECT_GT(est, 0.5);
}

TEST(Opnorm, StableUnderRefinement) {
    const auto sym = mr_symbol(build_rotating_family(2, 0.75, 0.5));
    const double k6 = opnorm_estimate(sym, FieldGrid{1, 2.0, 6}, 2);
    const double k7 = opnorm_estimate(sym, FieldGrid{1, 2.0, 7}, 2);
    EXPECT_LE(std::abs(k7 / k6 - 1.0), 0.10);
}

TEST(FieldGridValidation, RejectsBadInput) {
    EXPECT_THROW((FieldGrid{3, 1.0, 4}.validate()), ConfigurationError);
    EXPECT_THROW((FieldGrid{1, 0.0, 4}.validate()), ConfigurationError);
    EXPECT_THROW((FieldGrid{1, 1.0, 21}.validate()), ConfigurationError);
}
