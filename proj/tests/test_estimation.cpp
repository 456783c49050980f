#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "taylorstaff/estimation.hpp"

using namespace taylorstaff;

namespace {

CountMatrix matrix(std::size_t m, std::size_t k, double delta, const std::vector<std::int64_t>& values) {
    CountMatrix cm(m, k, delta);
    cm.counts = values;
    return cm;
}

// Direct sum of multivariate normal log densities.
double direct_mvn_ll(const CountMatrix& d, const Eigen::VectorXd& mu, const Eigen::MatrixXd& S) {
    const auto k = static_cast<Eigen::Index>(d.k);
    const Eigen::MatrixXd inv = S.inverse();
    const double logdet = std::log(S.determinant());
    double ll = 0.0;
    for (std::size_t j = 0; j < d.m; ++j) {
        Eigen::VectorXd x(k);
        for (Eigen::Index i = 0; i < k; ++i) x(i) = static_cast<double>(d.at(j, static_cast<std::size_t>(i)));
        const Eigen::VectorXd r = x - mu;
        ll += -0.5 * k * std::log(2.0 * std::numbers::pi) - 0.5 * logdet - 0.5 * r.dot(inv * r);
    }
    return ll;
}

std::vector<double> bump_rates() {
    std::vector<double> r(24);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = 100.0 + 300.0 * std::exp(-std::pow((static_cast<double>(i) - 12.0) / 5.0, 2));
    return r;
}

FitResult stub_fit(ModelTag t, double aic, int q, const std::string& id = "x") {
    FitResult f;
    f.model = t;
    f.aic = aic;
    f.bic = aic;
    f.q = q;
    f.data_id = id;
    return f;
}

}  // namespace

TEST(Estimation, GaussianLikelihoodMatchesDirectSum) {
    const auto d = matrix(4, 3, 1.0, {10, 12, 9, 14, 11, 13, 8, 9, 12, 11, 15, 10});
    CountSummary s(d);
    Eigen::VectorXd mu(3);
    mu << 10.5, 11.0, 11.5;
    Eigen::MatrixXd S(3, 3);
    S << 6.0, 1.0, 0.5, 1.0, 5.0, 1.2, 0.5, 1.2, 7.0;
    const auto ll = gaussian_log_likelihood(s, mu, S);
    EXPECT_FALSE(ll.jittered);
    EXPECT_NEAR(ll.value, direct_mvn_ll(d, mu, S), 1e-9);
}

TEST(Estimation, GaussianLikelihoodJittersSingularCovariance) {
    const auto d = matrix(3, 2, 1.0, {10, 10, 12, 12, 9, 9});
    CountSummary s(d);
    Eigen::MatrixXd S(2, 2);
    S << 4.0, 4.0, 4.0, 4.0;
    const auto ll = gaussian_log_likelihood(s, Eigen::Vector2d(10.0, 10.0), S);
    EXPECT_TRUE(ll.jittered);
}

TEST(Estimation, PoissonLikelihoodMatchesLgammaSum) {
    const auto d = matrix(3, 2, 0.5, {4, 7, 5, 9, 3, 6});
    CountSummary s(d);
    const std::vector<double> rates{8.0, 14.0};
    double ll = 0.0;
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < 2; ++i) {
            const double mu = rates[i] * 0.5, c = static_cast<double>(d.at(j, i));
            ll += c * std::log(mu) - mu - std::lgamma(c + 1.0);
        }
    EXPECT_NEAR(poisson_log_likelihood(s, rates), ll, 1e-10);
    EXPECT_NEAR(model_log_likelihood(d, ArrivalModelSpec::m1(10.0)), poisson_log_likelihood(s, {10.0}), 1e-10);
}

TEST(Estimation, PoissonFitIsTheSampleMeanRate) {
    const auto d = simulate_counts(ArrivalModelSpec::m1(120.0), 6, 0.5, 200, 3);
    const auto f = fit_mle(d, ModelTag::m1);
    double total = 0.0;
    for (auto c : d.counts) total += static_cast<double>(c);
    const double lam = total / (200.0 * 6.0 * 0.5);
    EXPECT_NEAR(f.param("lambda"), lam, 1e-9);
    EXPECT_EQ(f.q, 1);
    EXPECT_NEAR(f.log_likelihood, poisson_log_likelihood(CountSummary(d), {lam}), 1e-8);
    EXPECT_NEAR(f.aic, 2.0 * 1 - 2.0 * f.log_likelihood, 1e-9);
    EXPECT_NEAR(f.bic, std::log(200.0) - 2.0 * f.log_likelihood, 1e-9);
}

TEST(Estimation, RecoversGammaMixingScale) {
    const auto d = simulate_counts(ArrivalModelSpec::m2(100.0, 0.2), 6, 1.0, 1000, 4);
    const auto f = fit_mle(d, ModelTag::m2);
    EXPECT_NEAR(f.param("sigma_g"), 0.2, 0.025);
    EXPECT_EQ(f.q, 2);
    EXPECT_TRUE(f.converged);
}

TEST(Estimation, RecoversStationaryCirParameters) {
    const auto d = simulate_counts(ArrivalModelSpec::m4(100.0, 0.5, 1.0), 12, 1.0, 800, 5);
    const auto f = fit_mle(d, ModelTag::m4);
    EXPECT_NEAR(f.param("kappa"), 0.5, 0.2);
    EXPECT_NEAR(f.param("sigma"), 1.0, 0.2);
    EXPECT_EQ(f.q, 3);
}

TEST(Estimation, SingleRateDataCannotSeparateM4FromM5) {
    const auto d = simulate_counts(ArrivalModelSpec::m5({100.0, 0.1, 0.5, 0.5}), 12, 1.0, 300, 6);
    const auto m4 = fit_mle(d, ModelTag::m4);
    const auto m5 = fit_mle(d, ModelTag::m5);
    EXPECT_NEAR(m4.log_likelihood, m5.log_likelihood, 1e-3);
    EXPECT_FALSE(m5.note.empty());
    // Only sigma^2 lambda^alpha is identified.
    const double lam = m5.param("lambda");
    EXPECT_NEAR(m5.param("sigma") * m5.param("sigma") * std::pow(lam, m5.param("alpha")),
                m4.param("sigma") * m4.param("sigma"), 0.01 * m4.param("sigma") * m4.param("sigma"));
    EXPECT_NEAR(m5.param("kappa"), m4.param("kappa"), 0.01 * m4.param("kappa"));
    EXPECT_EQ(select_model({m4, m5}).best_aic(), ModelTag::m4);
}

TEST(Estimation, NonStationaryTwoStepFitSelectsTheDynamicModel) {
    auto spec = ArrivalModelSpec::m5({100.0, 0.1, 0.5, 0.5});
    spec.nonstationary = RateProfile{1.0, bump_rates()};
    const auto d = simulate_counts(spec, 24, 1.0, 500, 2024);
    std::vector<FitResult> fits;
    for (int t = 1; t <= 5; ++t) fits.push_back(two_step_fit(d, static_cast<ModelTag>(t), SippVariant{}));
    const auto ranking = select_model(fits);
    EXPECT_EQ(ranking.best_aic(), ModelTag::m5);
    EXPECT_TRUE(ranking.entry(ModelTag::m4).strong_aic);
    EXPECT_GT(ranking.entry(ModelTag::m1).delta_aic, 1000.0);
    EXPECT_EQ(fits[4].q, 3);
    EXPECT_EQ(fits[0].q, 0);
    EXPECT_EQ(fits[4].rates.size(), 24u);
    EXPECT_FALSE(fits[4].has_param("lambda"));
    EXPECT_GT(fits[4].param("alpha"), 0.0);
    EXPECT_LT(fits[4].param("alpha"), 1.0);
}

TEST(Estimation, ParameterCounts) {
    EXPECT_EQ(detail::parameter_count(ModelTag::m1, true), 1);
    EXPECT_EQ(detail::parameter_count(ModelTag::m2, true), 2);
    EXPECT_EQ(detail::parameter_count(ModelTag::m3, true), 3);
    EXPECT_EQ(detail::parameter_count(ModelTag::m4, true), 3);
    EXPECT_EQ(detail::parameter_count(ModelTag::m5, true), 4);
    EXPECT_EQ(detail::parameter_count(ModelTag::m5, false), 3);
}

TEST(Estimation, RankingBreaksTiesTowardFewerParameters) {
    const auto r = select_model({stub_fit(ModelTag::m5, 100.0, 4), stub_fit(ModelTag::m4, 100.0, 3),
                                 stub_fit(ModelTag::m1, 130.0, 1)});
    EXPECT_EQ(r.best_aic(), ModelTag::m4);
    EXPECT_EQ(r.entry(ModelTag::m5).rank_aic, 2u);
    EXPECT_DOUBLE_EQ(r.entry(ModelTag::m1).delta_aic, 30.0);
    EXPECT_TRUE(r.entry(ModelTag::m1).strong_aic);
    EXPECT_FALSE(r.entry(ModelTag::m5).strong_aic);
}

TEST(Estimation, RankingRejectsMixedData) {
    EXPECT_THROW(select_model({stub_fit(ModelTag::m1, 1.0, 1, "a"), stub_fit(ModelTag::m2, 1.0, 2, "b")}), ValidationError);
    EXPECT_THROW(select_model({stub_fit(ModelTag::m1, 1.0, 1)}), ValidationError);
}

TEST(Estimation, SippVariantsByHand) {
    // two cycles, four sub-intervals of 0.25 grouped in pairs
    const auto sub = matrix(2, 4, 0.25, {2, 6, 10, 4, 4, 2, 6, 8});
    // column means 3, 4, 8, 6 -> sub-interval rates 12, 16, 32, 24
    SippVariant v;
    v.h = 2;
    EXPECT_EQ(sipp_estimate(sub, v), (std::vector<double>{14.0, 28.0}));
    v.kind = SippKind::min;
    EXPECT_EQ(sipp_estimate(sub, v), (std::vector<double>{12.0, 24.0}));
    v.kind = SippKind::max;
    EXPECT_EQ(sipp_estimate(sub, v), (std::vector<double>{16.0, 32.0}));
    v.kind = SippKind::mix;
    v.min_window = {0.0, 0.5};
    v.max_window = {0.5, 1.0};
    EXPECT_EQ(sipp_estimate(sub, v), (std::vector<double>{12.0, 32.0}));
    v.day_offset = 8.0;
    EXPECT_EQ(sipp_estimate(sub, v), (std::vector<double>{14.0, 28.0}));
    v.h = 3;
    EXPECT_THROW(sipp_estimate(sub, v), ValidationError);
}

TEST(Estimation, AggregateCounts) {
    const auto sub = matrix(2, 4, 0.25, {2, 6, 10, 4, 4, 2, 6, 8});
    const auto agg = aggregate_counts(sub, 2);
    EXPECT_EQ(agg.k, 2u);
    EXPECT_DOUBLE_EQ(agg.delta, 0.5);
    EXPECT_EQ(agg.counts, (std::vector<std::int64_t>{8, 14, 6, 14}));
    EXPECT_THROW(aggregate_counts(sub, 3), ValidationError);
}

TEST(Estimation, FittedModelRoundTrip) {
    FitResult f;
    f.model = ModelTag::m5;
    f.params = {{"alpha", 0.4}, {"kappa", 0.2}, {"sigma", 0.3}};
    const auto p = fitted_model(f, 600.0).gcir();
    ASSERT_TRUE(p.has_value());
    EXPECT_DOUBLE_EQ(p->lambda, 600.0);
    EXPECT_DOUBLE_EQ(p->alpha, 0.4);
    f.model = ModelTag::m2;
    f.params = {{"sigma_g", 0.1}};
    EXPECT_EQ(fitted_model(f, 10.0).tag(), "m2");
    EXPECT_THROW(f.param("alpha"), ValidationError);
}

TEST(Estimation, ModelTagParsing) {
    EXPECT_EQ(parse_model_tag("m3"), ModelTag::m3);
    EXPECT_EQ(parse_model_tag("M5"), ModelTag::m5);
    EXPECT_THROW(parse_model_tag("m6"), ValidationError);
    EXPECT_EQ(to_string(ModelTag::m4), "m4");
    EXPECT_EQ(parse_sipp_kind("mix"), SippKind::mix);
    EXPECT_THROW(parse_sipp_kind("median"), ValidationError);
}

TEST(Estimation, FitNeedsTwoCyclesAndArrivals) {
    EXPECT_THROW(fit_mle(matrix(1, 2, 1.0, {3, 4}), ModelTag::m1), ValidationError);
    EXPECT_THROW(fit_mle(matrix(2, 2, 1.0, {0, 0, 0, 0}), ModelTag::m1), ValidationError);
    EXPECT_THROW(fit_mle(matrix(2, 2, 1.0, {1, -1, 0, 0}), ModelTag::m1), ValidationError);
}

TEST(Estimation, FitsAreDeterministic) {
    const auto d = simulate_counts(ArrivalModelSpec::m4(80.0, 0.5, 1.0), 8, 1.0, 100, 9);
    const auto a = fit_mle(d, ModelTag::m4), b = fit_mle(d, ModelTag::m4);
    EXPECT_EQ(a.log_likelihood, b.log_likelihood);
    EXPECT_EQ(a.param("kappa"), b.param("kappa"));
}
