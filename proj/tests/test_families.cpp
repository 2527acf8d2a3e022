#include <xmodal/families.hpp>

#include <gtest/gtest.h>

using namespace xmodal;

namespace {

double naive_err(const ProjectionMap& g, const Matrix& x, const Matrix& y) {
    const Matrix p = g.predict(x);
    double t = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
        double r = 0.0;
        for (Index j = 0; j < y.cols(); ++j) r += (p(i, j) - y(i, j)) * (p(i, j) - y(i, j));
        t += r;
    }
    return t / static_cast<double>(x.rows());
}

Matrix rotation(double t) {
    Matrix q(2, 2);
    q << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    return q;
}

Matrix random_orthogonal(Index d, Rng& r) {
    Eigen::HouseholderQR<Matrix> qr(r.normal_matrix(d, d));
    return qr.householderQ() * Matrix::Identity(d, d);
}

ProjectionMap linear_map(const FamilySpec& s, const Matrix& w) {
    return ProjectionMap(s, w.cols(), w.rows(), pack_row_major(w));
}

}  // namespace

TEST(Err, Examples) {
    Rng r(1);
    const Matrix x = r.normal_matrix(20, 3);
    const auto id = linear_map(FamilySpec::orthogonal(), Matrix::Identity(3, 3));
    EXPECT_EQ(err(id, x, x), 0.0);
    Matrix y = x;
    y.col(0).array() += 1.0;
    EXPECT_NEAR(err(id, x, y), 1.0, 1e-15);
    const auto w = linear_map(FamilySpec::lowrank(3), r.normal_matrix(3, 3));
    const Matrix xs = 7.5 * x;
    EXPECT_NEAR(err(w, xs, y), naive_err(w, xs, y), 1e-10);
    EXPECT_THROW(err(id, x, Matrix::Zero(19, 3)), Error);
}

TEST(Flatten, LayoutsAndCounts) {
    EXPECT_EQ(parameter_count(FamilySpec::mlp(3, 1), 2, 2), 17);
    EXPECT_EQ(parameter_count(FamilySpec::scalar(), 4, 4), 1);
    EXPECT_EQ(parameter_count(FamilySpec::lowrank(1), 2, 3), 6);
    Vector t(1);
    t << -1.0;
    EXPECT_EQ(flatten(ProjectionMap(FamilySpec::scalar(), 1, 1, t)), t);
    Matrix w(2, 3);
    w << 1, 2, 3, 4, 5, 6;
    EXPECT_EQ(flatten(linear_map(FamilySpec::lowrank(2), w)), (Vector(6) << 1, 2, 3, 4, 5, 6).finished());
    EXPECT_THROW(unflatten(FamilySpec::lowrank(2), 3, 2, Vector::Zero(5)), Error);
}

TEST(Flatten, MlpRoundTrip) {
    Rng r(2);
    const auto spec = FamilySpec::mlp(5, 2);
    for (int t = 0; t < 10; ++t) {
        const Vector theta = init_mlp(spec, 3, 2, r);
        const ProjectionMap g(spec, 3, 2, theta);
        const ProjectionMap back = unflatten(spec, 3, 2, flatten(g));
        const Matrix x = r.normal_matrix(30, 3);
        EXPECT_EQ(back.predict(x), g.predict(x));
        EXPECT_EQ(pack_mlp(unpack_mlp(spec, 3, 2, theta)), theta);
    }
}

TEST(Procrustes, Examples) {
    Rng r(3);
    const Matrix x = r.normal_matrix(40, 2);
    EXPECT_LE((fit_procrustes(x, x).map.linear() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix rot = rotation(0.7);
    const auto fit = fit_procrustes(x, x * rot.transpose());
    EXPECT_LE((fit.map.linear() - rot).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(fit.report.final_err, 1e-12);
    EXPECT_LE((fit_procrustes(x, -x).map.linear() + Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(fit_procrustes(x, r.normal_matrix(40, 3)), Error);
}

TEST(Procrustes, OptimalOverRandomRotations) {
    Rng r(4);
    const Matrix x = r.normal_matrix(50, 4), y = r.normal_matrix(50, 4);
    const auto best = fit_procrustes(x, y);
    EXPECT_TRUE(satisfies_family(best.map));
    for (int t = 0; t < 100; ++t) {
        const auto q = linear_map(FamilySpec::orthogonal(), random_orthogonal(4, r));
        EXPECT_LE(best.report.final_err, err(q, x, y) + 1e-12);
    }
}

TEST(Procrustes, RankDeficientFlagged) {
    Matrix x = Matrix::Zero(10, 2);
    Rng r(5);
    x.col(0) = r.normal_matrix(10, 1);
    EXPECT_TRUE(fit_procrustes(x, x).report.non_unique);
}

TEST(LowRank, Realizable) {
    Rng r(6);
    const Matrix x = r.normal_matrix(100, 4);
    const Matrix w = r.normal_matrix(3, 1) * r.normal_matrix(1, 4);
    const Matrix ws = w / spectral_norm(w) * 2.0;
    const auto fit = fit_low_rank(x, x * ws.transpose(), 1, 5.0);
    EXPECT_LE(fit.report.final_err, 1e-8);
    EXPECT_TRUE(satisfies_family(fit.map));
}

TEST(LowRank, MatchesLeastSquaresWhenUnconstrained) {
    Rng r(7);
    const Matrix x = r.normal_matrix(60, 3), y = r.normal_matrix(60, 2);
    const auto fit = fit_low_rank(x, y, 2, 1e9);
    // normal equations oracle
    const Matrix ols = (x.transpose() * x).inverse() * x.transpose() * y;
    EXPECT_LE((fit.map.linear() - ols.transpose()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(LowRank, ActiveNormConstraint) {
    Rng r(8);
    const Matrix x = r.normal_matrix(60, 3);
    const Matrix y = 10.0 * x;
    const auto fit = fit_low_rank(x, y, 3, 0.5);
    EXPECT_NEAR(spectral_norm(fit.map.linear()), 0.5, 1e-9);
    EXPECT_TRUE(satisfies_family(fit.map));
    EXPECT_THROW(fit_low_rank(x, y, 4, 1.0), Error);
}

TEST(LowRank, MonotoneInRank) {
    Rng r(9);
    const Matrix x = r.normal_matrix(80, 4), y = r.normal_matrix(80, 4);
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 4; ++k) {
        const double e = fit_low_rank(x, y, k, 10.0).report.final_err;
        EXPECT_LE(e, prev + 1e-10);
        prev = e;
    }
}

TEST(Mlp, TeacherStudent) {
    Rng r(10);
    const Matrix x = r.normal_matrix(200, 2);
    const auto teacher_spec = FamilySpec::mlp(2, 1, 10.0);
    Vector theta = init_mlp(teacher_spec, 2, 1, r);
    theta = project_parameters(teacher_spec, 2, 1, theta);
    const ProjectionMap teacher(teacher_spec, 2, 1, theta);
    const Matrix y = teacher.predict(x);
    MlpOptions opt;
    opt.max_iter = 20000;
    opt.target_err = 1e-5;
    const auto fit = fit_mlp(x, y, FamilySpec::mlp(4, 1, 10.0), 1, 8, opt);
    EXPECT_LE(fit.report.final_err, 1e-4);
    EXPECT_NEAR(fit.report.final_err, err(fit.map, x, y), 1e-10);
    EXPECT_TRUE(satisfies_family(fit.map));
}

TEST(Mlp, Preconditions) {
    const Matrix x = Matrix::Zero(5, 2);
    EXPECT_THROW(fit_mlp(x, x, FamilySpec::mlp(0), 1), Error);
    EXPECT_THROW(fit_mlp(x, x, FamilySpec::lowrank(1), 1), Error);
}

TEST(Mlp, GlobalLipschitz) {
    Rng r(11);
    const Matrix x = r.normal_matrix(100, 3), y = (5.0 * r.normal_matrix(100, 3)).array().sin().matrix();
    const double l = 2.0;
    const auto fit = fit_mlp(x, y, FamilySpec::mlp(6, 1, l), 3, 2);
    EXPECT_TRUE(satisfies_family(fit.map));
    for (int t = 0; t < 1000; ++t) {
        const Matrix a = 3.0 * r.normal_matrix(1, 3), b = 3.0 * r.normal_matrix(1, 3);
        EXPECT_LE((fit.map.predict(a) - fit.map.predict(b)).norm(), (l + 1e-6) * (a - b).norm());
    }
}

TEST(Mlp, DeterministicGivenSeed) {
    Rng r(12);
    const Matrix x = r.normal_matrix(40, 2), y = r.normal_matrix(40, 1);
    const auto a = fit_mlp(x, y, FamilySpec::mlp(3), 5, 2);
    const auto b = fit_mlp(x, y, FamilySpec::mlp(3), 5, 2);
    EXPECT_EQ(a.map.theta(), b.map.theta());
}

TEST(Mlp, EmbedIntoWiderKeepsPredictions) {
    Rng r(13);
    const auto narrow = FamilySpec::mlp(2), wide = FamilySpec::mlp(5);
    const ProjectionMap g(narrow, 3, 2, init_mlp(narrow, 3, 2, r));
    const auto h = embed_into(g, wide);
    ASSERT_TRUE(h);
    const Matrix x = r.normal_matrix(20, 3);
    EXPECT_LE((h->predict(x) - g.predict(x)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_FALSE(embed_into(g, FamilySpec::lowrank(2)));
}

TEST(ParameterLipschitz, ScalarAnalytic) {
    // |x| <= 1, |w| <= 2, |y| <= 1 → 2·(2·1 + 1)·1 = 6
    Matrix x(3, 1), y(3, 1);
    x << -1, 0.5, 1;
    y << 1, -1, 0.2;
    const auto est = estimate_parameter_lipschitz(FamilySpec::scalar(), x, y, 2.0);
    EXPECT_TRUE(est.analytic);
    EXPECT_NEAR(est.value, 6.0, 1e-15);
    // grid audit over w, w' in [-2, 2]
    double worst = 0.0;
    for (int i = 0; i <= 80; ++i)
        for (int j = 0; j < i; ++j) {
            const double w1 = -2.0 + 0.05 * i, w2 = -2.0 + 0.05 * j;
            for (Index k = 0; k < 3; ++k) {
                const double l1 = (w1 * x(k) - y(k)) * (w1 * x(k) - y(k));
                const double l2 = (w2 * x(k) - y(k)) * (w2 * x(k) - y(k));
                worst = std::max(worst, std::abs(l1 - l2) / (w1 - w2));
            }
        }
    EXPECT_LE(worst, est.value);

    EXPECT_EQ(estimate_parameter_lipschitz(FamilySpec::scalar(), Matrix::Zero(4, 1), Matrix::Zero(4, 1), 2.0).value,
              0.0);
    EXPECT_GE(estimate_parameter_lipschitz(FamilySpec::scalar(), 2 * x, 2 * y, 2.0).value, 2.0 * est.value);
}

TEST(ParameterLipschitz, MlpFlaggedEstimate) {
    Rng r(14);
    const Matrix x = r.normal_matrix(10, 2), y = r.normal_matrix(10, 1);
    const auto est = estimate_parameter_lipschitz(FamilySpec::mlp(2), x, y, 1.0, 1, 500);
    EXPECT_FALSE(est.analytic);
    EXPECT_GT(est.value, 0.0);
}

TEST(Ladder, AlphaAndNesting) {
    const auto ladder = default_ladder(3, 4);
    ASSERT_EQ(ladder.size(), 8u);
    std::vector<double> alphas;
    for (const auto& s : ladder) alphas.push_back(s.alpha(3));
    EXPECT_EQ(alphas, (std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7}));
    EXPECT_EQ(FamilySpec::scalar().alpha(3), 0.0);
    EXPECT_EQ(family_class_from_string(to_string(FamilyClass::lowrank)), FamilyClass::lowrank);
    EXPECT_THROW(family_class_from_string("conv"), Error);
}
