#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "coughml/metrics.hpp"
#include "coughml/stats.hpp"

using namespace coughml;

namespace {

// Quadratic concordance oracle for AUC: P(pos > neg) + 0.5 P(pos == neg).
double auc_oracle(const std::vector<double>& scores,
                  const std::vector<int>& labels) {
    double wins = 0.0;
    size_t np = 0, nn = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        ++np;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    for (int y : labels)
        if (!y) ++nn;
    return wins / (double(np) * double(nn));
}

// Pairwise-agreement formulation of Fleiss' kappa, written independently
// of the rank-style implementation under test.
double fleiss_oracle(const std::vector<std::vector<int>>& counts) {
    size_t n_items = counts.size(), n_cat = counts[0].size();
    long n = 0;
    for (int c : counts[0]) n += c;
    double total_pairs = double(n) * (n - 1) / 2.0;
    double observed = 0.0;
    std::vector<double> marg(n_cat, 0.0);
    for (const auto& row : counts) {
        double agree_pairs = 0.0;
        for (size_t j = 0; j < n_cat; ++j) {
            agree_pairs += double(row[j]) * (row[j] - 1) / 2.0;
            marg[j] += row[j];
        }
        observed += agree_pairs / total_pairs;
    }
    observed /= double(n_items);
    double expected = 0.0;
    for (double m : marg) {
        double p = m / (double(n_items) * n);
        expected += p * p;
    }
    return (observed - expected) / (1.0 - expected);
}

}  // namespace

TEST_CASE("roc_auc matches the quadratic concordance oracle") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::bernoulli_distribution lab(0.4);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 200; ++i) {
        // Quantize so ties actually occur.
        scores.push_back(std::round(u(rng) * 20.0) / 20.0);
        labels.push_back(lab(rng) ? 1 : 0);
    }
    CHECK(roc_auc(scores, labels) ==
          doctest::Approx(auc_oracle(scores, labels)).epsilon(1e-12));

    SUBCASE("all-tied scores give 0.5") {
        std::vector<double> flat(50, 0.7);
        std::vector<int> y(50, 0);
        for (int i = 0; i < 20; ++i) y[i] = 1;
        CHECK(roc_auc(flat, y) == doctest::Approx(0.5).epsilon(1e-12));
    }

    SUBCASE("invariant under monotone transforms") {
        auto base = roc_auc(scores, labels);
        std::vector<double> warped;
        for (double s : scores) warped.push_back(std::exp(3.0 * s) - 1.0);
        CHECK(roc_auc(warped, labels) == doctest::Approx(base).epsilon(1e-12));
    }

    SUBCASE("degenerate inputs throw") {
        CHECK_THROWS_AS(roc_auc({}, {}), std::invalid_argument);
        CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), std::invalid_argument);
    }
}

TEST_CASE("roc_curve endpoints and trapezoid area") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 150; ++i) {
        scores.push_back(std::round(u(rng) * 10.0) / 10.0);
        labels.push_back(i % 3 == 0 ? 1 : 0);
    }
    auto pts = roc_curve(scores, labels);
    CHECK(pts.front().fpr == 0.0);
    CHECK(pts.front().tpr == 0.0);
    CHECK(std::isinf(pts.front().threshold));
    CHECK(pts.back().fpr == doctest::Approx(1.0));
    CHECK(pts.back().tpr == doctest::Approx(1.0));
    double area = 0.0;
    for (size_t i = 1; i < pts.size(); ++i)
        area += 0.5 * (pts[i].tpr + pts[i - 1].tpr) *
                (pts[i].fpr - pts[i - 1].fpr);
    CHECK(area == doctest::Approx(roc_auc(scores, labels)).epsilon(1e-12));
}

TEST_CASE("pick_threshold maximizes the geometric mean") {
    // Perfectly separable: best operating point is TPR=1, FPR=0 at the
    // lowest positive score.
    std::vector<double> s = {0.9, 0.8, 0.4, 0.2};
    std::vector<int> y = {1, 1, 0, 0};
    CHECK(pick_threshold(roc_curve(s, y)) == doctest::Approx(0.8));

    // Tie between two operating points with equal gmean resolves toward
    // the lower FPR (higher threshold here).
    std::vector<RocPoint> pts = {
        {0.0, 0.0, INFINITY}, {0.0, 0.5, 0.9}, {0.5, 1.0, 0.3}, {1.0, 1.0, 0.1}};
    // gmean(0.9) = sqrt(0.5) and gmean(0.3) = sqrt(0.5): pick 0.9.
    CHECK(pick_threshold(pts) == doctest::Approx(0.9));

    CHECK_THROWS_AS(pick_threshold({}), std::invalid_argument);
}

TEST_CASE("fleiss_kappa frozen value and random cross-check") {
    // Classic 10 items x 5 categories, 14 raters example; kappa is
    // 0.20993 to five decimals.
    std::vector<std::vector<int>> classic = {
        {0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0},
        {2, 2, 8, 1, 1},  {7, 7, 0, 0, 0}, {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2},
        {6, 5, 2, 1, 0},  {0, 2, 2, 3, 7}};
    CHECK(fleiss_kappa(classic) == doctest::Approx(0.209930).epsilon(1e-4));

    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> cat(0, 2);
    for (int t = 0; t < 10; ++t) {
        std::vector<std::vector<int>> counts(8, std::vector<int>(3, 0));
        for (auto& row : counts)
            for (int r = 0; r < 5; ++r) row[cat(rng)]++;
        CHECK(fleiss_kappa(counts) ==
              doctest::Approx(fleiss_oracle(counts)).epsilon(1e-12));
    }

    SUBCASE("perfect agreement across categories is 1") {
        std::vector<std::vector<int>> perfect = {{4, 0}, {0, 4}, {4, 0}};
        CHECK(fleiss_kappa(perfect) == doctest::Approx(1.0));
    }
    SUBCASE("single-category degenerate case is 1") {
        std::vector<std::vector<int>> one = {{4, 0}, {4, 0}};
        CHECK(fleiss_kappa(one) == doctest::Approx(1.0));
    }
    SUBCASE("unequal rater counts throw") {
        std::vector<std::vector<int>> bad = {{2, 2}, {3, 2}};
        CHECK_THROWS_AS(fleiss_kappa(bad), std::invalid_argument);
    }
}

TEST_CASE("jensen_shannon endpoints and symmetry") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> a, b;
    for (int i = 0; i < 500; ++i) a.push_back(g(rng));
    for (int i = 0; i < 500; ++i) b.push_back(g(rng) + 0.5);

    CHECK(jensen_shannon(a, a) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(jensen_shannon(a, b) ==
          doctest::Approx(jensen_shannon(b, a)).epsilon(1e-12));
    CHECK(jensen_shannon(a, b) > 0.0);
    CHECK(jensen_shannon(a, b) <= 1.0);

    // Fully disjoint supports approach 1.
    std::vector<double> lo, hi;
    for (int i = 0; i < 300; ++i) {
        lo.push_back(g(rng));
        hi.push_back(g(rng) + 100.0);
    }
    CHECK(jensen_shannon(lo, hi) > 0.99);

    // A constant pair has zero pooled range.
    std::vector<double> c1(10, 3.0), c2(10, 3.0);
    CHECK(jensen_shannon(c1, c2) == 0.0);

    CHECK_THROWS_AS(jensen_shannon({}, a), std::invalid_argument);

    // Column-mean version averages per-feature divergences.
    std::vector<std::vector<double>> fa, fb;
    for (int i = 0; i < 300; ++i) {
        fa.push_back({a[i], lo[i]});
        fb.push_back({b[i], hi[i]});
    }
    double m = mean_js_divergence(fa, fb);
    double j1 = jensen_shannon(std::vector<double>(a.begin(), a.begin() + 300),
                               std::vector<double>(b.begin(), b.begin() + 300));
    double j2 = jensen_shannon(lo, hi);
    CHECK(m == doctest::Approx(0.5 * (j1 + j2)).epsilon(1e-12));
}

TEST_CASE("logit aggregation closed forms") {
    CHECK(aggregate_logit_mean({0.9, 0.9}) ==
          doctest::Approx(std::log(9.0)).epsilon(1e-12));
    CHECK(aggregate_logit_mean({0.5}) == doctest::Approx(0.0));
    // Symmetric probabilities cancel in both aggregators.
    CHECK(aggregate_logit_mean({0.2, 0.8}) == doctest::Approx(0.0));
    CHECK(aggregate_logit_median({0.2, 0.8}) == doctest::Approx(0.0));
    CHECK(aggregate_logit_median({0.1, 0.5, 0.9}) == doctest::Approx(0.0));
    CHECK(aggregate_logit_median({0.1, 0.2, 0.9}) ==
          doctest::Approx(std::log(0.25)).epsilon(1e-12));
    // Extreme inputs are clipped, never infinite.
    CHECK(std::isfinite(aggregate_logit_mean({0.0, 1.0})));
    CHECK_THROWS_AS(aggregate_logit_mean({}), std::invalid_argument);
    CHECK_THROWS_AS(aggregate_logit_median({}), std::invalid_argument);
}

TEST_CASE("linear_shap additivity and ranking") {
    std::vector<double> w = {2.0, -1.0, 0.0, 0.5};
    std::vector<double> x = {1.0, 3.0, 7.0, -2.0};
    std::vector<double> mu = {0.5, 1.0, 2.0, 0.0};
    auto phi = linear_shap(w, x, mu);
    REQUIRE(phi.size() == 4);
    double total = 0.0, wx = 0.0, wmu = 0.0;
    for (size_t i = 0; i < 4; ++i) {
        total += phi[i];
        wx += w[i] * x[i];
        wmu += w[i] * mu[i];
    }
    CHECK(total == doctest::Approx(wx - wmu).epsilon(1e-12));
    CHECK(phi[2] == 0.0);                       // zero weight
    CHECK(linear_shap(w, mu, mu)[0] == 0.0);    // at the background
    CHECK(phi[1] == doctest::Approx(-2.0));
}

TEST_CASE("welch t-test matches tabulated values and survives the tail") {
    std::vector<double> a = {1, 2, 3, 4, 5};
    std::vector<double> b = {2, 3, 4, 5, 6};
    auto r = welch_t_test(a, b);
    CHECK(r.t == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(r.df == doctest::Approx(8.0).epsilon(1e-12));
    // Two-sided p for |t|=1, df=8.
    CHECK(r.p == doctest::Approx(0.34659).epsilon(1e-4));
    CHECK(r.log10_p == doctest::Approx(std::log10(r.p)).epsilon(1e-10));

    SUBCASE("identical groups") {
        auto eq = welch_t_test(a, a);
        CHECK(eq.t == 0.0);
        CHECK(eq.p == doctest::Approx(1.0));
    }

    SUBCASE("extreme separation keeps a finite log10 p") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<double> x, y;
        for (int i = 0; i < 200; ++i) {
            x.push_back(g(rng));
            y.push_back(g(rng) + 40.0);
        }
        auto far = welch_t_test(x, y);
        CHECK(std::isfinite(far.log10_p));
        CHECK(far.log10_p < -100.0);
    }

    SUBCASE("incomplete beta endpoints") {
        CHECK(reg_inc_beta(2.0, 3.0, 0.0) == 0.0);
        CHECK(reg_inc_beta(2.0, 3.0, 1.0) == doctest::Approx(1.0));
        // I_x(1,1) = x.
        for (double x = 0.1; x < 1.0; x += 0.2)
            CHECK(reg_inc_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-10));
        // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
        CHECK(reg_inc_beta(3.0, 5.0, 0.3) ==
              doctest::Approx(1.0 - reg_inc_beta(5.0, 3.0, 0.7)).epsilon(1e-10));
    }
}
