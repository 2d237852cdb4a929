// SPDX-License-Identifier: Apache-2.0
//
// nfra: near-field localization with reconfigurable antenna arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#include "nfra/errors.hpp"
#include "nfra/precoder.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace nfra;

namespace
{
    const Vec3 kCenter(0.0, 0.0, 5.0);
    constexpr double kLambda = 0.01;
    const Box kRegion{Vec3(9.0, -3.0, 0.0), Vec3(14.0, 3.0, 4.0)};

    ArrayModel make_model(int n, int q) { return {ElementLayout::upa(kCenter, n, n, kLambda / 2), BasisSet(q), kLambda}; }

    std::vector<double> random_simplex(std::size_t n, std::mt19937_64 &rng)
    {
        std::exponential_distribution<double> e(1.0);
        std::vector<double> w(n);
        double sum = 0.0;
        for (auto &x : w)
            sum += (x = e(rng));
        for (auto &x : w)
            x /= sum;
        return w;
    }

    // every point of the simplex grid with spacing 1/steps
    template <class F>
    void for_each_grid_point(std::size_t dim, int steps, F &&f)
    {
        std::vector<int> k(dim, 0);
        std::vector<double> w(dim);
        std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
            if (i + 1 == dim)
            {
                k[i] = left;
                for (std::size_t j = 0; j < dim; ++j)
                    w[j] = static_cast<double>(k[j]) / steps;
                f(w);
                return;
            }
            for (int v = 0; v <= left; ++v)
            {
                k[i] = v;
                rec(i + 1, left - v);
            }
        };
        rec(0, steps);
    }
}

TEST(OptimalCodewords, UnitNormConjugateDerivatives)
{
    const ArrayModel model = make_model(6, 4);
    const Vec3 p(11.0, 0.5, 2.0);
    const auto cw = optimal_codewords(model, p);
    const ArvJacobian jac = arv_jacobian(model, p);
    for (int i = 0; i < 4; ++i)
    {
        const auto &c = cw[static_cast<std::size_t>(i)];
        EXPECT_EQ(c.derivative_order, i);
        EXPECT_NEAR(c.w.norm(), 1.0, 1e-14);
        const CVector &d = i == 0 ? jac.value : jac.columns[static_cast<std::size_t>(i - 1)];
        // matched filter: d^T w = |d|
        EXPECT_LT(std::abs(cdouble(d.transpose() * c.w) - d.norm()), 1e-10 * d.norm());
    }
}

TEST(Factorize, RoundTripAndUnitEmWeights)
{
    const ArrayModel model = make_model(6, 9);
    const Codebook cb = build_codebook(model, kRegion, {2, 2, 2});
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    std::vector<double> phases(model.elements());
    for (auto &x : phases)
        x = ph(rng);

    for (const auto &c : cb.codewords())
        for (double rho : {1.0, 0.37})
            for (bool with_phases : {false, true})
            {
                const auto f = factorize(c, 9, rho, with_phases ? std::span<const double>(phases) : std::span<const double>());
                const CVector want = std::sqrt(rho) * c.w;
                EXPECT_LE((f.composite() - want).norm(), 1e-12 * want.norm());
                for (std::size_t m = 0; m < f.em.elements(); ++m)
                    EXPECT_NEAR(f.em.element(m).norm(), 1.0, 1e-12);
            }
}

TEST(Factorize, ZeroBlockAndBadInputs)
{
    Codeword c{CVector::Zero(8), Vec3::Zero(), 0};
    c.w.segment(4, 4).setConstant(0.5);
    const auto f = factorize(c, 4, 1.0);
    EXPECT_EQ(f.digital[0], cdouble(0.0));
    EXPECT_NEAR(f.em.element(0).norm(), 1.0, 1e-15);
    EXPECT_LT((f.composite() - c.w).norm(), 1e-15);
    EXPECT_THROW(factorize(c, 3, 1.0), InvalidArgument);
    EXPECT_THROW(factorize(c, 4, 1.5), InvalidArgument);
}

TEST(Codebook, OrderAndWeights)
{
    const ArrayModel model = make_model(4, 4);
    const Codebook cb = build_codebook(model, kRegion, {2, 1, 2});
    ASSERT_EQ(cb.size(), 16u);
    ASSERT_EQ(cb.candidates().size(), 4u);
    for (std::size_t t = 0; t < cb.size(); ++t)
    {
        EXPECT_EQ(cb.codewords()[t].derivative_order, static_cast<int>(t % 4));
        EXPECT_EQ(cb.codewords()[t].source_point, cb.candidates()[t / 4]);
        EXPECT_DOUBLE_EQ(cb.weights()[t], 1.0 / 16.0);
    }
    for (const auto &p : cb.candidates())
        EXPECT_TRUE(kRegion.contains(p));
    EXPECT_NEAR(cb.total_power(), 1.0, 1e-12);
    EXPECT_THROW(cb.with_weights(std::vector<double>(16, 0.1)), InvalidArgument);
}

TEST(Simplex, ProjectionProperties)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial)
    {
        std::vector<double> v(7);
        for (auto &x : v)
            x = 2.0 * n(rng);
        const auto p = project_to_simplex(v);
        EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
        for (double x : p)
            EXPECT_GE(x, 0.0);
        // optimality: (v - p) . (q - p) <= 0 for every vertex q
        for (std::size_t j = 0; j < v.size(); ++j)
        {
            double s = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i)
                s += (v[i] - p[i]) * ((i == j ? 1.0 : 0.0) - p[i]);
            EXPECT_LE(s, 1e-12);
        }
        // idempotent
        const auto pp = project_to_simplex(p);
        for (std::size_t i = 0; i < p.size(); ++i)
            EXPECT_NEAR(pp[i], p[i], 1e-14);
    }
}

TEST(PebLandscape, AgreesWithStandaloneFim)
{
    const ArrayModel model = make_model(6, 4);
    const Codebook cb = build_codebook(model, kRegion, {2, 1, 1});
    const std::vector<Vec3> samples = inclusive_lattice(kRegion, {2, 2, 1});
    const ScenarioConfig sc;
    const PebLandscape land(cb, samples, model, sc);
    std::mt19937_64 rng(4);
    const auto w = random_simplex(cb.size(), rng);
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        const double rho = path_gain_los((samples[i] - kCenter).norm(), kLambda, 0.0).magnitude;
        const double want =
            peb(fim(model, cb.unit_matrix(), w, {samples[i], rho, 0.0}, sc.tx_power_w, sc.noise_variance())).trace;
        EXPECT_NEAR(land.peb_trace(i, w), want, 1e-10 * want);
    }
}

TEST(PebLandscape, GradientMatchesFiniteDifferences)
{
    const ArrayModel model = make_model(16, 4);
    const Codebook cb = build_codebook(model, kRegion, {2, 1, 1});
    const std::vector<Vec3> samples{Vec3(10.0, 1.0, 2.0)};
    const PebLandscape land(cb, samples, model, ScenarioConfig{});
    std::mt19937_64 rng(5);
    auto w = random_simplex(cb.size(), rng);
    std::vector<double> g(cb.size());
    const double f0 = land.peb_trace_gradient(0, w, g);
    for (std::size_t t = 0; t < cb.size(); ++t)
    {
        auto diff = [&](double h) {
            auto hi = w, lo = w;
            hi[t] += h;
            lo[t] -= h;
            return (land.peb_trace(0, hi) - land.peb_trace(0, lo)) / (2 * h);
        };
        const double h = 1e-2 * w[t];
        const double fd = (4.0 * diff(h / 2) - diff(h)) / 3.0;
        EXPECT_NEAR(g[t], fd, 1e-5 * std::abs(fd) + 1e-7 * f0 / w[t]) << "t = " << t;
    }
}

TEST(Convexity, PebIsConvexInTheCovariance)
{
    const ArrayModel model = make_model(6, 4);
    const Codebook cb = build_codebook(model, kRegion, {2, 2, 1});
    const std::vector<Vec3> samples = inclusive_lattice(kRegion, {2, 2, 2});
    const PebLandscape land(cb, samples, model, ScenarioConfig{});
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial)
    {
        const auto a = random_simplex(cb.size(), rng);
        const auto b = random_simplex(cb.size(), rng);
        const double alpha = u(rng);
        std::vector<double> mix(cb.size());
        for (std::size_t t = 0; t < mix.size(); ++t)
            mix[t] = alpha * a[t] + (1 - alpha) * b[t];
        const std::size_t i = static_cast<std::size_t>(trial) % samples.size();
        const double rhs = alpha * land.peb_trace(i, a) + (1 - alpha) * land.peb_trace(i, b);
        EXPECT_LE(land.peb_trace(i, mix), rhs * (1 + 1e-9));
    }
}

TEST(AllocatePower, MatchesSimplexGridSearch)
{
    const ArrayModel model = make_model(8, 4);
    const ScenarioConfig sc;
    const Codebook cb = build_codebook(model, kRegion, {1, 1, 1});
    ASSERT_EQ(cb.size(), 4u);
    for (const auto &samples : {std::vector<Vec3>{Vec3(10.35, 1.67, 0.0)}, inclusive_lattice(kRegion, {3, 1, 1})})
    {
        const PebLandscape land(cb, samples, model, sc);
        double best = std::numeric_limits<double>::infinity();
        for_each_grid_point(4, 50, [&](const std::vector<double> &w) { best = std::min(best, land.max_peb_trace(w)); });

        const AllocationResult r = allocate_power(cb, samples, model, sc);
        const double uniform = land.max_peb_trace(std::vector<double>(4, 0.25));
        EXPECT_LE(r.max_peb_trace, best * 1.01) << "N_u = " << samples.size();
        EXPECT_LE(r.max_peb_trace, uniform);
        EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 1.0, 1e-12);
        EXPECT_NEAR(r.max_peb_trace, land.max_peb_trace(r.weights), 1e-12 * r.max_peb_trace);

        // moving 0.01 of power between any two codewords does not help
        for (std::size_t a = 0; a < 4; ++a)
            for (std::size_t b = 0; b < 4; ++b)
            {
                if (a == b || r.weights[a] < 0.01)
                    continue;
                auto w = r.weights;
                w[a] -= 0.01;
                w[b] += 0.01;
                EXPECT_GE(land.max_peb_trace(w), r.max_peb_trace * (1 - 1e-6));
            }
    }
}

TEST(AllocatePower, SingularUniformAllocationNamesSample)
{
    const ArrayModel model = make_model(4, 1);
    Codebook cb = build_codebook(model, kRegion, {1, 1, 1});
    // a single directional beam cannot identify five parameters
    Codebook one(1, {cb.candidates().begin(), cb.candidates().end()}, {cb.codewords()[0], cb.codewords()[0]}, {0.5, 0.5});
    const std::vector<Vec3> samples{Vec3(10.0, 0.0, 1.0)};
    try
    {
        allocate_power(one, samples, model, ScenarioConfig{});
        FAIL() << "expected Unidentifiable";
    }
    catch (const Unidentifiable &e)
    {
        EXPECT_NE(std::string(e.what()).find("sample 0"), std::string::npos);
    }
}

TEST(DesignCodebook, MonotoneInQAndConventionalCoincides)
{
    ScenarioConfig sc;
    const std::vector<Vec3> samples = inclusive_lattice(kRegion, {2, 2, 2});
    const auto layout = ElementLayout::upa(kCenter, 6, 6, kLambda / 2);
    double previous = std::numeric_limits<double>::infinity();
    double q1 = 0.0;
    for (int q : {1, 4, 9})
    {
        const auto d = design_codebook(Method::kRaOptimal, {layout, BasisSet(q), kLambda}, sc, {2, 2, 2}, samples);
        EXPECT_LE(d.max_peb_trace, previous * (1 + 1e-6)) << "Q = " << q;
        previous = d.max_peb_trace;
        if (q == 1)
            q1 = d.max_peb_trace;
    }
    const auto conv = design_codebook(Method::kConventional, {layout, BasisSet(9), kLambda}, sc, {2, 2, 2}, samples);
    EXPECT_NEAR(conv.max_peb_trace, q1, 1e-10 * q1);
    EXPECT_EQ(conv.model.basis_size(), 1);
}

TEST(DesignCodebook, DirectionalKeepsOnlyBeams)
{
    ScenarioConfig sc;
    const std::vector<Vec3> samples = inclusive_lattice(kRegion, {2, 2, 2});
    const auto d = design_codebook(Method::kRaDirectional, make_model(6, 4), sc, {2, 2, 2}, samples);
    EXPECT_EQ(d.codebook.size(), 8u);
    for (const auto &c : d.codebook.codewords())
        EXPECT_EQ(c.derivative_order, 0);
    const auto o = design_codebook(Method::kRaOptimal, make_model(6, 4), sc, {2, 2, 2}, samples);
    EXPECT_LE(o.max_peb_trace, d.max_peb_trace);
}

TEST(Method, NamesRoundTrip)
{
    for (Method m : {Method::kRaOptimal, Method::kRaDirectional, Method::kConventional})
        EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_THROW(parse_method("bogus"), InvalidArgument);
}
