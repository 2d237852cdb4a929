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

#include "nfra/localizer.hpp"
#include "nfra/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nfra
{
    SignalModel::SignalModel(ArrayModel model, const Codebook &codebook)
        : model_(std::move(model)), weighted_(codebook.weighted_matrix())
    {
        if (codebook.basis_size() != model_.basis_size() || weighted_.rows() != model_.dimension())
            throw InvalidArgument("SignalModel: codebook does not match the array model");
    }

    CVector SignalModel::model_vector(const Vec3 &p) const
    {
        std::vector<cdouble> scratch(static_cast<std::size_t>(model_.dimension()));
        CVector out;
        model_vector_into(p, scratch, out);
        return out;
    }

    void SignalModel::model_vector_into(const Vec3 &p, std::span<cdouble> scratch, CVector &out) const
    {
        effective_arv_into(model_, p, scratch);
        const Eigen::Map<const CVector> d(scratch.data(), static_cast<Eigen::Index>(scratch.size()));
        out.noalias() = weighted_.transpose() * d;
    }

    cdouble ls_gain(const CVector &y, const CVector &x)
    {
        if (y.size() != x.size())
            throw InvalidArgument("ls_gain: observation and model vector lengths differ");
        const double xx = x.squaredNorm();
        if (!(xx > 0.0))
            throw InvalidArgument("ls_gain: zero model vector");
        return x.dot(y) / xx;
    }

    ObjectiveValue objective(const SignalModel &model, const Vec3 &p, const CVector &y)
    {
        if (static_cast<std::size_t>(y.size()) != model.codewords())
            throw InvalidArgument("objective: observation length does not match the codebook");
        const CVector x = model.model_vector(p);
        const double xx = x.squaredNorm();
        if (!(xx > 0.0))
            return {0.0, true};
        return {std::norm(x.dot(y)) / xx, false};
    }

    void GridSpec::validate() const
    {
        if (region.empty())
            throw InvalidArgument("GridSpec: empty region");
        if (!(step.array() > 0.0).all() || !step.allFinite())
            throw InvalidArgument("GridSpec: steps must be positive");
    }

    std::array<std::size_t, 3> GridSpec::counts() const
    {
        validate();
        std::array<std::size_t, 3> n{};
        for (int i = 0; i < 3; ++i)
            n[static_cast<std::size_t>(i)] =
                static_cast<std::size_t>(std::floor(region.extent()[i] / step[i] + 1e-9)) + 1;
        return n;
    }

    std::size_t GridSpec::size() const
    {
        const auto n = counts();
        return n[0] * n[1] * n[2];
    }

    std::vector<Vec3> GridSpec::points() const
    {
        const auto n = counts();
        std::vector<Vec3> out;
        out.reserve(n[0] * n[1] * n[2]);
        for (std::size_t k = 0; k < n[2]; ++k)
            for (std::size_t j = 0; j < n[1]; ++j)
                for (std::size_t i = 0; i < n[0]; ++i)
                    out.push_back(region.lower + Vec3(static_cast<double>(i) * step.x(),
                                                      static_cast<double>(j) * step.y(),
                                                      static_cast<double>(k) * step.z()));
        return out;
    }

    DictionaryMatrix build_dictionary(const SignalModel &model, const GridSpec &grid)
    {
        const std::vector<Vec3> points = grid.points();
        DictionaryMatrix dict;
        dict.columns.resize(static_cast<Eigen::Index>(model.codewords()), static_cast<Eigen::Index>(points.size()));
        dict.points.reserve(points.size());

        std::vector<cdouble> scratch(static_cast<std::size_t>(model.array().dimension()));
        CVector x;
        Eigen::Index col = 0;
        for (const auto &p : points)
        {
            try
            {
                model.model_vector_into(p, scratch, x);
            }
            catch (const DegenerateGeometry &)
            {
                ++dict.dropped;
                continue;
            }
            const double norm = x.norm();
            if (!(norm > 0.0) || !std::isfinite(norm))
            {
                ++dict.dropped;
                continue;
            }
            dict.columns.col(col++) = x / norm;
            dict.points.push_back(p);
        }
        dict.columns.conservativeResize(Eigen::NoChange, col);
        return dict;
    }

    Estimate coarse_search(const CVector &y, const DictionaryMatrix &dictionary, Stage stage)
    {
        if (dictionary.points.empty())
            throw InvalidArgument("coarse_search: empty dictionary");
        if (y.size() != dictionary.columns.rows())
            throw InvalidArgument("coarse_search: observation length does not match the dictionary");

        const CVector z = dictionary.columns.adjoint() * y;
        std::size_t best = 0;
        double best_value = std::norm(z[0]);
        for (Eigen::Index g = 1; g < z.size(); ++g)
        {
            const double v = std::norm(z[g]);
            if (v > best_value)
            {
                best_value = v;
                best = static_cast<std::size_t>(g);
            }
        }

        Estimate e;
        e.position = dictionary.points[best];
        e.objective = best_value;
        e.stage = stage;
        e.degenerate = !(best_value > 0.0);
        e.index = best;
        return e;
    }

    std::vector<Estimate> coarse_candidates(const CVector &y, const DictionaryMatrix &dictionary, std::size_t count,
                                            Stage stage)
    {
        if (dictionary.points.empty())
            throw InvalidArgument("coarse_candidates: empty dictionary");
        if (y.size() != dictionary.columns.rows())
            throw InvalidArgument("coarse_candidates: observation length does not match the dictionary");

        const CVector z = dictionary.columns.adjoint() * y;
        std::vector<std::size_t> order(static_cast<std::size_t>(z.size()));
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t n = std::min(std::max<std::size_t>(count, 1), order.size());
        // stable on ties: lower index first
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double va = std::norm(z[static_cast<Eigen::Index>(a)]);
                              const double vb = std::norm(z[static_cast<Eigen::Index>(b)]);
                              return va > vb || (va == vb && a < b);
                          });

        std::vector<Estimate> out(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            const std::size_t g = order[i];
            out[i].position = dictionary.points[g];
            out[i].objective = std::norm(z[static_cast<Eigen::Index>(g)]);
            out[i].stage = stage;
            out[i].degenerate = !(out[i].objective > 0.0);
            out[i].index = g;
        }
        return out;
    }

    namespace
    {
        // |y - zeta(p) x(p)|^2 / |y|^2, evaluated directly rather than as
        // 1 - objective / |y|^2 so that it keeps full precision near a perfect fit
        class NormalizedResidual
        {
        public:
            NormalizedResidual(const SignalModel &model, const CVector &y)
                : model_(model), y_(y), yy_(y.squaredNorm()),
                  scratch_(static_cast<std::size_t>(model.array().dimension()))
            {
            }

            double operator()(const Vec3 &p)
            {
                model_.model_vector_into(p, scratch_, x_);
                const double xx = x_.squaredNorm();
                if (!(xx > 0.0))
                    return 1.0;
                const cdouble zeta = x_.dot(y_) / xx;
                return (y_ - zeta * x_).squaredNorm() / yy_;
            }

        private:
            const SignalModel &model_;
            const CVector &y_;
            double yy_;
            std::vector<cdouble> scratch_;
            CVector x_;
        };

        // Central differences at h and h/2 combined by one Richardson step. The
        // O(h^2) error of the plain difference swamps the range component of the
        // gradient within a millimeter of the optimum.
        Vec3 central_gradient(NormalizedResidual &f, const Vec3 &p, double h)
        {
            Vec3 g;
            for (int i = 0; i < 3; ++i)
            {
                Vec3 e = Vec3::Zero();
                e[i] = h;
                const double wide = (f(p + e) - f(p - e)) / (2.0 * h);
                const double narrow = (f(p + 0.5 * e) - f(p - 0.5 * e)) / h;
                g[i] = (4.0 * narrow - wide) / 3.0;
            }
            return g;
        }

        Eigen::Matrix3d make_positive(const Eigen::Matrix3d &b)
        {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(b);
            Eigen::Vector3d lambda = eig.eigenvalues().cwiseAbs();
            const double top = lambda.maxCoeff();
            if (!(top > 0.0) || !std::isfinite(top))
                return Eigen::Matrix3d::Identity();
            lambda = lambda.cwiseMax(1e-12 * top);
            return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
        }

        // Finite-difference Hessian made positive definite by taking absolute
        // eigenvalues with a floor
        Eigen::Matrix3d initial_hessian(NormalizedResidual &f, const Vec3 &p, double f0, double h)
        {
            Eigen::Matrix3d hess;
            for (int i = 0; i < 3; ++i)
            {
                Vec3 e = Vec3::Zero();
                e[i] = h;
                hess(i, i) = (f(p + e) - 2.0 * f0 + f(p - e)) / (h * h);
            }
            for (int i = 0; i < 3; ++i)
                for (int j = i + 1; j < 3; ++j)
                {
                    Vec3 ei = Vec3::Zero(), ej = Vec3::Zero();
                    ei[i] = h;
                    ej[j] = h;
                    const double v = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) / (4.0 * h * h);
                    hess(i, j) = hess(j, i) = v;
                }
            return make_positive(hess);
        }

        // Minimizer of g^T d + d^T B d / 2 subject to |d| <= radius, by
        // bisection on the damping lambda in (B + lambda I) d = -g
        Vec3 damped_step(const Eigen::Matrix3d &b, const Vec3 &g, double radius)
        {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(b);
            const Eigen::Vector3d lambda = eig.eigenvalues();
            const Eigen::Vector3d gt = eig.eigenvectors().transpose() * g;
            auto step = [&](double damping) {
                return Vec3(-(eig.eigenvectors() * (gt.array() / (lambda.array() + damping)).matrix()));
            };

            Vec3 d = step(0.0);
            if (d.norm() <= radius)
                return d;
            double lo = 0.0;
            double hi = g.norm() / radius; // |d(hi)| <= radius for positive B
            for (int k = 0; k < 200 && hi - lo > 1e-14 * hi; ++k)
            {
                const double mid = 0.5 * (lo + hi);
                if (step(mid).norm() > radius)
                    lo = mid;
                else
                    hi = mid;
            }
            return step(hi);
        }
    }

    Estimate refine(const SignalModel &model, const CVector &y, const Vec3 &p0, const Box &bounds,
                    const RefineOptions &options)
    {
        if (!p0.allFinite())
            throw InvalidArgument("refine: starting point must be finite");
        if (static_cast<std::size_t>(y.size()) != model.codewords())
            throw InvalidArgument("refine: observation length does not match the codebook");

        Estimate out;
        out.stage = Stage::kRefined;
        Vec3 p = bounds.clamp(p0);

        if (!(y.squaredNorm() > 0.0))
        {
            out.position = p;
            out.degenerate = true;
            return out;
        }

        NormalizedResidual f(model, y);
        const double h = std::max(options.min_gradient_step, 1e-6 * p.norm());

        double fp = f(p);
        if (!std::isfinite(fp))
        {
            out.position = p;
            out.warning = true;
            return out;
        }

        // Quasi-Newton model B (BFGS-updated Hessian) with a damped step inside a
        // radius that is halved whenever the Armijo condition fails. Along the
        // range direction the objective is orders of magnitude flatter than
        // across it, and a plain Newton step there overshoots by meters.
        Vec3 g = central_gradient(f, p, h);
        const double hessian_step = std::max(10.0 * h, 1e-3);
        Eigen::Matrix3d hess = initial_hessian(f, p, fp, hessian_step);
        double radius = options.max_step;
        constexpr int kMaxHessianResets = 5;
        bool fresh = true;
        int resets = 0;

        for (int it = 0; it < options.max_iterations; ++it)
        {
            if (!g.allFinite())
            {
                out.warning = true;
                break;
            }

            // Coordinates pinned at a face with the gradient pushing outward stay fixed
            Eigen::Vector3d free = Eigen::Vector3d::Ones();
            for (int i = 0; i < 3; ++i)
                if ((p[i] <= bounds.lower[i] && g[i] > 0.0) || (p[i] >= bounds.upper[i] && g[i] < 0.0))
                    free[i] = 0.0;
            const Vec3 pg = free.cwiseProduct(g);
            if (pg.squaredNorm() == 0.0)
                break;
            Eigen::Matrix3d reduced = free.asDiagonal() * hess * free.asDiagonal();
            for (int i = 0; i < 3; ++i)
                if (free[i] == 0.0)
                    reduced(i, i) = 1.0;

            bool accepted = false;
            Vec3 next, s;
            double f_next = fp;
            while (radius >= options.step_tolerance)
            {
                next = bounds.clamp(p + damped_step(reduced, pg, radius));
                s = next - p;
                if (s.squaredNorm() == 0.0)
                    break;
                f_next = f(next);
                if (!std::isfinite(f_next))
                {
                    out.warning = true;
                    break;
                }
                if (f_next <= fp + 1e-4 * g.dot(s))
                {
                    accepted = true;
                    break;
                }
                radius *= 0.5;
            }
            if (!accepted)
                break;

            const Vec3 g_next = central_gradient(f, next, h);
            const Vec3 yv = g_next - g;
            const double sy = s.dot(yv);
            if (sy > 1e-12 * s.norm() * yv.norm())
            {
                const Vec3 bs = hess * s;
                hess += yv * yv.transpose() / sy - bs * bs.transpose() / s.dot(bs);
                hess = 0.5 * (hess + hess.transpose()).eval();
            }

            p = next;
            fp = f_next;
            g = g_next;
            ++out.iterations;
            if (s.norm() < options.step_tolerance)
            {
                // BFGS eigenvectors drift by a few mrad, which is enough to hide
                // the range curvature; confirm the stall with a fresh Hessian
                if (fresh || resets >= kMaxHessianResets)
                    break;
                hess = initial_hessian(f, p, fp, hessian_step);
                radius = options.max_step;
                fresh = true;
                ++resets;
                continue;
            }
            fresh = false;
            if (s.norm() >= 0.99 * radius)
                radius = std::min(2.0 * radius, options.max_step);
        }

        out.position = p;
        const ObjectiveValue obj = objective(model, p, y);
        out.objective = obj.value;
        out.degenerate = obj.degenerate;
        return out;
    }

    Localizer::Localizer(SignalModel model, const Box &region, const TwoStageOptions &options)
        : model_(std::move(model)), region_(region), options_(options)
    {
        if (region.empty())
            throw InvalidArgument("Localizer: empty search region");
        if (!(options.mid_extent.array() >= 0.0).all())
            throw InvalidArgument("Localizer: mid-stage extent must be non-negative");
        bounds_ = region.inflated(options.coarse_step);
        coarse_ = build_dictionary(model_, GridSpec{region, options.coarse_step});
        if (coarse_.points.empty())
            throw DegenerateGeometry("Localizer: every coarse grid point is degenerate");
    }

    std::shared_ptr<const DictionaryMatrix> Localizer::mid_dictionary(std::size_t coarse_index) const
    {
        {
            std::lock_guard lock(cache_mutex_);
            if (auto it = mid_cache_.find(coarse_index); it != mid_cache_.end())
                return it->second;
        }

        const Vec3 center = coarse_.points[coarse_index];
        const Box cube{center - 0.5 * options_.mid_extent, center + 0.5 * options_.mid_extent};
        Box clipped = cube.intersect(bounds_);
        if (clipped.empty())
            clipped = Box{center, center};
        auto dict = std::make_shared<const DictionaryMatrix>(build_dictionary(model_, GridSpec{clipped, options_.mid_step}));

        std::lock_guard lock(cache_mutex_);
        if (options_.mid_cache_size > 0)
        {
            if (mid_cache_.size() >= options_.mid_cache_size)
                mid_cache_.erase(mid_cache_.begin());
            mid_cache_.emplace(coarse_index, dict);
        }
        return dict;
    }

    TwoStageResult Localizer::localize(const CVector &y) const
    {
        const std::vector<Estimate> starts = coarse_candidates(y, coarse_, options_.coarse_starts, Stage::kCoarse);

        TwoStageResult out;
        out.coarse = starts.front();
        for (std::size_t i = 0; i < starts.size(); ++i)
        {
            Estimate mid;
            const auto dict = mid_dictionary(starts[i].index);
            if (dict->points.empty())
            {
                mid = starts[i];
                mid.stage = Stage::kMid;
            }
            else
            {
                mid = coarse_search(y, *dict, Stage::kMid);
            }
            if (i == 0 || mid.objective > out.mid.objective)
                out.mid = mid;
        }
        out.refined = refine(model_, y, out.mid.position, bounds_, options_.refine);
        return out;
    }

    TwoStageResult localize_two_stage(const CVector &y, const SignalModel &model, const Box &region,
                                      const TwoStageOptions &options)
    {
        return Localizer(model, region, options).localize(y);
    }
}
