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

#ifndef NFRA_LOCALIZER_HPP
#define NFRA_LOCALIZER_HPP

#include "nfra/channel.hpp"
#include "nfra/precoder.hpp"
#include "nfra/types.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace nfra
{
    // Noise-free pilot model x(p) with [x(p)]_t = d(p)^T (sqrt(rho_t) w_t)
    class SignalModel
    {
    public:
        SignalModel(ArrayModel model, const Codebook &codebook);

        const ArrayModel &array() const { return model_; }
        std::size_t codewords() const { return static_cast<std::size_t>(weighted_.cols()); }
        const CMatrix &weighted() const { return weighted_; }

        CVector model_vector(const Vec3 &p) const;
        // Scratch-buffer variant; `scratch` must hold model.dimension() entries
        void model_vector_into(const Vec3 &p, std::span<cdouble> scratch, CVector &out) const;

    private:
        ArrayModel model_;
        CMatrix weighted_; // MQ x N_t
    };

    // zeta = x^H y / |x|^2, throws InvalidArgument if x = 0
    cdouble ls_gain(const CVector &y, const CVector &x);

    struct ObjectiveValue
    {
        double value = 0.0;
        bool degenerate = false; // x(p) = 0
    };

    // |x(p)^H y|^2 / |x(p)|^2
    ObjectiveValue objective(const SignalModel &model, const Vec3 &p, const CVector &y);

    // Regular grid with both endpoints included on every axis:
    // n_i = floor(extent_i / step_i) + 1 points starting at the lower corner.
    struct GridSpec
    {
        Box region;
        Vec3 step = Vec3::Ones();

        void validate() const;
        std::array<std::size_t, 3> counts() const;
        std::size_t size() const;
        // x fastest, then y, then z
        std::vector<Vec3> points() const;
    };

    struct DictionaryMatrix
    {
        CMatrix columns;          // N_t x N_g, unit-norm columns
        std::vector<Vec3> points; // grid point of every column
        std::size_t dropped = 0;  // degenerate grid points left out

        std::size_t size() const { return points.size(); }
    };

    DictionaryMatrix build_dictionary(const SignalModel &model, const GridSpec &grid);

    enum class Stage
    {
        kCoarse,
        kMid,
        kRefined,
    };

    struct Estimate
    {
        Vec3 position = Vec3::Zero();
        double objective = 0.0;
        Stage stage = Stage::kCoarse;
        bool degenerate = false; // no unique argmax (e.g. y = 0)
        bool warning = false;    // refinement stopped on a non-finite objective
        int iterations = 0;
        std::size_t index = 0;   // dictionary column for the grid stages
    };

    // argmax_g |x_g^H y| over the dictionary, lowest index on ties
    Estimate coarse_search(const CVector &y, const DictionaryMatrix &dictionary, Stage stage = Stage::kCoarse);

    // The `count` best grid points by |x_g^H y|, best first (lowest index on ties)
    std::vector<Estimate> coarse_candidates(const CVector &y, const DictionaryMatrix &dictionary, std::size_t count,
                                            Stage stage = Stage::kCoarse);

    struct RefineOptions
    {
        int max_iterations = 100;
        double step_tolerance = 1e-6;  // m
        double min_gradient_step = 1e-4; // m; the actual step is max(this, 1e-6 |p|)
        double max_step = 0.25;          // m; longest move per iteration
    };

    // Quasi-Newton (BFGS) ascent on the concentrated likelihood from p0, with
    // iterates clamped to `bounds`.
    Estimate refine(const SignalModel &model, const CVector &y, const Vec3 &p0, const Box &bounds,
                    const RefineOptions &options = {});

    struct TwoStageOptions
    {
        Vec3 coarse_step = Vec3::Constant(1.0);
        Vec3 mid_step = Vec3::Constant(0.1);
        Vec3 mid_extent = Vec3::Constant(1.0); // edge of the cube around the coarse estimate
        RefineOptions refine;
        // The mid stage runs around this many of the best coarse points and
        // refinement starts from the best mid point over all of them. Pilot
        // correlations have secondary lobes that can outrank the true lobe on a
        // 1 m grid; 1 gives the single-start flow.
        std::size_t coarse_starts = 16;
        // Mid-stage dictionaries kept per localizer; each holds N_t x (mid points)
        // complex values, about 0.7 MB for 32 codewords on the default grid.
        std::size_t mid_cache_size = 256;
    };

    struct TwoStageResult
    {
        Estimate coarse;
        Estimate mid;
        Estimate refined;
    };

    // Two-stage estimator with the coarse dictionary built once per codebook.
    // The reported coarse estimate is the best grid point, the mid estimate the best
    // over all starts.
    // localize() is safe to call from several threads.
    class Localizer
    {
    public:
        Localizer(SignalModel model, const Box &region, const TwoStageOptions &options = {});

        const SignalModel &model() const { return model_; }
        const DictionaryMatrix &coarse_dictionary() const { return coarse_; }
        // Region inflated by one coarse cell; mid grid and refinement stay inside it
        const Box &search_bounds() const { return bounds_; }

        TwoStageResult localize(const CVector &y) const;

    private:
        std::shared_ptr<const DictionaryMatrix> mid_dictionary(std::size_t coarse_index) const;

        SignalModel model_;
        Box region_;
        Box bounds_;
        TwoStageOptions options_;
        DictionaryMatrix coarse_;

        mutable std::mutex cache_mutex_;
        mutable std::map<std::size_t, std::shared_ptr<const DictionaryMatrix>> mid_cache_;
    };

    TwoStageResult localize_two_stage(const CVector &y, const SignalModel &model, const Box &region,
                                      const TwoStageOptions &options = {});
}

#endif
