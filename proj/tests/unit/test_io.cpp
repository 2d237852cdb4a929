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


#include "nfra/codebook_io.hpp"
#include "nfra/config.hpp"
#include "nfra/errors.hpp"
#include "nfra/results_io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <sstream>

using namespace nfra;

namespace
{
    std::vector<CurvePoint> sample_points()
    {
        return {{"ra-optimal", "snr_db", 10.0, 0.123456789012, 0.05, 0.0025, 200, 0},
                {"conventional", "snr_db", std::numeric_limits<double>::infinity(), 1e-9, 0.0, 0.0, 199, 1}};
    }

    const std::string kHeader = "method,sweep_name,sweep_value,rmse_m,peb_m,peb_trace_m2,trials,failures";
}

TEST(ResultsCsv, HeaderOnlyWhenEmpty)
{
    std::ostringstream out;
    write_csv(out, {});
    EXPECT_EQ(out.str(), kHeader + "\n");
}

TEST(ResultsCsv, RoundTrip)
{
    const auto pts = sample_points();
    const std::string text = format_results(pts, ResultFormat::kCsv);
    EXPECT_EQ(text.substr(0, kHeader.size()), kHeader);
    std::istringstream in(text);
    const auto back = read_csv(in);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].method, "ra-optimal");
    EXPECT_NEAR(back[0].rmse_m, 0.123456789, 1e-15);
    EXPECT_TRUE(std::isinf(back[1].sweep_value));
    EXPECT_EQ(back[1].failures, 1);
}

TEST(ResultsJson, SameValuesAsCsv)
{
    const auto pts = sample_points();
    std::istringstream in(format_results(pts, ResultFormat::kCsv));
    const auto from_csv = read_csv(in);
    const auto j = nlohmann::json::parse(format_results(pts, ResultFormat::kJson));
    ASSERT_EQ(j.at("points").size(), from_csv.size());
    for (std::size_t i = 0; i < from_csv.size(); ++i)
    {
        const auto &p = j["points"][i];
        EXPECT_EQ(p.at("method").get<std::string>(), from_csv[i].method);
        EXPECT_EQ(p.at("rmse_m").get<double>(), from_csv[i].rmse_m);
        EXPECT_EQ(p.at("peb_m").get<double>(), from_csv[i].peb_m);
        EXPECT_EQ(p.at("peb_trace_m2").get<double>(), from_csv[i].peb_trace_m2);
        EXPECT_EQ(p.at("trials").get<int>(), from_csv[i].trials);
    }
    EXPECT_EQ(j["points"][1]["sweep_value"].get<std::string>(), "inf");
}

TEST(ResultsIo, FormatsAndErrors)
{
    EXPECT_EQ(parse_result_format("csv"), ResultFormat::kCsv);
    EXPECT_EQ(parse_result_format("json"), ResultFormat::kJson);
    EXPECT_THROW(parse_result_format("xml"), InvalidArgument);
    try
    {
        emit_results(sample_points(), "/nonexistent-dir/x.csv", ResultFormat::kCsv);
        FAIL();
    }
    catch (const IoError &e)
    {
        EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x.csv"), std::string::npos);
    }
    std::istringstream bad("nope\n");
    EXPECT_THROW(read_csv(bad), InvalidArgument);
}

TEST(Config, DefaultsAndRoundTrip)
{
    const ExperimentConfig d = parse_config("");
    EXPECT_EQ(d.array_rows, 16);
    EXPECT_EQ(d.num_bases, 9);
    EXPECT_EQ(d.sample_lattice.size(), 75u);
    EXPECT_EQ(d.ue_position, Vec3(10.35, 1.67, 0.0));

    ExperimentConfig c = parse_config(R"(
        # comment
        array_rows = 8
        array_cols = 4   # trailing comment
        sweep = lmr
        sweep_values = 0, 5, 10, 15
        codebook_lattice = 3x2x1
        methods = ra-optimal, conventional
        ue_mode = random
        ue_position = 11, -1.5, 2
        lmr_db = inf
        report_stages = true
        coarse_starts = 2
    )");
    EXPECT_EQ(c.array_rows, 8);
    EXPECT_EQ(c.array_cols, 4);
    EXPECT_EQ(c.sweep, SweepKind::kLmr);
    EXPECT_EQ(c.sweep_values.size(), 4u);
    EXPECT_EQ(c.codebook_lattice.nx, 3);
    EXPECT_EQ(c.methods.size(), 2u);
    EXPECT_EQ(c.ue_mode, UeMode::kRandom);
    EXPECT_TRUE(c.report_stages);
    EXPECT_EQ(c.localization.coarse_starts, 2u);

    const ExperimentConfig again = parse_config(format_config(c));
    EXPECT_EQ(format_config(again), format_config(c));
}

TEST(Config, ErrorsNameTheKey)
{
    auto message = [](const std::string &text) {
        try
        {
            parse_config(text);
        }
        catch (const ConfigError &e)
        {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("bogus = 1").find("bogus"), std::string::npos);
    EXPECT_NE(message("trials = 1\ntrials = 2").find("trials"), std::string::npos);
    EXPECT_NE(message("array_rows = abc").find("array_rows"), std::string::npos);
    EXPECT_NE(message("codebook_lattice = 2x2").find("codebook_lattice"), std::string::npos);
    EXPECT_NE(message("trials = 0").find("trials"), std::string::npos);
    EXPECT_NE(message("sweep = foo").find("sweep"), std::string::npos);
    EXPECT_NE(message("coarse_starts = 0").find("coarse_starts"), std::string::npos);
    EXPECT_NE(message("no equals sign").find("line 1"), std::string::npos);
    EXPECT_THROW(load_config("/nonexistent/cfg"), IoError);
}

TEST(CodebookJson, RoundTrip)
{
    ExperimentConfig c = fixture::small_config();
    const ArrayModel model = c.array_model(4);
    const Codebook cb = build_codebook(model, c.scenario.region, {2, 1, 1});
    std::vector<double> w(cb.size());
    for (std::size_t t = 0; t < w.size(); ++t)
        w[t] = static_cast<double>(t + 1);
    double sum = 0.0;
    for (double x : w)
        sum += x;
    for (auto &x : w)
        x /= sum;
    const Codebook weighted = cb.with_weights(w);
    const SignalModel signal(model, weighted);
    const DictionaryMatrix dict = build_dictionary(signal, {c.scenario.region, Vec3::Constant(2.0)});

    const std::string text = codebook_to_json(model, weighted, {true, &dict});
    const auto j = nlohmann::json::parse(text);
    EXPECT_EQ(j.at("format"), "nfra-codebook");
    EXPECT_EQ(j.at("precoders").size(), cb.size());

    const CodebookFile back = codebook_from_json(text);
    EXPECT_EQ(back.model.basis_size(), 4);
    EXPECT_EQ(back.model.elements(), model.elements());
    EXPECT_NEAR(back.model.wavelength, model.wavelength, 0.0);
    ASSERT_EQ(back.codebook.size(), weighted.size());
    for (std::size_t t = 0; t < weighted.size(); ++t)
    {
        EXPECT_EQ(back.codebook.weights()[t], weighted.weights()[t]);
        EXPECT_EQ(back.codebook.codewords()[t].derivative_order, weighted.codewords()[t].derivative_order);
        EXPECT_EQ((back.codebook.codewords()[t].w - weighted.codewords()[t].w).norm(), 0.0);
    }
    ASSERT_TRUE(back.dictionary.has_value());
    EXPECT_EQ(back.dictionary->size(), dict.size());
    EXPECT_EQ((back.dictionary->columns - dict.columns).norm(), 0.0);

    EXPECT_THROW(codebook_from_json("{\"format\": \"other\"}"), InvalidArgument);
}

TEST(CodebookJson, FileRoundTrip)
{
    const ExperimentConfig c = fixture::small_config();
    const ArrayModel model = c.array_model(1);
    const Codebook cb = build_codebook(model, c.scenario.region, {1, 1, 1});
    const auto path = std::filesystem::temp_directory_path() / "nfra_codebook_test.json";
    export_codebook(path, model, cb, {false, nullptr});
    const CodebookFile back = import_codebook(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.codebook.size(), 4u);
    EXPECT_FALSE(back.dictionary.has_value());
    EXPECT_THROW(import_codebook("/nonexistent/cb.json"), IoError);
}
