// Copyright 2026 The vbsprep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "vbs/io.hpp"

namespace {

using vbs::Json;

TEST(Round12, SignificantDigits) {
  EXPECT_EQ(vbs::round12(0.1 + 0.2), 0.3);
  EXPECT_EQ(vbs::round12(1.0 / 3.0), 0.333333333333);
  EXPECT_EQ(vbs::round12(123456789.123456789), 123456789.123);
  EXPECT_EQ(vbs::round12(0.0), 0.0);
  EXPECT_EQ(vbs::num_or_null(std::nullopt), Json(nullptr));
}

TEST(Params, RoundTrip) {
  vbs::Rng gen(1);
  vbs::ParamsFile p{vbs::AnsatzParams::random(8, gen), 1e-6, 0.99999, 8, 7};
  const Json j = vbs::params_to_json(p);
  for (const char* key : {"n_layers", "angles", "final_loss", "fidelity_estimate", "cx_count", "seed"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const auto back = vbs::params_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.params.n_layers, 8);
  ASSERT_EQ(back.params.angles.size(), p.params.angles.size());
  for (std::size_t i = 0; i < back.params.angles.size(); ++i) {
    EXPECT_NEAR(back.params.angles[i], p.params.angles[i], 1e-11);
  }
  EXPECT_EQ(back.seed, 7u);
  EXPECT_EQ(back.cx_count, 8);
}

TEST(Params, Rejects) {
  EXPECT_THROW(vbs::params_from_json(Json{{"angles", {0.0}}}), vbs::InvalidArgument);
  EXPECT_THROW(vbs::params_from_json(Json{{"n_layers", 1}, {"angles", {0.0, 1.0}}}), vbs::InvalidArgument);
  EXPECT_THROW(vbs::params_from_json(Json{{"n_layers", "two"}, {"angles", Json::array()}}),
               vbs::InvalidArgument);
  EXPECT_THROW(vbs::params_from_json(Json::array()), vbs::InvalidArgument);
}

TEST(Noise, RoundTripAndDefaults) {
  const auto m = vbs::NoiseModel::synthetic_default();
  const auto back = vbs::noise_from_json(Json::parse(vbs::noise_to_json(m).dump()));
  EXPECT_DOUBLE_EQ(back.cx_depolarizing_prob, m.cx_depolarizing_prob);
  ASSERT_EQ(back.readout.size(), m.readout.size());
  for (std::size_t q = 0; q < m.readout.size(); ++q) {
    EXPECT_NEAR(back.readout[q].p1to0, m.readout[q].p1to0, 1e-13);
  }
  const auto partial = vbs::noise_from_json(Json{{"readout", {{"p0to1", 0.02}, {"p1to0", 0.03}}}});
  EXPECT_EQ(partial.cx_depolarizing_prob, 0.0);
  EXPECT_EQ(partial.readout_for(5).p1to0, 0.03);
  EXPECT_THROW(vbs::noise_from_json(Json{{"cx_depolarizing_prob", 2.0}}), vbs::InvalidArgument);
  EXPECT_THROW(vbs::noise_from_json(Json{{"readout", {{"p0to1", 0.1}}}}), vbs::InvalidArgument);
  EXPECT_THROW(vbs::noise_from_json(Json(3)), vbs::InvalidArgument);
}

TEST(Counts, RoundTripWithMeta) {
  vbs::ShotCounts c;
  c.num_qubits = 4;
  c.shots = 10;
  c.seed = 3;
  c.stage = vbs::CountsStage::Conserved;
  c.counts = {{"0100", 6}, {"0010", 4}};
  vbs::CountsMeta meta;
  meta.sites = 2;
  meta.boundary = vbs::Boundary::Periodic;
  meta.impl = vbs::ProjectorImpl::QR;
  meta.cx_count = 2;
  meta.noise = vbs::NoiseModel{};
  meta.success_probability = 0.75;
  const Json j = vbs::counts_to_json(c, meta);
  EXPECT_EQ(j.at("bit_order"), "q0-leftmost,0=up");
  EXPECT_EQ(j.at("stage"), "conserved");
  EXPECT_TRUE(j.at("noiseless_energy").is_null());
  EXPECT_EQ(j.at("tool_version"), std::string(vbs::kToolVersion));
  const auto back = vbs::counts_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.counts.counts, c.counts);
  EXPECT_EQ(back.counts.stage, c.stage);
  EXPECT_EQ(back.counts.seed, 3u);
  EXPECT_EQ(back.meta.boundary, vbs::Boundary::Periodic);
  EXPECT_EQ(back.meta.impl, vbs::ProjectorImpl::QR);
  EXPECT_TRUE(back.meta.noise.has_value());
  EXPECT_EQ(back.meta.success_probability, 0.75);
  EXPECT_FALSE(back.meta.noiseless_energy.has_value());
}

TEST(Counts, RejectsBadInput) {
  Json j = vbs::counts_to_json(vbs::ShotCounts{2, 1, vbs::CountsStage::Raw, 0, {{"01", 1}}}, {});
  Json bad = j;
  bad["bit_order"] = "q0-rightmost";
  EXPECT_THROW(vbs::counts_from_json(bad), vbs::InvalidArgument);
  bad = j;
  bad["counts"] = {{"012", 1}};
  EXPECT_THROW(vbs::counts_from_json(bad), vbs::InvalidArgument);
  bad = j;
  bad["counts"] = {{"0a", 1}};
  EXPECT_THROW(vbs::counts_from_json(bad), vbs::InvalidArgument);
  bad = j;
  bad["stage"] = "cooked";
  EXPECT_THROW(vbs::counts_from_json(bad), vbs::InvalidArgument);
  bad = j;
  bad.erase("shots");
  EXPECT_THROW(vbs::counts_from_json(bad), vbs::InvalidArgument);
}

TEST(Unitary, RoundTrip) {
  const vbs::Mat8 u = vbs::to_complex(vbs::build_u_direct());
  const Json j = vbs::unitary_to_json(u);
  EXPECT_EQ(j.at("data").size(), 8u);
  EXPECT_EQ(j.at("data")[0][0].size(), 2u);
  const auto back = vbs::unitary_from_json(Json::parse(j.dump()));
  EXPECT_LT((back - u).cwiseAbs().maxCoeff(), 1e-12);
  Json bad = j;
  bad["data"].erase(0);
  EXPECT_THROW(vbs::unitary_from_json(bad), vbs::InvalidArgument);
}

TEST(Report, EmptyRunList) {
  const Json j = vbs::report_to_json({});
  EXPECT_TRUE(j.at("runs").empty());
  EXPECT_TRUE(j.at("trend").empty());
  EXPECT_EQ(j.at("isometry_baseline_cx"), 24);
  EXPECT_TRUE(vbs::report_from_json(j).empty());
  EXPECT_EQ(vbs::report_to_csv({}),
            "L,boundary,impl,shots,seed,hellinger_unmitigated,hellinger_mitigated,success_prob,"
            "energy,cx_count\n");
}

TEST(Report, RoundTripAndCsv) {
  vbs::RunRecord r;
  r.sites = 3;
  r.boundary = vbs::Boundary::Open;
  r.impl = vbs::ProjectorImpl::Recompiled;
  r.shots = 32000;
  r.seed = 11;
  r.hellinger_unmitigated = 0.98765432109876;
  r.success_prob = 0.4375;
  r.cx_count = 26;
  const Json j = vbs::report_to_json({r});
  const auto& run = j.at("runs")[0];
  for (const char* key : {"L", "boundary", "impl", "shots", "seed", "hellinger_unmitigated",
                          "hellinger_mitigated", "success_prob", "energy", "cx_count"}) {
    EXPECT_TRUE(run.contains(key)) << key;
  }
  EXPECT_EQ(run.at("hellinger_unmitigated").get<double>(), 0.987654321099);
  const auto back = vbs::report_from_json(Json::parse(j.dump()));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].impl, r.impl);
  EXPECT_EQ(back[0].cx_count, 26);
  EXPECT_FALSE(back[0].hellinger_mitigated.has_value());
  EXPECT_EQ(j.at("trend")[0].at("L"), 3);
  const auto csv = vbs::report_to_csv({r});
  EXPECT_NE(csv.find("\n3,obc,recompiled,32000,11,0.987654321099,,0.4375,,26\n"), std::string::npos)
      << csv;
}

TEST(Files, ReadWrite) {
  const auto dir = std::filesystem::temp_directory_path() / "vbs_io_test";
  std::filesystem::create_directories(dir);
  const auto good = (dir / "good.json").string(), bad = (dir / "bad.json").string();
  vbs::write_text_file(good, vbs::dump(Json{{"a", 1}}));
  vbs::write_text_file(bad, "{\"a\": ");
  EXPECT_EQ(vbs::read_json_file(good).at("a"), 1);
  EXPECT_THROW(vbs::read_json_file(bad), vbs::InvalidArgument);
  EXPECT_THROW(vbs::read_json_file((dir / "missing.json").string()), vbs::InvalidArgument);
  std::filesystem::remove_all(dir);
}

}  // namespace
