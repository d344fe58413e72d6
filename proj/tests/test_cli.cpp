#include "tasksim/cli.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tasksim;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("tasksim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "tasksim");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return cli::run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void write(const std::string& name, const std::string& content) const {
        std::ofstream(dir_ / name, std::ios::binary) << content;
    }

    std::vector<std::vector<std::string>> read_csv(const std::string& name) const {
        std::ifstream in(dir_ / name);
        std::vector<std::vector<std::string>> rows;
        std::string line;
        while (std::getline(in, line)) rows.push_back(detail::split_csv_line(line));
        return rows;
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

void write_samples(const std::string& path, const PartitionDistribution& d, std::size_t n, std::uint64_t seed,
                   const std::vector<Label>& relabel = {}) {
    Rng rng = make_rng(seed);
    auto s = sample(d, n, rng);
    for (auto& v : s)
        if (!relabel.empty()) v.y = relabel[static_cast<std::size_t>(v.y)];
    std::ofstream out(path);
    write_samples_csv(out, s);
}

}  // namespace

TEST_F(CliTest, AnalyticMatrixDefaults) {
    ASSERT_EQ(run({"analytic-matrix", "--out-dir", dir_.string()}), 0) << err_.str();
    const auto rows = read_csv("ats.csv");
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"target\\source", "XOR", "Quads", "R-XOR", "F-XOR"}));
    EXPECT_NEAR(std::stod(rows[3][4]), 0.5, 1e-9);
    EXPECT_NEAR(std::stod(rows[4][3]), 0.0, 1e-9);
    EXPECT_NEAR(std::stod(rows[1][2]), 1.0, 1e-9);
    EXPECT_TRUE(fs::exists(dir_ / "ts.csv"));
    const auto meta = json::parse(read_text_file(path("analytic-matrix.meta.json")));
    EXPECT_EQ(meta["version"], cli::version_string());
    EXPECT_EQ(meta["config"]["tie_tol"], 1e-9);
    EXPECT_EQ(meta["config_hash"].get<std::string>().size(), 16u);
}

TEST_F(CliTest, AnalyticMatrixSingleDistribution) {
    ASSERT_EQ(run({"analytic-matrix", "--dist", "fxor", "--out-dir", dir_.string()}), 0);
    const auto rows = read_csv("ats.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1], (std::vector<std::string>{"F-XOR", "1"}));
}

TEST_F(CliTest, AnalyticMatrixJsonAndSvg) {
    ASSERT_EQ(run({"analytic-matrix", "--dist", "xor", "--dist", "rxor", "--format", "csv,json,svg", "--out-dir",
                   dir_.string()}),
              0);
    const auto j = json::parse(read_text_file(path("analytic.json")));
    EXPECT_EQ(j["pairs"].size(), 4u);
    EXPECT_NEAR(j["pairs"][1]["excluded_mass"].get<double>(), 1.0, 1e-9);
    EXPECT_NE(read_text_file(path("ats.svg")).find("<svg"), std::string::npos);
}

TEST_F(CliTest, DistributionFromJsonFile) {
    write("half.json", R"({"domain": [-1, 1, -1, 1],
        "cells": [[[-1,-1],[0,-1],[0,1],[-1,1]], [[0,-1],[1,-1],[1,1],[0,1]]],
        "labels": [[1, 0], [0, 1]], "name": "halves"})");
    ASSERT_EQ(run({"analytic-matrix", "--dist", path("half.json"), "--dist", "quads", "--out-dir", dir_.string()}), 0)
        << err_.str();
    const auto rows = read_csv("ts.csv");
    EXPECT_EQ(rows[1][0], "halves");
    EXPECT_NEAR(std::stod(rows[1][2]), 1.0, 1e-12);
}

TEST_F(CliTest, MalformedJsonIsInputError) {
    write("bad.json", R"({"domain": [-1, 1, -1, 1], "cells": [[[0,0],[1,0)");
    EXPECT_EQ(run({"analytic-matrix", "--dist", path("bad.json"), "--out-dir", dir_.string()}), 2);
    EXPECT_NE(err_.str().find("malformed JSON"), std::string::npos);
    EXPECT_EQ(run({"validate", path("bad.json")}), 2);
}

TEST_F(CliTest, InvalidInputs) {
    EXPECT_EQ(run({"analytic-matrix", "--dist", "circle"}), 2);
    EXPECT_EQ(run({"analytic-matrix", "--dist", path("missing.json")}), 2);
    EXPECT_EQ(run({"empirical-matrix", "--out-dir", dir_.string()}), 2);  // no seed
    EXPECT_EQ(run({"no-such-command"}), 2);
    EXPECT_EQ(run({"analytic-matrix", "--format", "pdf"}), 2);
}

TEST_F(CliTest, ValidateReportsOverlapAndMinimality) {
    write("overlap.json", R"({"domain": [0, 2, 0, 1],
        "cells": [[[0,0],[1.2,0],[1.2,1],[0,1]], [[0.8,0],[2,0],[2,1],[0.8,1]]]})");
    EXPECT_EQ(run({"validate", path("overlap.json")}), 2);
    EXPECT_NE(out_.str().find("invalid"), std::string::npos);

    std::ofstream(dir_ / "merge.json") << distribution_to_json(
        make_uniform_distribution(make_grid_partition(2), {0, 0, 1, 1}, 2));
    EXPECT_EQ(run({"validate", path("merge.json")}), 0);
    EXPECT_NE(out_.str().find("warning"), std::string::npos);
}

TEST_F(CliTest, EmpiricalMatrixIsDeterministic) {
    const std::vector<std::string> base{"empirical-matrix", "--dist", "xor", "--dist", "quads", "--n-train", "400",
                                        "--n-eval", "200", "--replications", "3", "--seed", "7"};
    auto a = base, b = base;
    a.insert(a.end(), {"--workers", "2", "--out-dir", path("a")});
    b.insert(b.end(), {"--workers", "1", "--out-dir", path("b")});
    ASSERT_EQ(run(a), 0) << err_.str();
    ASSERT_EQ(run(b), 0) << err_.str();
    for (const char* f : {"ets_mean.csv", "ets_ci90.csv", "ets_replications.csv"})
        EXPECT_EQ(read_text_file(path(std::string("a/") + f)), read_text_file(path(std::string("b/") + f))) << f;
    const auto reps = read_csv("a/ets_replications.csv");
    EXPECT_EQ(reps.size(), 1u + 4 * 3);
    EXPECT_EQ(reps[1][3], "7");
    const auto summary = json::parse(read_text_file(path("a/empirical.json")));
    EXPECT_EQ(summary["entries"][0]["seeds"], json({7, 8, 9}));
}

TEST_F(CliTest, Convergence) {
    ASSERT_EQ(run({"convergence", "--grids", "1,2,3", "--n-train", "500", "--n-eval", "200", "--replications", "2",
                   "--seed", "1", "--out-dir", dir_.string()}),
              0)
        << err_.str();
    const auto rows = read_csv("convergence.csv");
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0][0], "n");
    EXPECT_NEAR(std::stod(rows[2][2]), 1.0, 1e-12);
    EXPECT_NEAR(std::stod(rows[3][2]), 13.0 / 18.0, 1e-12);
}

TEST_F(CliTest, TransferEfficiencyReportsBaselines) {
    ASSERT_EQ(run({"transfer-efficiency", "--dist", "xor", "--dist", "quads", "--n-source", "1000", "--n-target",
                   "50,100", "--n-eval", "500", "--replications", "3", "--seed", "2", "--out-dir", dir_.string()}),
              0)
        << err_.str();
    const auto rows = read_csv("transfer_efficiency.csv");
    ASSERT_EQ(rows.size(), 1u + 2 * 2 * 2);
    EXPECT_EQ(rows[0][6], "scratch_risk_mean");
    EXPECT_EQ(rows[0][8], "baseline_accuracy");
    EXPECT_NEAR(std::stod(rows[1][8]), 1.0 - std::stod(rows[1][6]), 1e-12);
}

TEST_F(CliTest, EmpiricalMatrixDefaults) {
    const auto t0 = std::chrono::steady_clock::now();
    ASSERT_EQ(run({"empirical-matrix", "--seed", "11", "--out-dir", dir_.string()}), 0) << err_.str();
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 60.0);
    const auto rows = read_csv("ets_mean.csv");
    ASSERT_EQ(rows.size(), 5u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_GE(std::stod(rows[i][i]), 0.9) << rows[i][0];
        for (std::size_t j = 1; j < rows[i].size(); ++j) {
            EXPECT_GE(std::stod(rows[i][j]), 0.0);
            EXPECT_LE(std::stod(rows[i][j]), 1.0);
        }
    }
}

TEST_F(CliTest, EtsCsvRanking) {
    // the class boundary sits off the domain midpoint
    const Partition halves(Box{}, {ConvexPolygon::from_box({-1, 0.3, -1, 1}), ConvexPolygon::from_box({0.3, 1, -1, 1})});
    const auto d = make_uniform_distribution(halves, {0, 1}, 2);
    write_samples(path("target.csv"), d, 1500, 1);
    fs::copy_file(path("target.csv"), path("copy.csv"));
    write_samples(path("permuted.csv"), d, 1500, 2, {1, 0});
    {
        Rng rng = make_rng(3);
        auto s = sample(d, 1500, rng);
        for (auto& v : s) v.y = static_cast<Label>(uniform_index(rng, 2));
        std::ofstream out(path("shuffled.csv"));
        write_samples_csv(out, s);
    }
    ASSERT_EQ(run({"ets-csv", "--target-csv", path("target.csv"), "--source-csv", path("shuffled.csv"), "--source-csv",
                   path("permuted.csv"), "--source-csv", path("copy.csv"), "--depth", "2", "--seed", "5",
                   "--out-dir", dir_.string()}),
              0)
        << err_.str();
    const auto rows = read_csv("ets_ranking.csv");
    ASSERT_EQ(rows.size(), 4u);
    std::map<std::string, double> score;
    for (std::size_t i = 1; i < rows.size(); ++i) score[rows[i][1]] = std::stod(rows[i][2]);
    EXPECT_DOUBLE_EQ(score[path("copy.csv")], 1.0);
    EXPECT_DOUBLE_EQ(std::stod(rows[1][2]), 1.0);
    EXPECT_EQ(rows[3][1], path("shuffled.csv"));
    EXPECT_GT(score[path("permuted.csv")], score[path("shuffled.csv")]);
}

TEST_F(CliTest, EtsCsvInputErrors) {
    write("empty.csv", "");
    write("header_only.csv", "f0,f1,y,t\n");
    write("one_class.csv", "0.1,0.2,3,1\n0.3,0.1,3,1\n");
    write("three_d.csv", "0.1,0.2,0.3,0,1\n0.3,0.1,0.2,1,1\n");
    write_samples(path("ok.csv"), builtins::xor_dist(), 200, 1);
    auto ets_csv = [&](const std::string& t, const std::string& s) {
        return run({"ets-csv", "--target-csv", path(t), "--source-csv", path(s), "--seed", "1", "--out-dir",
                    dir_.string()});
    };
    EXPECT_EQ(ets_csv("empty.csv", "ok.csv"), 2);
    EXPECT_EQ(ets_csv("ok.csv", "header_only.csv"), 2);
    EXPECT_EQ(ets_csv("ok.csv", "one_class.csv"), 2);
    EXPECT_EQ(ets_csv("ok.csv", "three_d.csv"), 2);
    EXPECT_EQ(ets_csv("ok.csv", "missing.csv"), 2);
    EXPECT_EQ(ets_csv("ok.csv", "ok.csv"), 0);
}

TEST(SamplesCsv, ParseAndRoundTrip) {
    std::istringstream in("f0,f1,y,t\n0.5,-0.25,1,0\n\n1e-3,2,0,1\n");
    const auto s = parse_samples_csv(in);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].x, (std::vector<double>{0.5, -0.25}));
    EXPECT_EQ(s[1].t, 1);
    std::ostringstream out;
    write_samples_csv(out, s);
    std::istringstream back(out.str());
    const auto s2 = parse_samples_csv(back);
    EXPECT_EQ(s2[1].x, s[1].x);

    std::istringstream bad_dim("1,2,0,1\n1,0,1\n");
    EXPECT_THROW(parse_samples_csv(bad_dim), InputError);
    std::istringstream bad_flag("1,2,0,3\n");
    EXPECT_THROW(parse_samples_csv(bad_flag), InputError);
    std::istringstream bad_label("1,2,0.5,1\n");
    EXPECT_THROW(parse_samples_csv(bad_label), InputError);
}

TEST(DistributionJson, RoundTrip) {
    for (const auto& d : {builtins::rxor(), builtins::fxor()}) {
        const auto back = distribution_from_json(json::parse(distribution_to_json(d).dump()));
        EXPECT_EQ(back.name(), d.name());
        EXPECT_NEAR(ats(back, d).value, 1.0, 1e-12);
        for (std::size_t i = 0; i < d.num_cells(); ++i) EXPECT_EQ(back.cell_label(i), d.cell_label(i));
    }
}

TEST(Format, SeventeenDigits) {
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}
