#include "simplexreg/container.hpp"
#include "simplexreg/report.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace simplexreg;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("simplexreg_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string(SIMPLEXREG_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::vector<std::string>* header = nullptr) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    if (header) {
        std::stringstream hs(line);
        for (std::string h; std::getline(hs, h, ',');) header->push_back(h);
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> r;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) r.push_back(std::stod(c));
        rows.push_back(r);
    }
    return rows;
}

const std::string kBaseFit = " fit --synth sinusoid --synth-n 300 --epochs 2 --hidden 8";
const std::string kFitArgs = kBaseFit + " --method ls";

}  // namespace

TEST(Cli, FitWritesResultModelAndCurve) {
    const fs::path out = scratch("fit");
    ASSERT_EQ(run("--out " + out.string() + kFitArgs), 0);
    const auto j = nlohmann::json::parse(slurp(out / "result.json"));
    EXPECT_TRUE(j.contains("test_rmse"));
    EXPECT_TRUE(j["test_rmse"].is_number());
    EXPECT_TRUE(fs::exists(out / "model.bin"));
    EXPECT_EQ(read_csv(out / "curve.csv").size(), 2u);
    const Predictor p = load_predictor(out / "model.bin");
    EXPECT_EQ(p.method, Method::ls);
}

TEST(Cli, FitRerunIsIdenticalModuloRuntime) {
    const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
    ASSERT_EQ(run("--out " + a.string() + kBaseFit + " --method end_to_end --k 5 --seed 4"), 0);
    ASSERT_EQ(run("--out " + b.string() + kBaseFit + " --method end_to_end --k 5 --seed 4"), 0);
    const auto ja = nlohmann::json::parse(slurp(a / "result.json"));
    const auto jb = nlohmann::json::parse(slurp(b / "result.json"));
    EXPECT_EQ(without_runtime(ja).dump(), without_runtime(jb).dump());
    EXPECT_EQ(slurp(a / "model.bin"), slurp(b / "model.bin"));
    EXPECT_EQ(slurp(a / "curve.csv"), slurp(b / "curve.csv"));
}

TEST(Cli, OutputDirectoryFromEnvironment) {
    const fs::path out = scratch("env");
    const std::string cmd = "SIMPLEXREG_OUT=" + out.string() + " " + SIMPLEXREG_CLI + kFitArgs + " > /dev/null 2>&1";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_TRUE(fs::exists(out / "result.json"));
}

TEST(Cli, ExitCodes) {
    const fs::path out = scratch("codes");
    const std::string o = "--out " + out.string();
    EXPECT_EQ(run(o + " fit --synth sinusoid --method huber"), 1);
    EXPECT_EQ(run(o + " fit --synth sinusoid --spec x.cfg"), 1);
    EXPECT_EQ(run(o + " fit --synth sinusoid --dropout 1.5"), 1);
    EXPECT_EQ(run(o + " frobnicate"), 1);
    EXPECT_EQ(run(o + " fit --spec /nonexistent/spec.cfg"), 2);
    EXPECT_EQ(run(o + kFitArgs + " --lr 1e300 --grad-clip 1e300 --schedule constant"), 3);
    EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, PrepareThenFit) {
    const fs::path out = scratch("prepare");
    fs::create_directories(out / "data");
    std::ofstream(out / "data" / "tiny.csv") << [] {
        std::ostringstream os;
        os << "a,b,target\n";
        for (int i = 0; i < 120; ++i) os << i * 0.1 << "," << (i % 7) << "," << (i * 0.1 + (i % 7)) << "\n";
        return os.str();
    }();
    std::ofstream(out / "tiny.cfg") << "name = tiny\nsource = data/tiny.csv\ntargets = target\n"
                                       "split = 80, 20, 20\nbatch_size = 16\nshuffle_seed = 1\n";
    ASSERT_EQ(run("--out " + out.string() + " prepare --spec " + (out / "tiny.cfg").string()), 0);
    ASSERT_TRUE(fs::exists(out / "prepared.bin"));
    ASSERT_EQ(run("--out " + (out / "fit").string() + " fit --prepared " + (out / "prepared.bin").string() +
                  " --method soft_bin --k 5 --epochs 2 --hidden 8 --unscaled"),
              0);
    const auto j = nlohmann::json::parse(slurp(out / "fit" / "result.json"));
    EXPECT_EQ(j["dataset"], "tiny");
    EXPECT_TRUE(j.contains("test_rmse_unscaled"));
}

TEST(Cli, BenchLeastSquaresOnlyNormalizesToOne) {
    const fs::path out = scratch("bench");
    fs::create_directories(out);
    // bench reads prepared files; build one from synthetic data through prepare.
    ASSERT_EQ(run("--out " + out.string() + " prepare --synth sinusoid --synth-n 300"), 0);
    ASSERT_EQ(run("--out " + out.string() + " bench --prepared " + (out / "prepared.bin").string() +
                  " --methods ls --seeds 0,1 --epochs 2 --hidden 8 --jobs 2"),
              0);
    std::vector<std::string> header;
    const std::string text = slurp(out / "normalized.csv");
    EXPECT_NE(text.find(",1\n"), std::string::npos) << text;
    const auto j = nlohmann::json::parse(slurp(out / "results.json"));
    for (const auto& row : j["summary"]) EXPECT_EQ(row["normalized"], 1.0);
    const auto& s = j["summary"][0];
    const double mean = (s["per_seed_test_rmse"][0].get<double>() + s["per_seed_test_rmse"][1].get<double>()) / 2;
    EXPECT_DOUBLE_EQ(s["mean_test_rmse"].get<double>(), mean);
    EXPECT_TRUE(fs::exists(out / "table.csv"));
}

TEST(Cli, SweepWritesGrid) {
    const fs::path out = scratch("sweep");
    ASSERT_EQ(run("--out " + out.string() +
                  " sweep --synth sinusoid --synth-n 300 --method ls --epochs 1 --hidden 8 --seeds 0 "
                  "--grid lr=1e-3,1e-2 --jobs 2"),
              0);
    const auto j = nlohmann::json::parse(slurp(out / "sweep.json"));
    EXPECT_EQ(j["points"].size(), 2u);
    EXPECT_EQ(read_csv(out / "sweep.csv").size(), 2u);
    EXPECT_EQ(run("--out " + out.string() + " sweep --synth sinusoid --method ls --grid bogus=1"), 1);
}

TEST(Cli, EncodeGridCentersAndSums) {
    const fs::path out = scratch("grid");
    ASSERT_EQ(run("--out " + out.string() + " encode-grid --centers-grid 3 --sigma 0.05 --resolution 3"), 0);
    std::vector<std::string> header;
    const auto rows = read_csv(out / "encode_grid.csv", &header);
    ASSERT_EQ(rows.size(), 9u);
    ASSERT_EQ(header.size(), 11u);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        double s = 0;
        std::size_t arg = 2;
        for (std::size_t c = 2; c < rows[r].size(); ++c) {
            s += rows[r][c];
            if (rows[r][c] > rows[r][arg]) arg = c;
        }
        EXPECT_NEAR(s, 1.0, 1e-9);
        // lattice point r coincides with center r
        EXPECT_EQ(arg - 2, r);
    }
}

TEST(Cli, EncodeGridSymmetry) {
    const fs::path out = scratch("grid_sym");
    ASSERT_EQ(run("--out " + out.string() + " encode-grid --centers-grid 3 --sigma 0.3 --resolution 11"), 0);
    const auto rows = read_csv(out / "encode_grid.csv");
    const std::size_t n = 11, g = 3;
    // Mirror y0 -> 1 - y0: lattice row a <-> n-1-a, center (i, j) <-> (g-1-i, j).
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            const auto& p = rows[a * n + b];
            const auto& q = rows[(n - 1 - a) * n + b];
            for (std::size_t i = 0; i < g; ++i) {
                for (std::size_t j = 0; j < g; ++j) {
                    EXPECT_NEAR(p[2 + i * g + j], q[2 + (g - 1 - i) * g + j], 1e-12);
                }
            }
        }
    }
}

TEST(Cli, EncodeGridRejectsM1Codec) {
    const fs::path out = scratch("grid_m1");
    TargetCodec c{Tensor::Zero(1, 3), Tensor::Zero(1, 3), (Tensor(3, 1) << 0, 0.5, 1).finished()};
    save_codec(out / "c.bin", c);
    EXPECT_EQ(run("--out " + out.string() + " encode-grid --codec " + (out / "c.bin").string()), 1);
}
