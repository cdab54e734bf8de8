#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = PLANNER_CLI_PATH;

int run(const std::string& args, const std::string& log_name) {
    const std::string cmd = kCli + " " + args + " > " + log_name + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path workdir() {
    const fs::path dir = fs::temp_directory_path() / "fplan_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string open_road_scenario() {
    return R"({
  "centerline": [[0, 0], [400, 0]],
  "ego": {"x": 0, "y": 0, "heading": 0, "speed": 5},
  "obstacles": [{"x": 25, "y": 0.8, "vx": 2, "vy": 0}],
  "lane": {"y_lb": -1.75, "y_ub": 1.75},
  "limits": {"v_max": 10, "v_min": 0.01, "a_max": 4, "ell_a": 3.5, "ell_b": 1.0},
  "goal": {"x": 35, "y": 0.5}
})";
}

std::string blocked_scenario() {
    return R"({
  "centerline": [[0, 0], [400, 0]],
  "ego": {"x": 0, "y": 0, "heading": 0, "speed": 5},
  "obstacles": [{"x": 15, "y": -1.2, "vx": 0, "vy": 0},
                 {"x": 15.5, "y": 0, "vx": 0, "vy": 0},
                 {"x": 15, "y": 1.2, "vx": 0, "vy": 0}],
  "lane": {"y_lb": -1.75, "y_ub": 1.75},
  "limits": {"v_max": 10, "v_min": 0.01, "a_max": 4, "ell_a": 3.5, "ell_b": 1.0},
  "goal": {"x": 30, "y": 0}
})";
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

}  // namespace

TEST_CASE("plan: open road produces artifacts and exit 0") {
    const fs::path dir = workdir();
    write_file(dir / "open.json", open_road_scenario());
    const fs::path out = dir / "plan_out";
    const int code = run("plan " + (dir / "open.json").string() + " --out " +
                             out.string() + " --seed 3",
                         (dir / "plan.log").string());
    CHECK(code == 0);
    CHECK(fs::exists(out / "trajectory.csv"));
    CHECK(fs::exists(out / "plan.svg"));
    CHECK(fs::exists(out / "summary.json"));

    // CSV has a header plus one row per grid sample.
    std::istringstream csv(slurp((out / "trajectory.csv").string()));
    std::string line;
    int rows = 0;
    std::getline(csv, line);
    CHECK(line == "t,x,y,xd,yd,xdd,ydd");
    while (std::getline(csv, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 30);

    const auto summary = nlohmann::json::parse(slurp((out / "summary.json").string()));
    CHECK(summary.at("feasible").get<bool>());
    CHECK(summary.contains("selected"));
    CHECK(summary.contains("max_violation"));
}

TEST_CASE("plan: malformed input names the offending field and exits 1") {
    const fs::path dir = workdir();
    write_file(dir / "bad.json", R"({"centerline": [[0,0],[100,0]],
        "ego": {"x": 0, "y": 0, "heading": 0},
        "lane": {"y_lb": -1.75, "y_ub": 1.75},
        "limits": {"v_max": 10, "a_max": 4, "ell_a": 3.5, "ell_b": 1.0},
        "goal": {"x": 30, "y": 0}})");
    const int code = run("plan " + (dir / "bad.json").string() + " --out " +
                             (dir / "bad_out").string(),
                         (dir / "bad.log").string());
    CHECK(code == 1);
    const std::string log = slurp((dir / "bad.log").string());
    CHECK(log.find("ego.speed") != std::string::npos);

    write_file(dir / "notjson.json", "{nope");
    const int code2 = run("plan " + (dir / "notjson.json").string(),
                          (dir / "notjson.log").string());
    CHECK(code2 == 1);
}

TEST_CASE("plan: blocked lane reports infeasible with exit 2") {
    const fs::path dir = workdir();
    write_file(dir / "blocked.json", blocked_scenario());
    const fs::path out = dir / "blocked_out";
    const int code = run("plan " + (dir / "blocked.json").string() + " --out " +
                             out.string() + " --seed 5",
                         (dir / "blocked.log").string());
    CHECK(code == 2);
    const auto summary = nlohmann::json::parse(slurp((out / "summary.json").string()));
    CHECK_FALSE(summary.at("feasible").get<bool>());
    double max_violation = 0.0;
    for (const auto& [key, value] : summary.at("max_violation").items()) {
        max_violation = std::max(max_violation, value.get<double>());
    }
    CHECK(max_violation > 0.0);
}

TEST_CASE("simulate: metrics schema and byte-identical reruns") {
    const fs::path dir = workdir();
    write_file(dir / "open.json", open_road_scenario());
    const fs::path out1 = dir / "sim1";
    const fs::path out2 = dir / "sim2";
    const int c1 = run("simulate " + (dir / "open.json").string() + " --out " +
                           out1.string() + " --seed 12",
                       (dir / "sim1.log").string());
    const int c2 = run("simulate " + (dir / "open.json").string() + " --out " +
                           out2.string() + " --seed 12",
                       (dir / "sim2.log").string());
    CHECK(c1 == 0);
    CHECK(c2 == 0);
    CHECK(slurp((out1 / "simlog.csv").string()) ==
          slurp((out2 / "simlog.csv").string()));

    const auto metrics = nlohmann::json::parse(slurp((out1 / "metrics.json").string()));
    for (const char* key : {"min_fde", "smoothness", "success", "collision"}) {
        CHECK(metrics.contains(key));
    }
    CHECK(metrics.at("success").get<bool>());

    const fs::path out3 = dir / "sim3";
    const int c3 = run("simulate " + (dir / "open.json").string() + " --out " +
                           out3.string() + " --seed 13",
                       (dir / "sim3.log").string());
    CHECK(c3 == 0);
    CHECK(slurp((out1 / "simlog.csv").string()) !=
          slurp((out3 / "simlog.csv").string()));
}

TEST_CASE("gradcheck: smooth scenario passes, eps is honored") {
    const fs::path dir = workdir();
    write_file(dir / "open.json", open_road_scenario());
    const int code = run("gradcheck " + (dir / "open.json").string(),
                         (dir / "grad.log").string());
    CHECK(code == 0);
    const std::string log = slurp((dir / "grad.log").string());
    CHECK(log.find("eps=1e-05") != std::string::npos);
    CHECK(log.find("max_rel_err") != std::string::npos);

    const int code2 = run("gradcheck " + (dir / "open.json").string() + " --eps 1e-6",
                          (dir / "grad2.log").string());
    CHECK(code2 == 0);
    CHECK(slurp((dir / "grad2.log").string()).find("eps=1e-06") != std::string::npos);
}

TEST_CASE("gradcheck: a standstill start is flagged and excluded") {
    const fs::path dir = workdir();
    std::string scenario = open_road_scenario();
    const auto pos = scenario.find("\"speed\": 5");
    REQUIRE(pos != std::string::npos);
    scenario.replace(pos, 10, "\"speed\": 0");
    write_file(dir / "standstill.json", scenario);
    const int code = run("gradcheck " + (dir / "standstill.json").string(),
                         (dir / "kink.log").string());
    CHECK(code == 0);
    CHECK(slurp((dir / "kink.log").string()).find("KinkWarning") != std::string::npos);
}

TEST_CASE("batch: deterministic aggregate table") {
    const fs::path dir = workdir();
    const fs::path out = dir / "batch_out";
    const int code = run("batch --size 3 --seed 21 --out " + out.string(),
                         (dir / "batch.log").string());
    CHECK(code == 0);
    const auto summary =
        nlohmann::json::parse(slurp((out / "batch_summary.json").string()));
    CHECK(summary.at("count").get<int>() == 3);
    const double sr = summary.at("success_rate").get<double>();
    CHECK(sr >= 0.0);
    CHECK(sr <= 1.0);

    const fs::path out2 = dir / "batch_out2";
    const int code2 = run("batch --size 3 --seed 21 --out " + out2.string(),
                          (dir / "batch2.log").string());
    CHECK(code2 == 0);
    CHECK(slurp((out / "batch.csv").string()) == slurp((out2 / "batch.csv").string()));
}
