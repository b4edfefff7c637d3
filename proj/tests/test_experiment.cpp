#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "test_support.hpp"
#include "whdpd/error.hpp"
#include "whdpd/experiment.hpp"

using namespace whdpd;

namespace {

ExperimentConfig small_config(std::vector<double> amplitudes) {
    ExperimentConfig cfg;
    cfg.signal.symbols = 2048;
    cfg.topology.k1 = cfg.topology.k2 = 15;
    cfg.fit.iterations = 500;
    cfg.sweep.amplitudes = std::move(amplitudes);
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const SweepRow& row_of(const SweepReport& report, std::string_view mode, double amp) {
    for (const auto& r : report.rows)
        if (r.mode == mode && r.v_in == amp) return r;
    throw std::runtime_error("row not found");
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_NOTHROW(validate(ExperimentConfig{}));
    auto cfg = small_config({1.0, 1.0});
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = small_config({2.0, 1.0});
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = small_config({-1.0, 1.0});
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = small_config({});
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = small_config({1.0});
    cfg.signal.order = 32;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = small_config({1.0});
    cfg.fit.iterations = 0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = small_config({1.0});
    cfg.topology.nl_orders = {1};
    CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("config JSON round trip") {
    auto cfg = small_config({0.25, 0.75});
    cfg.sweep.rescale_nl = true;
    cfg.topology.nl_orders = {3, 5};
    cfg.fit.ridge = 0.01;
    const auto doc = config_to_json(cfg);
    CHECK(doc.at("schema") == "whdpd.config/1");
    const auto back = config_from_json(Json::parse(doc.dump()));
    CHECK(config_to_json(back) == doc);
    CHECK(back.sweep.amplitudes == cfg.sweep.amplitudes);
    CHECK(back.topology.nl_orders == cfg.topology.nl_orders);

    CHECK_THROWS_AS(config_from_json(Json{{"schema", "whdpd.config/9"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json{{"signal", {{"symbols", "many"}}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json{{"channel", "lab-bench"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::array()), ConfigError);
}

TEST_CASE("transmit signal") {
    SignalConfig sc;
    sc.symbols = 1000;
    const auto tx = make_tx_signal(sc);
    REQUIRE(tx.size() == 2);
    CHECK(tx[0].size() == 2000);
    CHECK(tx[1].size() == 2000);
    CHECK(rms(tx) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(make_tx_signal(sc) == tx);
    sc.seed = 2;
    CHECK(make_tx_signal(sc) != tx);
}

TEST_CASE("one-point grid gives one row per mode") {
    auto cfg = small_config({1.0});
    const auto result = run_experiment(cfg);
    CHECK_FALSE(result.error.has_value());
    REQUIRE(result.report.rows.size() == 3);
    CHECK(result.report.rows[0].mode == "none");
    CHECK(result.report.rows[1].mode == "linear");
    CHECK(result.report.rows[2].mode == "wh");
    CHECK(result.report.rows[0].complexity == ComplexityReport{});
    CHECK_FALSE(result.report.rows[0].final_loss.has_value());
    for (std::size_t i = 1; i < 3; ++i) {
        CHECK(result.report.rows[i].complexity == ComplexityReport{15 + 15 + 3, 14 + 14 + 1});
        CHECK(result.report.rows[i].complexity == complexity(result.artifacts[i - 1].artifact.model));
        CHECK(result.report.rows[i].final_loss.has_value());
    }
    REQUIRE(result.artifacts.size() == 2);
    const auto& linear = std::get<PolyNlBlock>(result.artifacts[0].artifact.model.layers()[1]);
    CHECK(linear.coeffs.at(3) == 0.0);
    const auto& wh = std::get<PolyNlBlock>(result.artifacts[1].artifact.model.layers()[1]);
    CHECK(wh.coeffs.at(3) != 0.0);

    const auto csv = report_to_csv(result.report);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "# schema=whdpd.report/1");
    std::getline(lines, line);
    CHECK(line == "mode,v_in,output_rms,snr_db,papr_db,final_loss,mults_per_sample,adds_per_sample,status");
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        ++n;
        CHECK(line.ends_with(",ok"));
    }
    CHECK(n == 3);
}

TEST_CASE("identity channel reaches the ceiling in every mode") {
    auto cfg = small_config({0.5, 2.0});
    cfg.channel = channel_preset("identity");
    cfg.channel_name = "identity";
    const auto result = run_experiment(cfg);
    REQUIRE(result.report.rows.size() == 6);
    for (const auto& row : result.report.rows) CHECK(row.snr_db == kSnrCeilingDb);
}

TEST_CASE("reports are bitwise reproducible") {
    const auto cfg = small_config({0.75});
    CHECK(report_to_csv(run_experiment(cfg).report) == report_to_csv(run_experiment(cfg).report));
}

TEST_CASE("drive-dependence on the paper-like preset") {
    const auto cfg = small_config({1.0, 1.5, 2.0});
    const auto result = run_experiment(cfg);
    REQUIRE_FALSE(result.error.has_value());
    const auto& rep = result.report;
    CHECK(row_of(rep, "none", 1.0).output_rms <= row_of(rep, "none", 1.5).output_rms);
    CHECK(row_of(rep, "none", 1.5).output_rms <= row_of(rep, "none", 2.0).output_rms);
    CHECK(row_of(rep, "linear", 1.0).snr_db >= row_of(rep, "linear", 1.5).snr_db);
    CHECK(row_of(rep, "linear", 1.5).snr_db >= row_of(rep, "linear", 2.0).snr_db);
    for (double amp : {1.0, 1.5, 2.0}) CHECK(row_of(rep, "wh", amp).snr_db > row_of(rep, "none", amp).snr_db);
}

TEST_CASE("fixed-artifact sweep") {
    auto cfg = small_config({0.5});
    const auto result = run_experiment(cfg);
    const auto& wh = result.artifacts.back();
    REQUIRE(wh.mode == DpdMode::Wh);

    SUBCASE("single training point matches the experiment row") {
        const auto fixed = sweep_amplitude_with_fixed_dpd(cfg, wh.artifact, 0.5);
        REQUIRE(fixed.rows.size() == 1);
        const auto& row = row_of(result.report, "wh", 0.5);
        CHECK(fixed.rows[0].mode == "wh-fixed");
        CHECK(fixed.rows[0].snr_db == row.snr_db);
        CHECK(fixed.rows[0].output_rms == row.output_rms);
        CHECK(fixed.rows[0].papr_db == row.papr_db);
    }
    SUBCASE("rescaling the cubic helps at twice the training drive") {
        cfg.sweep.amplitudes = {0.5, 1.0};
        const auto fixed = sweep_amplitude_with_fixed_dpd(cfg, wh.artifact);
        cfg.sweep.rescale_nl = true;
        const auto rescaled = sweep_amplitude_with_fixed_dpd(cfg, wh.artifact);
        CHECK(rescaled.rows[1].mode == "wh-fixed-rescaled");
        CHECK(rescaled.rows[0].snr_db == fixed.rows[0].snr_db);
        CHECK(rescaled.rows[1].snr_db >= fixed.rows[1].snr_db);
    }
}

TEST_CASE("a failing point leaves an error row") {
    auto cfg = small_config({0.5, 1.0});
    cfg.fit.adam.lr_taps = cfg.fit.adam.lr_nonlinear = 1e60;
    const auto result = run_experiment(cfg);
    REQUIRE(result.error.has_value());
    CHECK(result.diverged);
    REQUIRE(result.report.rows.size() == 2);
    CHECK(result.report.rows[0].status == "ok");
    CHECK(result.report.rows[1].status.starts_with("error"));
    CHECK(report_to_csv(result.report).find("\nlinear,0.5,") != std::string::npos);
}

TEST_CASE("experiment outputs on disk") {
    auto cfg = small_config({0.5});
    cfg.fit.iterations = 50;
    cfg.training_log = true;
    cfg.out_dir = std::filesystem::temp_directory_path() / "whdpd_test_experiment";
    std::filesystem::remove_all(cfg.out_dir);
    const auto result = run_experiment(cfg);
    write_experiment_outputs(result, cfg);
    CHECK(slurp(cfg.out_dir / "report.csv") == report_to_csv(result.report));
    const auto doc = read_json_file(cfg.out_dir / "artifact_wh_1.json");
    CHECK(artifact_from_json(doc).model == result.artifacts[1].artifact.model);
    CHECK(doc.at("training").at("amplitude") == 0.5);
    CHECK(std::filesystem::exists(cfg.out_dir / "artifact_linear_0.json"));
    const auto log = slurp(cfg.out_dir / "artifact_wh_1_log.csv");
    CHECK(log.starts_with("# schema=whdpd.training-log/1\niteration,loss,gradient_norm\n0,"));
}
