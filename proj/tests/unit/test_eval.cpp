#include "physec/error.hpp"
#include "physec/eval.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace physec;

namespace {

std::size_t eve_count(const MessageStream& s) {
    return static_cast<std::size_t>(
        std::count_if(s.test.begin(), s.test.end(), [](const MessageRecord& r) { return r.true_sender == Sender::Eve; }));
}

void check_valid(const RocCurve& curve, std::size_t bob_total, std::size_t eve_total) {
    REQUIRE(curve.points.size() >= 2);
    CHECK(curve.points.front().p_fa == 0.0);
    CHECK(curve.points.front().p_d == 0.0);
    CHECK(curve.points.back().p_fa == 1.0);
    CHECK(curve.points.back().p_d == 1.0);
    CHECK(curve.auc >= 0.0);
    CHECK(curve.auc <= 1.0);
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        CHECK(p.p_fa >= 0.0);
        CHECK(p.p_fa <= 1.0);
        CHECK(p.p_d >= 0.0);
        CHECK(p.p_d <= 1.0);
        CHECK(p.counts.bob_total() == bob_total);
        CHECK(p.counts.eve_total() == eve_total);
        if (i > 0) CHECK(curve.points[i - 1].p_fa <= p.p_fa);
    }
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("default stream sizes") {
    const ExperimentConfig c;
    const auto s = build_stream(c);
    CHECK(s.training.size() == 1000);
    CHECK(s.test.size() == 99000);
    for (const auto& r : s.training) CHECK(r.true_sender == Sender::Bob);
    const double fraction = static_cast<double>(eve_count(s)) / 99000.0;
    CHECK(std::abs(fraction - 0.5) <= 0.01);
    CHECK(s.test.front().block_index == 1);
    CHECK(s.test.back().block_index == 99);
}

TEST_CASE("no attack means no Eve records") {
    auto c = testsupport::reduced_config(5, 200);
    c.attack_intensity = 0.0;
    CHECK(eve_count(build_stream(c)) == 0);
    c.attack_intensity = 1.0;
    CHECK(eve_count(build_stream(c)) == 1000);
}

TEST_CASE("streams are deterministic and subsampling matches a narrower build") {
    auto c = testsupport::reduced_config(2, 100);
    const auto a = build_stream(c);
    const auto b = build_stream(c);
    CHECK(a.training == b.training);
    CHECK(a.test == b.test);

    c.m_subcarriers = 3;
    const auto narrow = build_stream(c);
    const auto sub = subsample_stream(a, 3);
    CHECK(sub.training == narrow.training);
    CHECK(sub.test == narrow.test);
}

TEST_CASE("invalid configs name the field") {
    auto expect_field = [](ExperimentConfig c, const std::string& field) {
        try {
            validate(c);
            FAIL("expected ConfigError for " << field);
        } catch (const ConfigError& e) {
            CHECK(e.field() == field);
        }
    };
    ExperimentConfig c;
    c.attack_intensity = 1.5;
    expect_field(c, "attack_intensity");
    c = ExperimentConfig{};
    c.num_test_blocks = 0;
    expect_field(c, "num_test_blocks");
    c = ExperimentConfig{};
    c.threshold_grid = {0.1, 0.1};
    expect_field(c, "threshold_grid");
    c = ExperimentConfig{};
    c.m_subcarriers = 5;
    expect_field(c, "m_subcarriers");
}

TEST_CASE("accept-all threshold and repeat runs") {
    const auto c = testsupport::reduced_config(2, 200);
    const auto s = build_stream(c);
    const auto zero = run_experiment(s, c, DetectorKind::gmm, 0.0);
    CHECK(zero.false_alarms == 0);
    CHECK(zero.true_detections == 0);
    CHECK(run_experiment(s, c, DetectorKind::gmm, 0.5) == run_experiment(s, c, DetectorKind::gmm, 0.5));
    CHECK(run_experiment(c, DetectorKind::mse, 0.1) == run_experiment(c, DetectorKind::mse, 0.1));
}

TEST_CASE("well separated links at 30 dB") {
    auto c = testsupport::reduced_config(10, 1000);
    c.snr_db = 30.0;
    const auto counts = run_experiment(c, DetectorKind::gmm, 0.5);
    CHECK(counts.p_d() >= 0.99);
    CHECK(counts.p_fa() <= 0.01);
    const auto curve = sweep_roc(c, DetectorKind::gmm);
    CHECK(operating_point(curve, 0.01).p_d >= 0.99);
}

TEST_CASE("an uninformative detector has AUC one half") {
    ScoredStream scored;
    scored.kind = DetectorKind::gmm;
    for (int i = 0; i < 40; ++i) {
        scored.scores.push_back(0.7);
        scored.labels.push_back(i % 3 ? Sender::Bob : Sender::Eve);
    }
    const auto grid = default_threshold_grid(33);
    const auto curve = make_roc(DetectorKind::gmm, scored, grid);
    CHECK(curve.auc == doctest::Approx(0.5).epsilon(1e-15));
    for (const auto& p : curve.points) CHECK(p.p_fa == p.p_d);
}

TEST_CASE("trapezoid area") {
    std::vector<RocPoint> pts(3);
    pts[1].p_fa = 0.0;
    pts[1].p_d = 1.0;
    pts[2].p_fa = 1.0;
    pts[2].p_d = 1.0;
    CHECK(trapezoid_auc(pts) == 1.0);
    pts[1].p_fa = 0.5;
    pts[1].p_d = 0.5;
    CHECK(trapezoid_auc(pts) == 0.5);
}

TEST_CASE("operating points") {
    const auto c = testsupport::reduced_config(3, 300);
    const auto curve = sweep_roc(c, DetectorKind::gmm);
    const auto lo = operating_point(curve, 0.0);
    CHECK(lo.p_fa == 0.0);
    const auto hi = operating_point(curve, 1.0);
    CHECK(hi.p_fa == 1.0);
    CHECK(hi.p_d == 1.0);
    for (double target : {0.001, 0.01, 0.0583, 0.3}) {
        const auto p = operating_point(curve, target);
        CHECK(p.p_fa <= target);
        for (const auto& q : curve.points) CHECK((q.p_fa > target || q.p_fa <= p.p_fa));
        const auto n = nearest_operating_point(curve, target);
        for (const auto& q : curve.points) CHECK(std::abs(n.p_fa - target) <= std::abs(q.p_fa - target));
    }
    CHECK_THROWS_AS(operating_point(RocCurve{}, 0.1), ContractError);
    CHECK_THROWS_AS(nearest_operating_point(RocCurve{}, 0.1), ContractError);
}

TEST_CASE("curves are valid and conserve the stream totals") {
    auto c = testsupport::reduced_config(3, 300);
    const auto s = build_stream(c);
    const std::size_t eve = eve_count(s);
    const std::size_t bob = s.test.size() - eve;
    for (auto kind : {DetectorKind::gmm, DetectorKind::mse}) {
        const auto curve = sweep_roc(s, c, kind);
        check_valid(curve, bob, eve);
    }
    c.mse_rule = MseUpdateRule::running_mean_accepted;
    c.mse_grid_points = 17;
    check_valid(sweep_roc(s, c, DetectorKind::mse), bob, eve);
}

TEST_CASE("roc csv layout") {
    const auto c = testsupport::reduced_config(1, 100);
    const auto csv = roc_csv(sweep_roc(c, DetectorKind::mse));
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "threshold,p_fa,p_d,tp,fn,fp,tn");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 6);
        ++rows;
    }
    CHECK(rows >= 2);
}

TEST_CASE("trace records split into training and test") {
    const auto c = testsupport::reduced_config(2, 50);
    const auto s = build_stream(c);
    std::vector<MessageRecord> all = s.training;
    all.insert(all.end(), s.test.begin(), s.test.end());
    const auto back = stream_from_records(all);
    CHECK(back.training == s.training);
    CHECK(back.test == s.test);
    CHECK_THROWS_AS(stream_from_records(s.test), ContractError);
}

}
