#include <doctest.h>

#include "iosvqa/error.hpp"
#include "iosvqa/eval.hpp"
#include "support/oracles.hpp"

using namespace iosvqa;

namespace {

const std::filesystem::path kFixtures = IOSVQA_FIXTURE_DIR;

Disease severity() {
    Disease d;
    d.id = 1;
    d.name = "sev";
    d.labels = {{"normal", {"healthy"}}, {"mild", {}}, {"severe", {"very bad"}}};
    return d;
}

ParsedAnswer parse(std::string_view text) { return parse_answer(text, severity()); }

VqaSample gold_sample(std::string id, int disease, std::string label) {
    VqaSample s;
    s.sample_id = std::move(id);
    s.case_id = "c";
    s.disease_id = disease;
    s.question = "q";
    s.answer_label = std::move(label);
    return s;
}

} // namespace

TEST_CASE("answer parsing cascade") {
    CHECK(parse("The diagnosis is: Severe.").label == "severe");
    CHECK(parse("SEVERE").label == "severe");
    CHECK(parse("").outcome == ParseOutcome::Empty);
    CHECK(parse(" \n\t").outcome == ParseOutcome::Empty);
    CHECK(parse("either mild or severe").outcome == ParseOutcome::Ambiguous);
    CHECK(parse("no idea").outcome == ParseOutcome::NoMatch);
    CHECK(parse("abnormal findings").outcome == ParseOutcome::NoMatch);
    CHECK(parse("mildly worrying").outcome == ParseOutcome::NoMatch);
    CHECK(parse("Healthy!").label == "normal");
    CHECK(parse("It looks very bad to me").label == "severe");
    CHECK(parse("severe, clearly severe").label == "severe");
    CHECK(parse("Answer: mild\nRationale: not severe because it is only mild").label == "mild");
    CHECK(parse("Reasoning first.\nAnswer: Normal.").label == "normal");
    CHECK(parse("Answer: unsure\nbut probably mild").label == "mild");
    CHECK(to_string(ParseOutcome::NoMatch) == "no-match");
}

TEST_CASE("worked example: gold [a,a,b,b], parsed [a,b,b,b]") {
    // Hand tally. Class a: TP 1, FP 0, FN 1. Class b: TP 2, FP 1, FN 0.
    const double p_a = 1.0, r_a = 0.5, p_b = 2.0 / 3.0, r_b = 1.0;
    const double f_a = 2 * p_a * r_a / (p_a + r_a), f_b = 2 * p_b * r_b / (p_b + r_b);
    CHECK(f_a == doctest::Approx(2.0 / 3.0));
    CHECK(f_b == doctest::Approx(0.8));
    const auto naive = oracle::naive_metrics({0, 0, 1, 1}, {0, 1, 1, 1}, 2);
    CHECK(naive.precision == doctest::Approx(5.0 / 6.0));

    const auto schema = oracle::letter_schema({2});
    const std::vector<VqaSample> gold = {gold_sample("1", 1, "a"), gold_sample("2", 1, "a"), gold_sample("3", 1, "b"),
                                         gold_sample("4", 1, "b")};
    const std::vector<Prediction> preds = {{"1", "a"}, {"2", "b"}, {"3", "b"}, {"4", "b"}};
    const auto r = compute_metrics(preds, gold, schema).report;
    CHECK(r.macro.accuracy == 0.75);
    CHECK(r.macro.precision == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(r.macro.recall == 0.75);
    CHECK(r.macro.f1 == doctest::Approx((f_a + f_b) / 2).epsilon(1e-15));
    CHECK(r.macro.f1 == doctest::Approx(0.7333).epsilon(1e-4));
    CHECK(r.macro.parsing_rate == 1.0);
    const auto& classes = r.per_disease.at(1).classes;
    REQUIRE(classes.size() == 2);
    CHECK(classes[0].precision == p_a);
    CHECK(classes[0].recall == r_a);
    CHECK(classes[1].precision == doctest::Approx(p_b).epsilon(1e-15));
    CHECK(classes[1].recall == r_b);
}

TEST_CASE("perfect predictions, missing predictions and partial parsing") {
    const auto schema = oracle::letter_schema({3, 2});
    std::vector<VqaSample> gold;
    std::vector<Prediction> preds;
    for (int i = 0; i < 12; ++i) {
        const int d = 1 + i % 2;
        const std::string label(1, static_cast<char>('a' + i % (d == 1 ? 3 : 2)));
        gold.push_back(gold_sample(std::to_string(i), d, label));
        preds.push_back({std::to_string(i), label});
    }
    const auto perfect = compute_metrics(preds, gold, schema).report;
    for (double v : {perfect.macro.accuracy, perfect.macro.f1, perfect.macro.precision, perfect.macro.recall,
                     perfect.macro.parsing_rate, perfect.pooled.accuracy, perfect.pooled.f1})
        CHECK(v == 1.0);

    const auto none = compute_metrics({}, gold, schema);
    CHECK(none.report.macro.parsing_rate == 0.0);
    CHECK(none.report.macro.accuracy == 0.0);
    for (const auto& a : none.audit) CHECK_FALSE(a.predicted);

    const std::vector<VqaSample> four = {gold_sample("1", 1, "a"), gold_sample("2", 1, "b"), gold_sample("3", 1, "c"),
                                         gold_sample("4", 1, "a")};
    const auto three_of_four = compute_metrics({{"1", "a"}, {"2", "c"}, {"3", "b"}, {"4", "?"}}, four, schema).report;
    CHECK(three_of_four.macro.parsing_rate == 0.75);
}

TEST_CASE("prediction id errors") {
    const auto schema = oracle::letter_schema({2});
    const std::vector<VqaSample> gold = {gold_sample("1", 1, "a")};
    CHECK_THROWS_WITH_AS(compute_metrics({{"9", "a"}}, gold, schema), doctest::Contains("UnknownSampleId"), Error);
    CHECK_THROWS_WITH_AS(compute_metrics({{"1", "a"}, {"1", "b"}}, gold, schema), doctest::Contains("DuplicatePrediction"),
                         Error);
}

TEST_CASE("metrics agree with a naive confusion tally") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = oracle::random_metrics_instance(seed);
        const auto eval = compute_metrics(inst.predictions, inst.gold, inst.schema);
        double acc = 0, p = 0, r = 0, f = 0, pr = 0;
        for (const auto& [d, gp] : inst.by_disease) {
            const auto naive = oracle::naive_metrics(gp.first, gp.second, inst.class_counts[static_cast<std::size_t>(d - 1)]);
            const auto& got = eval.report.per_disease.at(d);
            CHECK(std::abs(got.accuracy - naive.accuracy) <= 1e-12);
            CHECK(std::abs(got.macro_precision - naive.precision) <= 1e-12);
            CHECK(std::abs(got.macro_recall - naive.recall) <= 1e-12);
            CHECK(std::abs(got.macro_f1 - naive.f1) <= 1e-12);
            CHECK(std::abs(got.parsing_rate - naive.pr) <= 1e-12);
            CHECK(got.accuracy <= got.parsing_rate);
            acc += naive.accuracy;
            p += naive.precision;
            r += naive.recall;
            f += naive.f1;
            pr += naive.pr;
        }
        const double n = static_cast<double>(inst.by_disease.size());
        CHECK(std::abs(eval.report.macro.accuracy - acc / n) <= 1e-12);
        CHECK(std::abs(eval.report.macro.precision - p / n) <= 1e-12);
        CHECK(std::abs(eval.report.macro.recall - r / n) <= 1e-12);
        CHECK(std::abs(eval.report.macro.f1 - f / n) <= 1e-12);
        CHECK(std::abs(eval.report.macro.parsing_rate - pr / n) <= 1e-12);

        // Reordering predictions changes nothing.
        auto shuffled = inst.predictions;
        std::reverse(shuffled.begin(), shuffled.end());
        CHECK(report_to_json(compute_metrics(shuffled, inst.gold, inst.schema).report, inst.schema) ==
              report_to_json(eval.report, inst.schema));
    }
}

TEST_CASE("fixing an unparsable answer never lowers a metric") {
    for (std::uint64_t seed = 200; seed < 230; ++seed) {
        auto inst = oracle::random_metrics_instance(seed);
        const auto before = compute_metrics(inst.predictions, inst.gold, inst.schema);
        std::map<std::string, const VqaSample*> gold_by_id;
        for (const auto& g : inst.gold) gold_by_id[g.sample_id] = &g;
        for (const auto& a : before.audit) {
            if (a.parsed.parsable()) continue;
            auto preds = inst.predictions;
            std::erase_if(preds, [&](const Prediction& p) { return p.sample_id == a.sample_id; });
            preds.push_back({a.sample_id, a.gold});
            const auto after = compute_metrics(preds, inst.gold, inst.schema);
            const auto& x = before.report.per_disease.at(a.disease_id);
            const auto& y = after.report.per_disease.at(a.disease_id);
            CHECK(y.accuracy >= x.accuracy - 1e-15);
            CHECK(y.macro_precision >= x.macro_precision - 1e-15);
            CHECK(y.macro_recall >= x.macro_recall - 1e-15);
            CHECK(y.macro_f1 >= x.macro_f1 - 1e-15);
            CHECK(y.parsing_rate >= x.parsing_rate);
            break;
        }
    }
}

TEST_CASE("golden report for the committed fixture") {
    const auto eval = evaluate_run(kFixtures / "eval/predictions.jsonl", kFixtures / "eval/gold.jsonl", kFixtures / "eval/schema.json");
    const auto schema = load_schema(kFixtures / "eval/schema.json");
    CHECK(report_to_json(eval.report, schema) == oracle::read_text(kFixtures / "eval/expected_report.json"));
    CHECK(format_report_table(eval.report, schema) == oracle::read_text(kFixtures / "eval/expected_table.txt"));

    // The audit log reproduces the parsing counts.
    std::map<int, std::size_t> parsable;
    for (const auto& a : eval.audit) parsable[a.disease_id] += a.parsed.parsable();
    for (const auto& [d, dm] : eval.report.per_disease) CHECK(parsable[d] == dm.parsable);
    CHECK(audit_to_jsonl(eval.audit).find("\"outcome\":\"ambiguous\"") != std::string::npos);
}

TEST_CASE("prediction file format") {
    const auto preds = parse_predictions("{\"sample_id\":\"x\",\"generated_text\":\"mild\"}\n\n{\"sample_id\":\"y\",\"generated_text\":null}\n");
    REQUIRE(preds.size() == 2);
    CHECK(preds[1].generated_text.empty());
    CHECK(parse_predictions(prediction_to_json_line(preds[0]))[0].generated_text == "mild");
    CHECK_THROWS_AS(parse_predictions("{\"generated_text\":\"x\"}"), Error);
}
