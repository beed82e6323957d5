#include "catch_amalgamated.hpp"

#include "comad/dataset.hpp"
#include "comad/error.hpp"
#include "comad/eval.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "json.hpp"

#include <fstream>
#include <random>
#include <sstream>

using namespace comad;
using Catch::Matchers::WithinAbs;
using json = nlohmann::json;

TEST_CASE("auroc matches the pairwise oracle", "[auroc]") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 300; ++trial) {
        std::uniform_int_distribution<int> n_d(2, 120);
        const int n = n_d(rng);
        std::vector<double> s(n);
        std::vector<char> l(n);
        std::normal_distribution<double> g(0, 1);
        std::bernoulli_distribution coin(0.4);
        for (int i = 0; i < n; ++i) {
            l[i] = coin(rng) ? 1 : 0;
            s[i] = trial % 3 == 0 ? std::round(g(rng) * 2) : g(rng) + 0.5 * l[i];
        }
        l[0] = 0;
        l[1] = 1;
        REQUIRE_THAT(auroc(s, l), WithinAbs(oracle::auroc_pairwise(s, l), 1e-12));
    }
}

TEST_CASE("auroc edge cases", "[auroc]") {
    const std::vector<double> s{1, 2, 3, 4};
    CHECK(auroc(s, std::vector<char>{0, 0, 1, 1}) == 1.0);
    CHECK(auroc(s, std::vector<char>{1, 1, 0, 0}) == 0.0);
    CHECK(auroc(std::vector<double>{5, 5, 5, 5}, std::vector<char>{0, 1, 0, 1}) == 0.5);
    CHECK_THROWS_AS(auroc(s, std::vector<char>{0, 0, 0, 0}), InvalidArgument);
    CHECK_THROWS_AS(auroc(s, std::vector<char>{0, 1}), InvalidArgument);
}

TEST_CASE("summaries per kind and category", "[eval]") {
    std::vector<ImageRecord> recs{
        {"n1", false, "good", "", 0, 0, 1.0, false},
        {"n2", false, "good", "", 0, 0, 2.0, false},
        {"a1", true, "missing", "logical", 0, 0, 3.0, true},
        {"a2", true, "scratch", "structural", 0, 0, 1.5, false},
    };
    const auto r = summarize(recs);
    CHECK(r.normals == 2);
    CHECK(r.anomalies == 2);
    CHECK_THAT(r.overall, WithinAbs(0.75, 1e-12));
    REQUIRE(r.kinds.size() == 2);
    CHECK(r.kinds[0].kind == "missing");
    CHECK(r.kinds[0].auroc == 1.0);
    CHECK(r.kinds[1].kind == "scratch");
    CHECK(r.kinds[1].auroc == 0.5);
    CHECK(r.kinds[1].category == "structural");
    CHECK(r.categories.at("logical") == 1.0);
    CHECK(r.categories.at("structural") == 0.5);

    const auto j = json::parse(benchmark_to_json(r, true));
    CHECK(j["auroc"] == 0.75);
    CHECK(j["records"].size() == 4);
    CHECK(j["kinds"][0]["kind"] == "missing");

    std::istringstream lines(records_to_jsonl(r.records));
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
        const auto rec = json::parse(line);
        CHECK(rec.contains("id"));
        CHECK(rec.contains("D"));
        ++count;
    }
    CHECK(count == 4);
    CHECK(format_table(r).find("overall") != std::string::npos);

    recs.resize(2);
    CHECK_THROWS_AS(summarize(recs), DataError);
}

TEST_CASE("benchmark on a generated dataset", "[eval]") {
    const auto& setup = fixture::small_setup();
    const auto items = fixture::eval_items(setup.dataset);
    std::size_t calls = 0;
    const auto r = run_benchmark(setup.model, {}, items, nullptr, [&](std::size_t done, std::size_t total) {
        CHECK(done <= total);
        ++calls;
        return true;
    });
    CHECK(calls == items.size());
    CHECK(r.records.size() == items.size());
    CHECK(r.normals == 6);
    CHECK(r.anomalies == 12);
    for (std::size_t i = 0; i < items.size(); ++i) {
        CHECK(r.records[i].id == items[i].key);
    }
    CHECK(r.categories.count("logical") == 1);

    CHECK_THROWS_AS(run_benchmark(setup.model, {}, items, nullptr, [](std::size_t done, std::size_t) { return done < 3; }),
                    Cancelled);
}

TEST_CASE("dataset loading", "[eval][dataset]") {
    fixture::TempDir dir;
    const auto ds = gen_product_dataset(fixture::product_spec(3, 2, 1, 7));
    write_product_dataset(ds, dir.path());
    const auto d = load_dataset(dir.path());
    CHECK(d.train.size() == 3);
    CHECK(d.test.size() == 2 + 4);
    CHECK(d.category("missing") == "logical");
    CHECK(d.category("unknown") == "unspecified");
    for (const auto& s : d.test) {
        CHECK(s.anomalous == (s.kind != "good"));
        CHECK(s.key.rfind("test/" + s.kind + "/", 0) == 0);
    }

    const auto& setup = fixture::small_setup();
    const auto r = run_benchmark(setup.model, {}, d);
    CHECK(r.records.size() == 6);

    CHECK_THROWS_AS(load_dataset(dir.path() / "missing"), IoError);
    std::ofstream(dir.path() / "kinds.json") << "{broken";
    CHECK_THROWS_AS(load_dataset(dir.path()), DataError);

    fixture::TempDir empty;
    CHECK_THROWS_AS(run_benchmark(setup.model, {}, load_dataset(empty.path())), DataError);
}
