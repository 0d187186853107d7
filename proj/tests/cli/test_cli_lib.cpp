#include <doctest.h>

#include <atomic>
#include <string>

#include "cli.hpp"
#include "spectral/error.hpp"

using namespace spectral;
using namespace spectral::cli;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
    std::size_t c = 0;
    for (std::size_t p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++c;
    return c;
}

}  // namespace

TEST_CASE("config resolution") {
    const Json def = pca_defaults();
    const Json file = {{"d", 6}, {"tau", 10}};
    const Json over = {{"tau", 20}};
    const Json r = resolve_config(def, file, over);
    CHECK(r["d"] == 6);
    CHECK(r["tau"] == 20);
    CHECK(r["k"] == def["k"]);

    CHECK_THROWS_AS(resolve_config(def, Json{{"bogus", 1}}, Json()), Error);
    CHECK_THROWS_AS(resolve_config(def, Json{{"d", "four"}}, Json()), Error);
    CHECK_THROWS_AS(resolve_config(def, Json{{"d", -3}}, Json()), Error);
    CHECK_THROWS_AS(resolve_config(def, Json{{"schema", "gmm.v1"}}, Json()), Error);
    CHECK_THROWS_AS(resolve_config(def, Json::array(), Json()), Error);
    CHECK(resolve_config(gmm_defaults(), Json{{"sep", 2}}, Json())["sep"] == 2);
}

TEST_CASE("every subcommand declares a schema") {
    for (const Json& d : {pca_defaults(), gmm_defaults(), construct_defaults(), train_defaults(), gradcheck_defaults()}) {
        CHECK(d.contains("schema"));
        CHECK(d["schema"].get<std::string>().find(".v1") != std::string::npos);
    }
}

TEST_CASE("csv table") {
    CsvTable t({"a", "b"});
    t.add({"1", "2"});
    CHECK(t.str() == "a,b\n1,2\n");
    CHECK_THROWS_AS(t.add({"1"}), Error);
    CHECK(fmt(0.1) == "0.10000000000000001");
}

TEST_CASE("parallel_for covers every index once and propagates errors") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 7) throw Error(ErrorKind::DegenerateData, "boom");
                    }),
                    Error);
}

TEST_CASE("svg plot") {
    const std::vector<Series> s{{"one", {0, 1}, {0, 1}}};
    const std::string a = render_svg_plot(s), b = render_svg_plot(s);
    CHECK(a == b);
    CHECK(a.rfind("<?xml", 0) == 0);
    CHECK(count(a, "<polyline") == 1);

    const std::vector<Series> four{{"a", {1, 2}, {1, 2}}, {"b", {1, 2}, {2, 3}}, {"c<&>", {1, 2}, {3, 1}},
                                   {"d", {1, 2}, {0.5, 0.5}}};
    PlotOptions o;
    o.log_x = true;
    const std::string f = render_svg_plot(four, o);
    CHECK(count(f, "<polyline") == 4);
    CHECK(f.find("c&lt;&amp;&gt;") != std::string::npos);

    CHECK_THROWS_AS(render_svg_plot({}), Error);
    CHECK_THROWS_AS(render_svg_plot({{"e", {}, {}}}), Error);
    CHECK_THROWS_AS(render_svg_plot({{"n", {0, 1}, {0, NAN}}}), Error);
    CHECK_THROWS_AS(render_svg_plot({{"l", {0, 1}, {1, 2}}}, o), Error);
    try {
        render_svg_plot({});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptySeries);
    }
}
