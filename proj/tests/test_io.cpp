#include "mfgsens/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <ios>

using namespace mfgsens;

TEST_CASE("params and grid survive a json round trip") {
    ModelParams p;
    p.sigma = 0.7;
    p.xi = TimeProfile::smooth_bump(0.4);
    p.M = FunctionSpec::gamma4(1.3);
    const ModelParams q = params_from_json(to_json(p));
    CHECK(q.sigma == 0.7);
    CHECK(q.xi.family == TimeProfile::Family::smooth_bump);
    CHECK(q.xi.params == p.xi.params);
    CHECK(q.M.params == p.M.params);
    CHECK(q.uT.family == p.uT.family);

    const auto d = Discretization::make(9, 2, 30, 40);
    CHECK(disc_from_json(to_json(d)) == d);
    CHECK(to_json(SolveOptions{}).at("tol") == 1e-8);
}

TEST_CASE("text and field files") {
    const auto dir = std::filesystem::temp_directory_path() / "mfgsens_io_test";
    std::filesystem::create_directories(dir);
    write_text(dir / "a.txt", "hello\n");
    CHECK(read_text(dir / "a.txt") == "hello\n");
    CHECK_THROWS_AS(read_text(dir / "absent.txt"), std::ios_base::failure);
    CHECK_THROWS_AS(write_text(dir / "no" / "such" / "dir.txt", "x"), std::ios_base::failure);

    const auto d = Discretization::make(1, 1, 8, 8);
    Field f(d, 0.1);
    write_field(dir / "f.csv", f);
    CHECK(sup_distance(read_field(dir / "f.csv", d), f) == 0.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("dump ends with a newline") {
    CHECK(dump(nlohmann::json{{"a", 1}}) == "{\n  \"a\": 1\n}\n");
}
