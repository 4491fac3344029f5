#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "gmm/dataset.hpp"
#include "gmm/rng.hpp"

using namespace gmm;
namespace fs = std::filesystem;

namespace {

struct temp_dir {
    fs::path path;
    temp_dir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("gmm_dataset_test_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~temp_dir() { fs::remove_all(path); }
};

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& content) {
    const fs::path p = dir / name;
    std::ofstream out(p);
    out << content;
    return p;
}

dataset random_dataset(std::uint64_t seed, Eigen::Index m, Eigen::Index n) {
    auto rng = make_rng(seed);
    dataset ds;
    ds.name = "random";
    ds.X.resize(m, n);
    ds.y.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) ds.X(i, j) = gaussian(rng);
        ds.y(i) = uniform_real(rng) < 0.5 ? -1 : 1;
    }
    ds.y(0) = 1;
    ds.y(1) = -1;
    return ds;
}

}  // namespace

TEST_CASE("load_csv parses labels and features") {
    temp_dir tmp;
    const auto p = write_file(tmp.path, "basic.csv", "1,0.5,0.2\n-1,0.1,0.9\n1,0.3,0.3\n");
    const dataset ds = load_csv(p, 0, false);
    REQUIRE(ds.size() == 3);
    REQUIRE(ds.features() == 2);
    REQUIRE(ds.y(0) == 1);
    REQUIRE(ds.y(1) == -1);
    REQUIRE(ds.y(2) == 1);
    REQUIRE(ds.X(0, 0) == 0.5);
    REQUIRE(ds.X(1, 1) == 0.9);
    REQUIRE(ds.name == "basic");
}

TEST_CASE("load_csv remaps 0/1 labels") {
    temp_dir tmp;
    const auto p = write_file(tmp.path, "zeroone.csv", "0,1.0\n1,2.0\n0,3.0\n");
    const dataset ds = load_csv(p);
    REQUIRE(ds.y(0) == -1);
    REQUIRE(ds.y(1) == 1);
    REQUIRE(ds.y(2) == -1);
}

TEST_CASE("load_csv rejects mixed 0 and -1 labels") {
    temp_dir tmp;
    const auto p = write_file(tmp.path, "mixed.csv", "0,1.0\n-1,2.0\n");
    REQUIRE_THROWS_AS(load_csv(p), label_error);
}

TEST_CASE("load_csv rejects labels outside -1,0,1") {
    temp_dir tmp;
    const auto p = write_file(tmp.path, "bad_label.csv", "2,1.0\n-1,2.0\n");
    REQUIRE_THROWS_AS(load_csv(p), label_error);
}

TEST_CASE("load_csv reports arity mismatches with the line number") {
    temp_dir tmp;
    const auto p = write_file(tmp.path, "short_row.csv", "1,0.5,0.2\n1,0.5\n");
    try {
        load_csv(p);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        REQUIRE(e.line == 2);
        REQUIRE(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("load_csv rejects malformed numbers, empty files, blank lines") {
    temp_dir tmp;
    REQUIRE_THROWS_AS(load_csv(write_file(tmp.path, "nan.csv", "1,abc\n")), parse_error);
    REQUIRE_THROWS_AS(load_csv(write_file(tmp.path, "empty.csv", "")), data_error);
    REQUIRE_THROWS_AS(load_csv(write_file(tmp.path, "blank.csv", "1,2.0\n\n1,3.0\n")), parse_error);
    REQUIRE_THROWS_AS(load_csv(tmp.path / "missing.csv"), data_error);
}

TEST_CASE("load_csv header handling and label column placement") {
    temp_dir tmp;
    const auto p = write_file(tmp.path, "hdr.csv", "a,label,b\n0.5,1,0.2\n0.1,-1,0.9\n");
    const dataset ds = load_csv(p, 1, true);
    REQUIRE(ds.size() == 2);
    REQUIRE(ds.features() == 2);
    REQUIRE(ds.feature_names == std::vector<std::string>{"a", "b"});
    REQUIRE(ds.X(0, 0) == 0.5);
    REQUIRE(ds.X(0, 1) == 0.2);
    REQUIRE(ds.y(0) == 1);
    REQUIRE_THROWS_AS(load_csv(p, 7, true), parse_error);
}

TEST_CASE("csv round-trip is exact") {
    temp_dir tmp;
    dataset ds = random_dataset(31, 25, 4);
    ds.X(0, 0) = 1.0 / 3.0;  // value with no short decimal form
    ds.X(1, 2) = 1e-17;
    const auto p = tmp.path / "roundtrip.csv";
    write_csv(ds, p);
    const dataset back = load_csv(p);
    REQUIRE(back.size() == ds.size());
    REQUIRE(back.features() == ds.features());
    REQUIRE(back.X == ds.X);
    REQUIRE(back.y == ds.y);
}

TEST_CASE("csv round-trip with header and trailing label column") {
    temp_dir tmp;
    dataset ds = random_dataset(32, 10, 3);
    ds.feature_names = {"u", "v", "w"};
    const auto p = tmp.path / "labeled.csv";
    write_csv(ds, p, 3);
    const dataset back = load_csv(p, 3, true);
    REQUIRE(back.X == ds.X);
    REQUIRE(back.y == ds.y);
    REQUIRE(back.feature_names == ds.feature_names);
}

TEST_CASE("noise injection flips the rounded count, deterministically") {
    const dataset ds = random_dataset(33, 500, 3);
    const dataset noisy = inject_label_noise(ds, 0.10, 9);
    REQUIRE((noisy.y.array() != ds.y.array()).count() == 50);
    const dataset again = inject_label_noise(ds, 0.10, 9);
    REQUIRE(noisy.y == again.y);

    REQUIRE(inject_label_noise(ds, 0.0, 9).y == ds.y);
    REQUIRE((inject_label_noise(ds, 1.0, 9).y.array() != ds.y.array()).count() == 500);

    // round-half-up of fraction * m
    const dataset tiny = random_dataset(34, 10, 2);
    REQUIRE((inject_label_noise(tiny, 0.05, 1).y.array() != tiny.y.array()).count() == 1);
    REQUIRE((inject_label_noise(tiny, 0.04, 1).y.array() != tiny.y.array()).count() == 0);
}

TEST_CASE("noise injection is an involution on the flipped set") {
    const dataset ds = random_dataset(35, 120, 2);
    const dataset once = inject_label_noise(ds, 0.15, 4);
    const dataset twice = inject_label_noise(once, 0.15, 4);  // same seed flips the same indices
    REQUIRE(twice.y == ds.y);
}

TEST_CASE("noise fraction domain") {
    const dataset ds = random_dataset(36, 10, 2);
    REQUIRE_THROWS_AS(inject_label_noise(ds, -0.1, 0), domain_error);
    REQUIRE_THROWS_AS(inject_label_noise(ds, 1.1, 0), domain_error);
}

TEST_CASE("stratified subsample draws the exact per-class counts") {
    dataset ds = random_dataset(37, 100, 2);
    for (Eigen::Index i = 0; i < 100; ++i) ds.y(i) = i < 50 ? 1 : -1;
    const split_plan plan = stratified_subsample(ds, 25, 11);
    REQUIRE(plan.train_indices.size() == 50);
    REQUIRE(plan.test_indices.size() == 50);

    Eigen::Index pos = 0, neg = 0;
    for (const std::size_t i : plan.train_indices) (ds.y(static_cast<Eigen::Index>(i)) > 0 ? pos : neg)++;
    REQUIRE(pos == 25);
    REQUIRE(neg == 25);

    std::set<std::size_t> all(plan.train_indices.begin(), plan.train_indices.end());
    all.insert(plan.test_indices.begin(), plan.test_indices.end());
    REQUIRE(all.size() == 100);  // disjoint partition of [0, m)
    REQUIRE(*all.rbegin() == 99);

    const split_plan same = stratified_subsample(ds, 25, 11);
    REQUIRE(same.train_indices == plan.train_indices);
    const split_plan other = stratified_subsample(ds, 25, 12);
    REQUIRE(other.train_indices != plan.train_indices);
}

TEST_CASE("stratified subsample names the short class") {
    dataset ds = random_dataset(38, 60, 2);
    for (Eigen::Index i = 0; i < 60; ++i) ds.y(i) = i < 50 ? 1 : -1;
    try {
        stratified_subsample(ds, 30, 0);
        FAIL("expected capacity_error");
    } catch (const capacity_error& e) {
        REQUIRE(std::string(e.what()).find("negative class") != std::string::npos);
    }
}

TEST_CASE("loo splits cover every index exactly once") {
    const dataset ds = random_dataset(39, 5, 2);
    const auto plans = loo_splits(ds);
    REQUIRE(plans.size() == 5);
    std::set<std::size_t> held;
    for (const auto& plan : plans) {
        REQUIRE(plan.test_indices.size() == 1);
        REQUIRE(plan.train_indices.size() == 4);
        held.insert(plan.test_indices[0]);
        for (const std::size_t t : plan.train_indices) REQUIRE(t != plan.test_indices[0]);
    }
    REQUIRE(held.size() == 5);

    dataset one = random_dataset(40, 2, 2);
    one.X.conservativeResize(1, 2);
    one.y.conservativeResize(1);
    REQUIRE_THROWS_AS(loo_splits(one), domain_error);
}

TEST_CASE("subset extracts rows in order") {
    const dataset ds = random_dataset(41, 10, 3);
    const dataset sub = subset(ds, {2, 5, 7});
    REQUIRE(sub.size() == 3);
    REQUIRE(sub.X.row(0) == ds.X.row(2));
    REQUIRE(sub.X.row(2) == ds.X.row(7));
    REQUIRE(sub.y(1) == ds.y(5));
}

TEST_CASE("minmax scaler maps training data into the unit box") {
    const dataset ds = random_dataset(42, 30, 4);
    const auto scaler = minmax_scaler::fit(ds.X);
    const Eigen::MatrixXd S = scaler.apply(ds.X);
    REQUIRE(S.minCoeff() >= 0.0);
    REQUIRE(S.maxCoeff() <= 1.0);
    for (Eigen::Index c = 0; c < 4; ++c) {
        REQUIRE(S.col(c).minCoeff() == 0.0);
        REQUIRE(S.col(c).maxCoeff() == 1.0);
    }
}

TEST_CASE("minmax scaler sends constant features to zero") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 5, 2, 5, 3, 5;
    const auto scaler = minmax_scaler::fit(X);
    const Eigen::MatrixXd S = scaler.apply(X);
    REQUIRE(S.col(1).isZero(0.0));
    REQUIRE(S(2, 0) == 1.0);
    REQUIRE_THROWS_AS(scaler.apply(Eigen::MatrixXd::Zero(2, 3)), domain_error);
}

TEST_CASE("dataset validation") {
    dataset ds = random_dataset(43, 5, 2);
    ds.y(2) = 0;
    REQUIRE_THROWS_AS(ds.validate(), label_error);
    ds.y(2) = 1;
    ds.y.conservativeResize(4);
    REQUIRE_THROWS_AS(ds.validate(), data_error);
}
