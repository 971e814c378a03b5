#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "csv.hpp"

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "susbench");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = sbcli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

sbcli::CsvTable table(const std::string& text) {
  std::istringstream is(text);
  return sbcli::parse_csv(is);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("susbench_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("fmt gives the shortest round-tripping decimal") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> expo(-300.0, 300.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::pow(10.0, expo(rng)) * (i % 2 ? -1.0 : 1.0);
    const std::string s = sbcli::fmt(x);
    CHECK(std::stod(s) == x);
  }
  CHECK(sbcli::fmt(0.1) == "0.1");
  CHECK(sbcli::fmt(std::uint64_t{42}) == "42");
  CHECK(sbcli::fmt(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(sbcli::fmt(std::optional<double>{}).empty());
}

TEST_CASE("csv writer output parses back to the same cells") {
  const std::vector<std::vector<std::string>> rows{
      {"a", "b", "c"}, {"plain", "with,comma", "with \"quote\""}, {"multi\nline", "", "x;y"}};
  std::ostringstream os;
  sbcli::CsvWriter w(os);
  for (const auto& r : rows) w.row(r);
  const auto t = table(os.str());
  CHECK(t.header == rows[0]);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0] == rows[1]);
  CHECK(t.rows[1] == rows[2]);
  CHECK(table("a,b\r\n1,2\r\n").rows.at(0).at(1) == "2");
  CHECK_THROWS(table("a,b\n1,2,3\n"));
  CHECK_THROWS(table("a\n\"open\n"));
  CHECK_THROWS(table("a,b\n1,2\n").column("z"));
}

TEST_CASE("split and join of number lists") {
  const std::vector<double> v{0.1, 1e-300, 3.0};
  CHECK(sbcli::split_numbers(sbcli::join(v, ';'), ';') == v);
  CHECK(sbcli::split_numbers("", ';').empty());
  CHECK_THROWS(sbcli::split_numbers("1;x", ';'));
}

TEST_CASE("exit codes") {
  CHECK(cli({}).code == sbcli::kBadArguments);
  CHECK(cli({"estimate", "--bogus"}).code == sbcli::kBadArguments);
  CHECK(cli({"estimate", "--method", "nope"}).code == sbcli::kBadArguments);
  CHECK(cli({"estimate", "--p0", "1.5", "--runs", "1"}).code == sbcli::kBadArguments);
  CHECK(cli({"estimate", "--param", "beta"}).code == sbcli::kBadArguments);
  CHECK(cli({"estimate", "--lsf", "no-such-lsf"}).code == sbcli::kUnknownLsf);
  CHECK(cli({"estimate", "--lsf", "metaball", "--method", "exact"}).code == sbcli::kRuntimeFailure);
  CHECK(cli({"estimate", "--out", "/nonexistent-dir/x.csv", "--method", "exact"}).code == sbcli::kRuntimeFailure);
  CHECK(cli({"diagnose", "--in", "/nonexistent-file.csv", "--out", "x"}).code == sbcli::kBadArguments);
  CHECK(cli({"fit"}).code == sbcli::kBadArguments);
  const auto help = cli({"--help"});
  CHECK(help.code == sbcli::kOk);
  CHECK(help.out.find("estimate") != std::string::npos);
}

TEST_CASE("estimate exact and second-order for the product limit state") {
  const auto exact = cli({"estimate", "--method", "exact", "--param", "beta=3"});
  REQUIRE(exact.code == 0);
  const auto t = table(exact.out);
  const double p = std::stod(t.rows.at(0).at(t.column("probability")));
  CHECK(p == doctest::Approx(1.8681064260574164e-3).epsilon(1e-9));
  CHECK(exact.err.find("exact=") != std::string::npos);

  const auto sorm = cli({"estimate", "--method", "sorm", "--param", "beta=3", "--quiet"});
  REQUIRE(sorm.code == 0);
  CHECK(sorm.err.empty());
  const auto s = table(sorm.out);
  REQUIRE(s.rows.size() == 3);
  CHECK(s.rows[0][s.column("det")] == "2");
  const double total = std::stod(s.rows[2][s.column("probability")]);
  const double expected = std::sqrt(2.0) * 0.5 * std::erfc(3.0 / std::sqrt(2.0));
  CHECK(total == doctest::Approx(expected).epsilon(1e-9));
  CHECK(std::abs(total / p - 1.0) < 0.1);
}

TEST_CASE("subset simulation output is byte-identical for equal seeds") {
  const std::vector<std::string> args{"estimate", "--runs", "4", "--seed", "99", "--samples", "300"};
  const auto a = cli(args);
  const auto b = cli(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.err == b.err);
  const auto t = table(a.out);
  CHECK(t.rows.size() == 4);
  for (const auto& r : t.rows) {
    const auto cond = sbcli::split_numbers(r[t.column("conditional_estimates")], ';');
    double prod = 1.0;
    for (double c : cond) prod *= c;
    CHECK(std::stod(r[t.column("estimate")]) == doctest::Approx(prod).epsilon(1e-12));
    CHECK(cond.size() == std::stoul(r[t.column("levels")]));
  }
  auto other = args;
  other[4] = "100";
  CHECK(cli(other).out != a.out);
}

TEST_CASE("monte carlo estimate through the command line") {
  const auto r = cli({"estimate", "--method", "mc", "--samples", "200000", "--param", "beta=2", "--seed", "5"});
  REQUIRE(r.code == 0);
  const auto t = table(r.out);
  const double p = std::stod(t.rows.at(0).at(t.column("estimate")));
  const double ref = 3.0914444737796121e-2;
  const double se = std::sqrt(ref * (1 - ref) / 200000.0);
  CHECK(std::abs(p - ref) < 4.0 * se);
}

TEST_CASE("diagnose reads an estimate file and writes its reports") {
  const auto dir = scratch("diagnose");
  const auto est = (dir / "est.csv").string();
  REQUIRE(cli({"estimate", "--runs", "30", "--seed", "3", "--out", est, "--quiet"}).code == 0);
  const auto r = cli({"diagnose", "--in", est, "--out", (dir / "d").string(), "--quiet"});
  REQUIRE(r.code == 0);
  const auto norm = table(slurp(dir / "d_normality.csv"));
  REQUIRE(norm.rows.size() == 2);
  CHECK(norm.rows[1][norm.column("scale")] == "log10");
  const double lo = std::stod(norm.rows[1][norm.column("ci95_lower")]);
  const double hi = std::stod(norm.rows[1][norm.column("ci95_upper")]);
  CHECK(lo < 3.698e-4);
  CHECK(hi > 3.698e-4);
  const auto qq = table(slurp(dir / "d_qq.csv"));
  CHECK(qq.rows.size() == 60);
  const auto cov = table(slurp(dir / "d_cov_summary.csv"));
  CHECK(std::stod(cov.rows.at(0).at(cov.column("combined_cov"))) > 0.0);
  const auto& c = cov.rows.at(0);
  CHECK(std::stoul(c.at(cov.column("runs_used"))) + std::stoul(c.at(cov.column("runs_excluded"))) == 30);
  CHECK(std::stoul(c.at(cov.column("runs_used"))) > 15);
}

TEST_CASE("fit from a file recovers a synthetic curve") {
  const auto dir = scratch("fit");
  {
    std::ofstream f(dir / "pts.csv");
    f.precision(17);
    f << "beta,estimate\n";
    for (double b : {2.0, 3.0, 4.0, 5.0}) f << b << ',' << 1.7 * std::pow(b, 0.5) * 0.5 * std::erfc(b / std::sqrt(2.0)) << '\n';
  }
  const auto r = cli({"fit", "--input", (dir / "pts.csv").string(), "--out", (dir / "f").string(), "--quiet"});
  REQUIRE(r.code == 0);
  const auto fit = table(slurp(dir / "f_fit.csv"));
  CHECK(std::stod(fit.rows.at(0).at(fit.column("c"))) == doctest::Approx(1.7).epsilon(1e-9));
  CHECK(std::stod(fit.rows.at(0).at(fit.column("b"))) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(table(slurp(dir / "f_curve.csv")).rows.size() > 10);
  CHECK(table(slurp(dir / "f_points.csv")).rows.size() == 4);
}

TEST_CASE("gallery writes one summary row per catalog entry") {
  const auto dir = scratch("gallery");
  const auto r = cli({"gallery", "--out", dir.string(), "--runs", "3", "--samples", "300", "--quiet"});
  REQUIRE(r.code == 0);
  const auto s = table(slurp(dir / "summary.csv"));
  CHECK(s.rows.size() == 8);
  for (const auto& row : s.rows) {
    CHECK(std::filesystem::exists(dir / (row[0] + ".csv")));
    CHECK(std::filesystem::exists(dir / (row[0] + "_points.csv")));
    CHECK(std::filesystem::exists(dir / (row[0] + "_centroids.csv")));
    CHECK(row[s.column("flag")] != "FAILED");
  }
}
