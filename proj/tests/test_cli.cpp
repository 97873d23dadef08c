#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dqpt/cli.hpp"

using namespace dqpt;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("dqpt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

int run_cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::vector<const char*> argv{"dqpt"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), err);
  if (err_text) *err_text = err.str();
  return code;
}

struct Csv {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Csv read_csv(const fs::path& p) {
  Csv c;
  std::istringstream in(io::read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) {
      c.comments.push_back(line);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (c.header.empty()) {
      c.header = cells;
      continue;
    }
    std::vector<double> row;
    for (const auto& x : cells) row.push_back(std::stod(x));
    c.rows.push_back(row);
  }
  return c;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string text = io::read_file(e.path());
    if (e.path().filename() == "manifest.json") {
      auto j = io::json::parse(text);
      j.erase("wall_time");  // the only field allowed to differ between runs
      std::vector<std::string> names;
      for (const auto& o : j["outputs"]) names.push_back(fs::path(o.get<std::string>()).filename().string());
      j["outputs"] = names;
      text = j.dump();
    }
    out[e.path().filename().string()] = text;
  }
  return out;
}

const char* kRateConfig =
    "# comb return rate\n"
    "[spectrum]\n"
    "kind = comb\n"
    "n_modes = 1000\n"
    "alpha = 0\n"
    "[grid]\n"
    "start = 0\n"
    "end = 3\n"
    "points = 3000\n";

}  // namespace

TEST(Config, ParsesSectionsCommentsAndLists) {
  const auto c = io::Config::parse("top = 1\n[a]\n x = 1.5 # note\n y = 1, 2, 3\n\n[b]\nflag = true\nn = 1e6\n");
  EXPECT_EQ(c.get_int("top"), 1);
  EXPECT_EQ(c.get_double("a.x"), 1.5);
  EXPECT_EQ(c.get_doubles("a.y"), (std::vector<double>{1, 2, 3}));
  EXPECT_TRUE(c.get_bool("b.flag"));
  EXPECT_EQ(c.get_int("b.n"), 1000000);
  EXPECT_EQ(c.get_double("missing", 2.0), 2.0);
  EXPECT_THROW(c.get_double("nothere"), ConfigError);
}

TEST(Config, Errors) {
  EXPECT_THROW(io::Config::parse("[a\nx=1\n"), ConfigError);
  EXPECT_THROW(io::Config::parse("x 1\n"), ConfigError);
  EXPECT_THROW(io::Config::parse("x = 1\nx = 2\n"), ConfigError);
  EXPECT_THROW(io::Config::parse("x = abc\n").get_double("x"), ConfigError);
  EXPECT_THROW(io::Config::load("/nonexistent/file.cfg"), ConfigError);
}

TEST(Config, HashDeterministicAndSensitive) {
  auto hash_of = [](const std::string& text) {
    const auto c = io::Config::parse(text);
    c.get_double("a.x");
    return io::config_hash(c);
  };
  EXPECT_EQ(hash_of("[a]\nx = 1\n"), hash_of("# comment\n[a]\nx=1\n"));
  EXPECT_NE(hash_of("[a]\nx = 1\n"), hash_of("[a]\nx = 2\n"));
  EXPECT_EQ(io::fnv1a_hex("").size(), 16u);
}

TEST(Csv, RendersMetadataHeaderAndRows) {
  io::CsvTable t;
  t.metadata = {{"config_hash", "abc"}};
  t.header = {"x", "y"};
  t.columns = {{0.0, 0.5}, {1.0, 0.1}};
  EXPECT_EQ(t.render(), "# config_hash: abc\nx,y\n0,1\n0.5,0.10000000000000001\n");
}

TEST(SpectrumJson, RoundTrip) {
  const auto s = build_comb_spectrum(17, 1.3, -1.0, 2.0);
  const auto back = io::spectrum_from_json(io::spectrum_to_json(s));
  EXPECT_EQ(back.frequencies(), s.frequencies());
  EXPECT_EQ(back.couplings(), s.couplings());
  EXPECT_EQ(back.kind(), s.kind());
  EXPECT_EQ(back.period_hint(), s.period_hint());
  EXPECT_THROW(io::spectrum_from_json(io::json{{"kind", "comb"}}), ConfigError);
}

TEST(Cli, RateProducesFullGrid) {
  TempDir d;
  write(d.path() / "rate.cfg", kRateConfig);
  const auto out = d.path() / "out";
  ASSERT_EQ(run_cli({"rate", "--config", (d.path() / "rate.cfg").string(), "--out", out.string()}), 0);
  const auto csv = read_csv(out / "rate_N1000_alpha0.csv");
  EXPECT_EQ(csv.header, (std::vector<std::string>{"t", "gamma", "d1", "d2"}));
  ASSERT_EQ(csv.rows.size(), 3000u);
  EXPECT_NEAR(csv.rows[0][1], 0.0, 1e-12);
  bool has_hash = false;
  for (const auto& c : csv.comments) has_hash |= c.rfind("# config_hash: ", 0) == 0;
  EXPECT_TRUE(has_hash);
  const auto side = io::json::parse(io::read_file(out / "rate_N1000_alpha0.json"));
  EXPECT_EQ(side["resolved_config"]["grid.points"], "3000");
  const auto manifest = io::json::parse(io::read_file(out / "manifest.json"));
  EXPECT_EQ(manifest["subcommand"], "rate");
  for (const auto& p : manifest["outputs"]) {
    ASSERT_TRUE(fs::exists(p.get<std::string>()));
    EXPECT_GT(fs::file_size(p.get<std::string>()), 0u);
  }
}

TEST(Cli, ThermalCoherenceBelowZeroTemperature) {
  TempDir d;
  write(d.path() / "rate.cfg", std::string(kRateConfig) + "[thermal]\nn_th = 0, 10\n");
  const auto out = d.path() / "out";
  ASSERT_EQ(run_cli({"rate", "--config", (d.path() / "rate.cfg").string(), "--out", out.string(), "--workers", "3"}), 0);
  const auto cold = read_csv(out / "rate_N1000_alpha0_nth0.csv");
  const auto hot = read_csv(out / "rate_N1000_alpha0_nth10.csv");
  ASSERT_EQ(hot.header.back(), "coherence");
  ASSERT_EQ(cold.rows.size(), hot.rows.size());
  for (std::size_t i = 0; i < hot.rows.size(); ++i) EXPECT_LE(hot.rows[i].back(), cold.rows[i].back()) << i;
}

TEST(Cli, ByteIdenticalReruns) {
  TempDir d;
  write(d.path() / "f.cfg",
        "[spectrum]\nkind = comb\nn_modes = 100\nalpha = 0, -1\n[fisher]\nre_min = 0.5\nre_max = 1.5\nim_min = -0.05\n"
        "im_max = 0.05\n");
  const auto cfg = (d.path() / "f.cfg").string();
  ASSERT_EQ(run_cli({"fisher", "--config", cfg, "--out", (d.path() / "a").string(), "--workers", "1"}), 0);
  ASSERT_EQ(run_cli({"fisher", "--config", cfg, "--out", (d.path() / "b").string(), "--workers", "4"}), 0);
  const auto a = snapshot(d.path() / "a");
  const auto b = snapshot(d.path() / "b");
  EXPECT_EQ(a.size(), 7u);
  EXPECT_EQ(a, b);
  const auto cross = read_csv(d.path() / "a" / "crossings_N100_alpha0.csv");
  EXPECT_EQ(cross.header, (std::vector<std::string>{"branch", "t_crossing", "im_z"}));
}

TEST(Cli, SyntheticSeedIsReproducible) {
  TempDir d;
  write(d.path() / "s.cfg", "[scaling]\nmode = synthetic\nexponent = 1.5\nnoise = 0.01\nwindow_low = 1e-4\nwindow_high = 1e-2\n");
  const auto cfg = (d.path() / "s.cfg").string();
  ASSERT_EQ(run_cli({"scaling", "--config", cfg, "--out", (d.path() / "a").string(), "--seed", "7"}), 0);
  ASSERT_EQ(run_cli({"scaling", "--config", cfg, "--out", (d.path() / "b").string(), "--seed", "7"}), 0);
  ASSERT_EQ(run_cli({"scaling", "--config", cfg, "--out", (d.path() / "c").string(), "--seed", "8"}), 0);
  EXPECT_EQ(io::read_file(d.path() / "a" / "synthetic.csv"), io::read_file(d.path() / "b" / "synthetic.csv"));
  EXPECT_NE(io::read_file(d.path() / "a" / "synthetic.csv"), io::read_file(d.path() / "c" / "synthetic.csv"));
}

TEST(Cli, MissingConfigExitsTwoWithoutOutput) {
  TempDir d;
  const auto out = d.path() / "never";
  std::string err;
  EXPECT_EQ(run_cli({"rate", "--config", (d.path() / "missing.cfg").string(), "--out", out.string()}, &err), 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_NE(err.find("config"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitTwo) {
  TempDir d;
  write(d.path() / "bad.cfg", std::string(kRateConfig) + "[spectrum2]\ntypo = 1\n");
  EXPECT_EQ(run_cli({"rate", "--config", (d.path() / "bad.cfg").string(), "--out", (d.path() / "o").string()}), 2);
  write(d.path() / "kind.cfg", "[spectrum]\nkind = ohmic\nn_modes = 10\n[grid]\nend = 1\npoints = 10\n");
  EXPECT_EQ(run_cli({"rate", "--config", (d.path() / "kind.cfg").string(), "--out", (d.path() / "o").string()}), 2);
  EXPECT_EQ(run_cli({"rate"}), 2);
  EXPECT_EQ(run_cli({"nosuchcommand"}), 2);
}

TEST(Cli, UnwritableOutputExitsThree) {
  TempDir d;
  write(d.path() / "rate.cfg", kRateConfig);
  write(d.path() / "blocker", "x");
  EXPECT_EQ(run_cli({"rate", "--config", (d.path() / "rate.cfg").string(), "--out", (d.path() / "blocker" / "sub").string()}),
            3);
}

TEST(Cli, DegenerateRegionExitsFour) {
  TempDir d;
  write(d.path() / "f.cfg",
        "[spectrum]\nkind = comb\nn_modes = 100\nalpha = 0\n[fisher]\nre_min = 1\nre_max = 1\nim_min = -0.05\nim_max = 0.05\n");
  std::string err;
  EXPECT_EQ(run_cli({"fisher", "--config", (d.path() / "f.cfg").string(), "--out", (d.path() / "o").string()}, &err), 4);
  EXPECT_NE(err.find("region"), std::string::npos);
}

TEST(Cli, OverflowGuardExitsFour) {
  TempDir d;
  write(d.path() / "f.cfg",
        "[spectrum]\nkind = comb\nn_modes = 1000\nalpha = 0\n[fisher]\nre_min = 0.5\nre_max = 1.5\nim_min = -0.2\nim_max = 0.2\n");
  EXPECT_EQ(run_cli({"fisher", "--config", (d.path() / "f.cfg").string(), "--out", (d.path() / "o").string()}), 4);
}

TEST(Cli, MembraneTableAndGeomphase) {
  TempDir d;
  write(d.path() / "m.cfg", "[membrane]\npreset = hbn\nfundamental_hz = 20e6\nn_modes = 20\n");
  ASSERT_EQ(run_cli({"membrane", "--config", (d.path() / "m.cfg").string(), "--out", d.path().string()}), 0);
  const auto table = read_csv(d.path() / "membrane_modes.csv");
  EXPECT_EQ(table.header, (std::vector<std::string>{"n", "zeta", "omega_rad_s", "mass_kg", "xzpf_m", "lambda_rad_s"}));
  ASSERT_EQ(table.rows.size(), 20u);
  EXPECT_NEAR(table.rows[0][2] / (2 * std::numbers::pi), 20e6, 20.0);

  write(d.path() / "g.cfg", "[spectrum]\nkind = comb\nn_modes = 50\nalpha = 0\n[grid]\nend = 1\npoints = 11\n");
  ASSERT_EQ(run_cli({"geomphase", "--config", (d.path() / "g.cfg").string(), "--out", d.path().string(),
                     "--include-linear"}),
            0);
  const auto g = read_csv(d.path() / "geomphase_N50_alpha0.csv");
  ASSERT_EQ(g.rows.size(), 11u);
  EXPECT_GT(g.rows.back()[1], 0.0);
}

TEST(Cli, ShippedPresetsParse) {
  // Every preset must load and declare a spectrum kind or a mode.
  const fs::path dir = fs::path(DQPT_SOURCE_DIR) / "configs";
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".cfg") continue;
    ++n;
    EXPECT_NO_THROW(io::Config::load(e.path())) << e.path();
  }
  EXPECT_GE(n, 10u);
}
