#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tdrom/cae.hpp"
#include "tdrom/cli.hpp"
#include "tdrom/config.hpp"
#include "tdrom/error.hpp"
#include "tdrom/metrics.hpp"
#include "tdrom/rom.hpp"

using namespace tdrom;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"([data]
nlat = 17
nlon = 24
steps = 160
seed = 3

[cae]
stem = 4
stages = 8, 8
latent_channels = 2
reduction = 2

[train]
epochs = 2
batch_size = 16
learning_rate = 3e-3

[pod]
k = 8
sweep = 1, 4, 8

[rom]
d = 2

[experiment]
num_starts = 3
horizon = 6
delay_list = 1, 2
)";

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tdrom");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

struct Workdir {
  fs::path dir;
  Workdir() {
    dir = fs::temp_directory_path() / "tdrom_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "small.ini") << kSmallConfig;
  }
  std::string operator()(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("config parsing validates every key") {
  const RunConfig c = parse_config(kSmallConfig);
  CHECK(c.data.nlat == 17);
  CHECK(c.arch.nlat == 17);
  CHECK(c.arch.stage_channels == std::vector<std::size_t>{8, 8});
  CHECK(c.train.learning_rate == 3e-3);
  CHECK(c.delay_list == std::vector<std::size_t>{1, 2});

  // format -> parse is the identity on every field it prints
  const RunConfig back = parse_config(format_config(c));
  CHECK(format_config(back) == format_config(c));
  CHECK(format_config(parse_config(format_config(RunConfig{}))) == format_config(RunConfig{}));

  CHECK_THROWS_WITH_AS(parse_config("[data]\nnlatt = 9\n"), doctest::Contains("data.nlatt"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[model]\nstem = 9\n"), doctest::Contains("model.stem"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[data]\nnlat = 4\n"), doctest::Contains("data.nlat"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[data]\nnlon = -3\n"), doctest::Contains("data.nlon"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[train]\nlearning_rate = fast\n"), doctest::Contains("train.learning_rate"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[cae]\ncbam = maybe\n"), doctest::Contains("cae.cbam"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[pod]\nsweep = 5, 2\n"), doctest::Contains("pod.sweep"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nkind = future\n"), doctest::Contains("in_window"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nunits = kelvin\n"), doctest::Contains("experiment.units"),
                       ConfigError);
  CHECK_THROWS_AS(parse_config("[data]\nnlon = 30\n"), ConfigError);  // not divisible by 2^stages
  CHECK_THROWS_AS(parse_config("nlat = 9\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[data\nnlat = 9\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("command-line workflows end to end") {
  const Workdir w;
  const std::string cfg = w("small.ini");

  SUBCASE("gen-data is reproducible and validates extents") {
    REQUIRE(cli({"gen-data", "--config", cfg, "--out", w("a.romdat")}).code == exit_ok);
    REQUIRE(cli({"gen-data", "--config", cfg, "--out", w("b.romdat")}).code == exit_ok);
    CHECK(slurp(w("a.romdat")) == slurp(w("b.romdat")));
    CHECK(read_snapshots(w("a.romdat")).snapshots.size() == 160);
    REQUIRE(cli({"gen-data", "--config", cfg, "--seed", "4", "--out", w("c.romdat")}).code == exit_ok);
    CHECK(slurp(w("a.romdat")) != slurp(w("c.romdat")));

    std::ofstream(w("bad.ini")) << "[data]\nnlon = 6\n";
    const Run bad = cli({"gen-data", "--config", w("bad.ini"), "--out", w("x.romdat")});
    CHECK(bad.code == exit_config);
    CHECK(bad.err.find("data.nlon") != std::string::npos);
    CHECK(cli({"gen-data"}).code == exit_config);
    CHECK(cli({"no-such-command"}).code == exit_config);
    CHECK(cli({"--help"}).code == exit_ok);
  }

  SUBCASE("training, resume and the attention ablation") {
    REQUIRE(cli({"gen-data", "--config", cfg, "--out", w("d.romdat")}).code == exit_ok);
    const Run t = cli({"train-cae", "--config", cfg, "--data", w("d.romdat"), "--out", w("c.romcae")});
    REQUIRE(t.code == exit_ok);
    CHECK(fs::exists(w("c.romcae")));
    CHECK(read_trace_csv(w("c.romcae.trace.csv")).size() == 2);
    CHECK(read_cae_checkpoint(w("c.romcae")).model.arch().cbam);

    // resume appends epochs 2 and 3 to the same trace
    REQUIRE(cli({"train-cae", "--config", cfg, "--data", w("d.romdat"), "--out", w("c2.romcae"), "--resume",
                 w("c.romcae"), "--trace", w("c.romcae.trace.csv")})
                .code == exit_ok);
    const auto trace = read_trace_csv(w("c.romcae.trace.csv"));
    REQUIRE(trace.size() == 4);
    for (std::size_t i = 0; i < trace.size(); ++i) CHECK(trace[i].epoch == i);
    CHECK(read_cae_checkpoint(w("c2.romcae")).epochs_completed == 4);

    // same data and seed with and without attention give comparable traces
    REQUIRE(cli({"train-cae", "--config", cfg, "--data", w("d.romdat"), "--out", w("nc.romcae"), "--no-cbam"}).code ==
            exit_ok);
    const auto ck = read_cae_checkpoint(w("nc.romcae"));
    CHECK_FALSE(ck.model.arch().cbam);
    const auto nt = read_trace_csv(w("nc.romcae.trace.csv"));
    REQUIRE(nt.size() == 2);
    CHECK(slurp(w("nc.romcae.trace.csv")).substr(0, 29) == slurp(w("c.romcae.trace.csv")).substr(0, 29));

    // determinism: a second identical run writes identical bytes
    REQUIRE(cli({"train-cae", "--config", cfg, "--data", w("d.romdat"), "--out", w("c3.romcae"), "--trace",
                 w("c3.csv")})
                .code == exit_ok);
    CHECK(slurp(w("c3.romcae")) == slurp(w("c.romcae")));
  }

  SUBCASE("POD, operator fit, experiments and sweeps") {
    REQUIRE(cli({"gen-data", "--config", cfg, "--out", w("d.romdat")}).code == exit_ok);
    REQUIRE(cli({"fit-pod", "--config", cfg, "--data", w("d.romdat"), "--out", w("p.rompod")}).code == exit_ok);
    REQUIRE(cli({"pod-sweep", "--config", cfg, "--data", w("d.romdat"), "--out", w("s.csv")}).code == exit_ok);
    {
      std::ifstream is(w("s.csv"));
      std::string line;
      std::getline(is, line);
      CHECK(line == "k,ratio,train_frobenius,train_lw_rmse,test_lw_rmse");
      std::vector<double> frob;
      while (std::getline(is, line)) frob.push_back(std::stod(line.substr(line.find(',', line.find(',') + 1) + 1)));
      REQUIRE(frob.size() == 3);
      CHECK(frob[1] <= frob[0]);
      CHECK(frob[2] <= frob[1]);
    }

    const Run fr = cli({"fit-rom", "--config", cfg, "--data", w("d.romdat"), "--pod", w("p.rompod"), "--out",
                        w("op.romop"), "--d", "1"});
    REQUIRE(fr.code == exit_ok);
    // 144 training snapshots at d = 1: 8 unknowns per row, 143 equations
    CHECK(fr.out.find("8 unknowns per row vs 143 equations") != std::string::npos);
    const Run too_deep = cli({"fit-rom", "--config", cfg, "--data", w("d.romdat"), "--pod", w("p.rompod"), "--out",
                              w("x.romop"), "--d", "500"});
    CHECK(too_deep.code == exit_data);
    CHECK(too_deep.err.find("sequence too short") != std::string::npos);
    CHECK(cli({"fit-rom", "--config", cfg, "--data", w("d.romdat"), "--out", w("x.romop")}).code == exit_config);

    REQUIRE(cli({"fit-rom", "--config", cfg, "--data", w("d.romdat"), "--pod", w("p.rompod"), "--out", w("op2.romop")})
                .code == exit_ok);
    CHECK(read_operator(w("op2.romop")).d == 2);
    for (const char* kind : {"in_window", "out_of_window", "transition"}) {
      const std::string out = w(std::string("r_") + kind + ".csv");
      const Run r = cli({"experiment", "--config", cfg, "--data", w("d.romdat"), "--pod", w("p.rompod"), "--op",
                         w("op2.romop"), "--kind", kind, "--out", out, "--dump", w("dump.romdat")});
      REQUIRE(r.code == exit_ok);
      const ForecastReport rep = read_report_csv(out);
      CHECK(to_string(rep.kind) == std::string(kind));
      CHECK(rep.horizon == 6);
      CHECK(rep.variables == std::vector<std::string>{"u10", "v10", "T2m", "Pmsl"});
      CHECK(read_snapshots(w("dump.romdat")).snapshots.size() == 6);
      // rerun: identical report bytes
      const std::string again = w(std::string("r2_") + kind + ".csv");
      REQUIRE(cli({"experiment", "--config", cfg, "--data", w("d.romdat"), "--pod", w("p.rompod"), "--op",
                   w("op2.romop"), "--kind", kind, "--out", again})
                  .code == exit_ok);
      CHECK(slurp(out) == slurp(again));
    }
    // operator and codec disagree on n
    REQUIRE(cli({"fit-pod", "--config", cfg, "--data", w("d.romdat"), "--out", w("p5.rompod"), "--k", "5"}).code ==
            exit_ok);
    CHECK(cli({"experiment", "--config", cfg, "--data", w("d.romdat"), "--pod", w("p5.rompod"), "--op",
               w("op2.romop"), "--out", w("x.csv")})
              .code == exit_data);

    REQUIRE(cli({"forecast", "--config", cfg, "--data", w("d.romdat"), "--pod", w("p.rompod"), "--op",
                 w("op2.romop"), "--start", "10", "--steps", "4", "--out", w("f.romdat")})
                .code == exit_ok);
    CHECK(read_snapshots(w("f.romdat")).snapshots.size() == 4);

    REQUIRE(cli({"delay-sweep", "--config", cfg, "--data", w("d.romdat"), "--pod", w("p.rompod"), "--out",
                 w("ds.csv")})
                .code == exit_ok);
    const auto rows = read_delay_sweep_csv(w("ds.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].d == 1);
    CHECK(rows[1].d == 2);

    const Run ratio = cli({"ratio"});
    CHECK(ratio.code == exit_ok);
    CHECK(ratio.out.find("121.00:1") != std::string::npos);
    CHECK(ratio.out.find("116.16:1") != std::string::npos);
    CHECK(ratio.out.find("3958944") != std::string::npos);
  }

  SUBCASE("compare emits the reconstruction table schema") {
    REQUIRE(cli({"gen-data", "--config", cfg, "--out", w("d.romdat")}).code == exit_ok);
    REQUIRE(cli({"train-cae", "--config", cfg, "--data", w("d.romdat"), "--out", w("c.romcae"), "--epochs", "1"})
                .code == exit_ok);
    REQUIRE(cli({"fit-pod", "--config", cfg, "--data", w("d.romdat"), "--out", w("p.rompod")}).code == exit_ok);
    REQUIRE(cli({"compare", "--config", cfg, "--data", w("d.romdat"), "--cae", w("c.romcae"), "--pod", w("p.rompod"),
                 "--out", w("t.csv")})
                .code == exit_ok);
    std::ifstream is(w("t.csv"));
    std::string header, pod, cae;
    std::getline(is, header);
    std::getline(is, pod);
    std::getline(is, cae);
    CHECK(header == "model,ratio,u10,v10,T2m,Pmsl");
    CHECK(pod.rfind("POD (8 modes),204.00:1,", 0) == 0);
    CHECK(cae.rfind("CAE (60 latent dimensions),27.20:1,", 0) == 0);
  }
}
