#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bcskit/metrics.hpp"
#include "bcskit/net.hpp"
#include "bcskit/pgm.hpp"
#include "doctest.h"
#include "fixtures.hpp"

// End-to-end checks of the command-line binary, located via BCSKIT_BIN. Each
// case works in its own directory under the system temp root and inspects the
// files the tool leaves behind with the library's own readers.

using namespace bcskit;

namespace {

namespace fs = std::filesystem;

std::string binary() {
  const char* b = std::getenv("BCSKIT_BIN");
  REQUIRE_MESSAGE(b != nullptr, "BCSKIT_BIN must point at the CLI binary");
  return b;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("bcskit_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const fs::path& log) {
  std::string cmd = '"' + binary() + "\" " + args + " >" + log.string() + " 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& path) {
  std::vector<std::string> out;
  std::istringstream ss(slurp(path));
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

// Mid-band waves, at least one period per 16-pixel block: content the block
// engines recover well at moderate rates.
Image smooth_48() {
  const double pi = 3.14159265358979;
  Image img(48, 48);
  for (int r = 0; r < 48; ++r)
    for (int c = 0; c < 48; ++c)
      img.at(r, c) = 120.0 +
                     50.0 * std::sin(2.0 * pi * r / 12.0) * std::cos(2.0 * pi * c / 16.0) +
                     25.0 * std::sin(2.0 * pi * (r + c) / 10.0);
  return img;
}

}  // namespace

TEST_CASE("cli: sample then reconstruct round-trips through the file formats") {
  fs::path dir = fresh_dir("roundtrip");
  fs::path img_path = dir / "img.pgm";
  save_pgm(smooth_48(), img_path.string());
  fs::path meas = dir / "m.json";
  fs::path assign = dir / "a.json";
  fs::path log = dir / "log.txt";

  int rc = run("sample --in " + img_path.string() + " --out-meas " + meas.string() +
                   " --out-assign " + assign.string() +
                   " --block 16 --rates 0.1,0.3 --sr 0.3 --seed 5",
               log);
  REQUIRE(rc == 0);
  CHECK(slurp(log).find("blocks=9") != std::string::npos);

  fs::path rec = dir / "rec.pgm";
  fs::path csv = dir / "runs.csv";
  rc = run("reconstruct --meas " + meas.string() + " --assign " + assign.string() +
               " --algo bcs-spl --out " + rec.string() + " --ref " + img_path.string() +
               " --csv " + csv.string() + " --iters 25 --lambda0 800",
           log);
  REQUIRE(rc == 0);

  Image ref = load_pgm(img_path.string());
  Image out = load_pgm(rec.string());
  REQUIRE(out.height == 48);
  REQUIRE(out.width == 48);
  CHECK(psnr(ref, out) > 20.0);

  auto rows = lines_of(csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] ==
        "image,algo,target_rate,achieved_rate,psnr_db,ssim,blockiness,time_s,seed");
  auto cells = split_csv(rows[1]);
  REQUIRE(cells.size() == 9);
  CHECK(cells[0] == "m");
  CHECK(cells[1] == "bcs-spl");
  CHECK(cells[2] == "0.3");
  CHECK(std::stod(cells[4]) > 20.0);
  CHECK(std::stod(cells[5]) > 0.0);

  // The other bank engines accept the same measurement file.
  rc = run("reconstruct --meas " + meas.string() + " --algo damp --out " +
               (dir / "damp.pgm").string() + " --iters 6",
           log);
  CHECK(rc == 0);
  rc = run("reconstruct --meas " + meas.string() + " --algo bcs-damp --out " +
               (dir / "bd.pgm").string() + " --iters 6",
           log);
  CHECK(rc == 0);
}

TEST_CASE("cli: sampling is reproducible from the seed") {
  fs::path dir = fresh_dir("seeded");
  fs::path img_path = dir / "img.pgm";
  save_pgm(smooth_48(), img_path.string());
  fs::path log = dir / "log.txt";
  for (int pass = 0; pass < 2; ++pass) {
    std::string tag = std::to_string(pass);
    int rc = run("sample --in " + img_path.string() + " --out-meas " +
                     (dir / ("m" + tag + ".json")).string() + " --out-assign " +
                     (dir / ("a" + tag + ".json")).string() +
                     " --block 16 --rates 0.1,0.3 --sr 0.1 --seed 9",
                 log);
    REQUIRE(rc == 0);
  }
  CHECK(slurp(dir / "m0.json") == slurp(dir / "m1.json"));
  CHECK(slurp(dir / "a0.json") == slurp(dir / "a1.json"));
}

TEST_CASE("cli: bench writes one row per image, engine, and rate plus means") {
  fs::path dir = fresh_dir("bench");
  fs::path imgs = dir / "imgs";
  fs::create_directories(imgs);
  save_pgm(smooth_48(), (imgs / "one.pgm").string());
  save_pgm(fixtures::toy_image(0), (imgs / "two.pgm").string());
  fs::path csv = dir / "bench.csv";
  fs::path log = dir / "log.txt";

  int rc = run("bench --dir " + imgs.string() + " --out " + csv.string() +
                   " --algos bcs-spl,damp --rates 0.1,0.3 --bank-rates 0.1,0.3" +
                   " --block 16 --iters 4 --seed 2",
               log);
  REQUIRE(rc == 0);

  auto rows = lines_of(csv);
  // header + 2 images x 2 engines x 2 rates + 4 per-(engine, rate) means
  REQUIRE(rows.size() == 13);
  int mean_rows = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto cells = split_csv(rows[i]);
    REQUIRE(cells.size() == 9);
    if (cells[0] == "__mean__") ++mean_rows;
    CHECK(std::stod(cells[4]) > 0.0);
  }
  CHECK(mean_rows == 4);
}

TEST_CASE("cli: train-toy produces a usable checkpoint and loss curve") {
  fs::path dir = fresh_dir("train");
  fs::path toys = dir / "toys";
  fs::create_directories(toys);
  for (int i = 0; i < 3; ++i)
    save_pgm(fixtures::toy_image(i), (toys / ("t" + std::to_string(i) + ".pgm")).string());
  fs::path ckpt = dir / "net.ckpt";
  fs::path curve = dir / "loss.csv";
  fs::path log = dir / "log.txt";

  int rc = run("train-toy --dir " + toys.string() + " --out " + ckpt.string() +
                   " --curve " + curve.string() +
                   " --steps1 8 --steps2 4 --block 16 --features 4 --phases 1" +
                   " --rates 0.1,0.3 --sr 0.3 --mode uniform --lr 1e-3 --seed 3",
               log);
  REQUIRE(rc == 0);

  NetParams net = load_checkpoint(ckpt.string());
  CHECK(net.stage == 2);
  CHECK(net.config.block_size == 16);
  CHECK(net.config.features == 4);
  CHECK(net.config.phases == 1);
  CHECK(net.config.rates == std::vector<double>{0.1, 0.3});
  CHECK(net.pinv.size() == 2);

  auto rows = lines_of(curve);
  REQUIRE(rows.size() == 13);
  CHECK(rows[0] == "step,stage,loss");
  CHECK(split_csv(rows[1])[1] == "1");
  CHECK(split_csv(rows[12])[1] == "2");

  // Resume into a few more stage-2 steps.
  rc = run("train-toy --dir " + toys.string() + " --resume " + ckpt.string() +
               " --out " + (dir / "net2.ckpt").string() + " --curve " +
               (dir / "loss2.csv").string() +
               " --stage 2 --steps2 3 --mode uniform --lr 1e-3 --seed 4",
           log);
  REQUIRE(rc == 0);
  CHECK(lines_of(dir / "loss2.csv").size() == 4);

  // The trained matrices measure and reconstruct through the CLI.
  fs::path timg = dir / "holdout.pgm";
  save_pgm(fixtures::toy_image(4), timg.string());
  fs::path meas = dir / "mn.json";
  rc = run("sample --in " + timg.string() + " --checkpoint " + ckpt.string() +
               " --out-meas " + meas.string() + " --out-assign " +
               (dir / "an.json").string() + " --sr 0.3 --mode uniform",
           log);
  REQUIRE(rc == 0);
  fs::path out = dir / "netout.pgm";
  rc = run("reconstruct --meas " + meas.string() + " --algo bcsnet --out " +
               out.string(),
           log);
  REQUIRE(rc == 0);
  Image img = load_pgm(out.string());
  CHECK(img.height == 32);
  CHECK(img.width == 32);
}

TEST_CASE("cli: bad invocations fail with a nonzero exit") {
  fs::path dir = fresh_dir("errors");
  fs::path img_path = dir / "img.pgm";
  save_pgm(smooth_48(), img_path.string());
  fs::path log = dir / "log.txt";

  // Missing required flag.
  CHECK(run("sample", log) != 0);
  // Unknown engine name.
  CHECK(run("reconstruct --meas nope.json --algo magic --out x.pgm", log) != 0);
  // Nonexistent input.
  CHECK(run("sample --in " + (dir / "missing.pgm").string(), log) != 0);

  // Engine/measurement mismatch: bank measurements cannot feed bcsnet.
  fs::path meas = dir / "m.json";
  REQUIRE(run("sample --in " + img_path.string() + " --out-meas " + meas.string() +
                  " --out-assign " + (dir / "a.json").string() +
                  " --block 16 --rates 0.1,0.3 --sr 0.1",
              log) == 0);
  CHECK(run("reconstruct --meas " + meas.string() + " --algo bcsnet --out " +
                (dir / "x.pgm").string(),
            log) != 0);
}
