#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bcskit/allocation.hpp"
#include "bcskit/metrics.hpp"
#include "bcskit/net.hpp"
#include "bcskit/pgm.hpp"
#include "bcskit/recon.hpp"
#include "formats.hpp"

using namespace bcskit;
using cli::BankRecipe;
using cli::RunRecord;

namespace {

namespace fs = std::filesystem;

template <class F>
double timed(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Shared flag bundles
// ---------------------------------------------------------------------------

struct ReconFlags {
  int iters = 30;
  double tol = 1e-4;
  int probes = 1;
  std::string denoiser = "hard-dct";
  double tau = 2.7;
  double lambda0 = 50.0;
  double lambda_decay = 0.9;
  bool uniform_onsager = false;
};

void add_recon_flags(CLI::App* sub, ReconFlags& f) {
  sub->add_option("--iters", f.iters, "Iteration cap")->capture_default_str();
  sub->add_option("--tol", f.tol, "Relative-change stopping tolerance")->capture_default_str();
  sub->add_option("--probes", f.probes, "Divergence probes per iteration")->capture_default_str();
  sub->add_option("--denoiser", f.denoiser, "Denoiser for the message-passing engines")
      ->check(CLI::IsMember({"hard-dct", "soft-dct", "nlm"}))
      ->capture_default_str();
  sub->add_option("--tau", f.tau, "DCT threshold multiplier")->capture_default_str();
  sub->add_option("--lambda0", f.lambda0, "Initial threshold of the projected-thresholding engine")
      ->capture_default_str();
  sub->add_option("--lambda-decay", f.lambda_decay, "Threshold decay per iteration")
      ->capture_default_str();
  sub->add_flag("--uniform-onsager", f.uniform_onsager,
                "Split the whole-image divergence uniformly over blocks");
}

ReconConfig to_config(const ReconFlags& f, std::uint64_t seed) {
  ReconConfig cfg;
  cfg.max_iters = f.iters;
  cfg.rel_tol = f.tol;
  cfg.probes = f.probes;
  cfg.seed = seed;
  cfg.lambda0 = f.lambda0;
  cfg.lambda_decay = f.lambda_decay;
  cfg.uniform_onsager_split = f.uniform_onsager;
  cfg.denoiser.tau = f.tau;
  if (f.denoiser == "hard-dct") cfg.denoiser.variant = DenoiserVariant::HardDct;
  else if (f.denoiser == "soft-dct") cfg.denoiser.variant = DenoiserVariant::SoftDct;
  else cfg.denoiser.variant = DenoiserVariant::Nlm;
  return cfg;
}

// ---------------------------------------------------------------------------
// Sampling helpers shared by sample and bench
// ---------------------------------------------------------------------------

int grid_count(const Image& img, int block) {
  int gr = (img.height + block - 1) / block;
  int gc = (img.width + block - 1) / block;
  return gr * gc;
}

// Uniform routing against a plain rate list (checkpoint sampling has no bank).
RateAssignment nearest_uniform(const std::vector<double>& rates, int block_size,
                               int count, double sr) {
  int best = 0;
  for (std::size_t j = 1; j < rates.size(); ++j)
    if (std::abs(rates[j] - sr) < std::abs(rates[best] - sr))
      best = static_cast<int>(j);
  auto counts = measurement_counts(rates, block_size);
  RateAssignment a;
  a.channels.assign(count, best);
  a.target_rate = sr;
  a.achieved_rate = static_cast<double>(counts[best]) / (block_size * block_size);
  return a;
}

Measurements sample_with_net(const NetParams& net, const RateAssignment& a,
                             const Image& img) {
  int b = net.config.block_size;
  BlockGrid grid = partition(img, b);
  if (a.channels.size() != grid.blocks.size())
    throw std::runtime_error("assignment does not cover the block grid");
  Measurements meas;
  meas.block_size = b;
  meas.grid_rows = grid.grid_rows;
  meas.grid_cols = grid.grid_cols;
  meas.image_height = img.height;
  meas.image_width = img.width;
  for (std::size_t i = 0; i < grid.blocks.size(); ++i) {
    BlockMeasurement e;
    e.block = static_cast<int>(i);
    e.channel = a.channels[i];
    e.y = forward_sample(net, e.channel, grid.blocks[i]);
    meas.entries.push_back(std::move(e));
  }
  return meas;
}

double achieved_rate_of(const Measurements& meas) {
  std::size_t total = 0;
  for (const auto& e : meas.entries) total += e.y.size();
  return static_cast<double>(total) /
         (static_cast<double>(meas.block_count()) * meas.block_size * meas.block_size);
}

RateAssignment channels_of(const Measurements& meas) {
  RateAssignment a;
  a.channels.assign(meas.block_count(), 0);
  for (const auto& e : meas.entries) a.channels[e.block] = e.channel;
  a.achieved_rate = achieved_rate_of(meas);
  a.target_rate = a.achieved_rate;
  return a;
}

void fill_metrics(RunRecord& rec, const Image* ref, const Image& out, int block) {
  if (ref) {
    rec.psnr_db = psnr(*ref, out);
    if (std::min(out.height, out.width) >= 11) rec.ssim = ssim(*ref, out);
  }
  if (out.height >= 2 * block && out.width >= 2 * block)
    rec.blockiness = blockiness(out, block);
}

std::vector<fs::path> pgm_files(const std::string& dir) {
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm")
      paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  return paths;
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

struct SampleOpts {
  std::string in;
  std::string out_meas = "measurements.json";
  std::string out_assign = "assignment.json";
  std::string mode = "uniform";
  std::string checkpoint;
  int block = 32;
  std::vector<double> rates = {0.01, 0.03, 0.05, 0.1, 0.2, 0.3, 0.4};
  double sr = 0.1;
  bool orthonormal = true;
  std::uint64_t seed = 1;
};

void cmd_sample(const SampleOpts& o) {
  Image img = load_pgm(o.in);
  bool adaptive = o.mode == "adaptive";
  Measurements meas;
  RateAssignment a;
  BankRecipe recipe;
  if (!o.checkpoint.empty()) {
    NetParams net = load_checkpoint(o.checkpoint);
    int b = net.config.block_size;
    a = adaptive ? assign(proportions(presample(img), b), o.sr, net.config.rates, b)
                 : nearest_uniform(net.config.rates, b, grid_count(img, b), o.sr);
    meas = sample_with_net(net, a, img);
    recipe.checkpoint = o.checkpoint;
  } else {
    Rng rng = Rng::stream(o.seed, Stream::Matrices);
    ChannelBank bank = build_channel_bank(rng, o.block, o.rates, o.orthonormal);
    a = adaptive ? assign(proportions(presample(img), o.block), o.sr, bank)
                 : uniform_assignment(bank, grid_count(img, o.block), o.sr);
    meas = sample_image(bank, a, img);
    recipe.seed = o.seed;
    recipe.rates = o.rates;
    recipe.orthonormal = o.orthonormal;
  }
  cli::save_measurements(o.out_meas, meas, recipe);
  cli::save_assignment(o.out_assign, a, meas.block_size, meas.grid_rows, meas.grid_cols);
  std::cout << o.out_meas << ' ' << o.out_assign << " blocks=" << meas.block_count()
            << " achieved_rate=" << a.achieved_rate << '\n';
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

struct ReconstructOpts {
  std::string meas;
  std::string assign_path;
  std::string algo;
  std::string out;
  std::string ref;
  std::string csv;
  std::string checkpoint;
  ReconFlags flags;
  std::uint64_t seed = 1;
};

void cmd_reconstruct(const ReconstructOpts& o) {
  BankRecipe recipe;
  Measurements meas = cli::load_measurements(o.meas, &recipe);
  RunRecord rec;
  rec.image = fs::path(o.meas).stem().string();
  rec.algo = o.algo;
  rec.seed = o.seed;
  rec.achieved_rate = achieved_rate_of(meas);
  rec.target_rate = rec.achieved_rate;
  if (!o.assign_path.empty())
    rec.target_rate = cli::load_assignment(o.assign_path).target_rate;
  ReconConfig cfg = to_config(o.flags, o.seed);
  Image out;
  if (o.algo == "bcsnet") {
    std::string ckpt = o.checkpoint.empty() ? recipe.checkpoint : o.checkpoint;
    if (ckpt.empty())
      throw std::runtime_error("bcsnet needs --checkpoint");
    if (!recipe.from_checkpoint())
      throw std::runtime_error(
          "bcsnet needs measurements sampled from a checkpoint (sample --checkpoint)");
    NetParams net = load_checkpoint(ckpt);
    RateAssignment a = channels_of(meas);
    rec.time_s = timed([&] { out = forward_full(net, meas, a); });
  } else {
    if (recipe.from_checkpoint())
      throw std::runtime_error(o.algo + " needs bank-sampled measurements");
    Rng rng = Rng::stream(recipe.seed, Stream::Matrices);
    ChannelBank bank =
        build_channel_bank(rng, meas.block_size, recipe.rates, recipe.orthonormal);
    rec.time_s = timed([&] {
      if (o.algo == "bcs-spl") out = bcs_spl(meas, bank, cfg);
      else if (o.algo == "damp") out = damp_blockwise(meas, bank, cfg);
      else out = bcs_damp(meas, bank, cfg);
    });
  }
  save_pgm(out, o.out);
  Image ref;
  if (!o.ref.empty()) ref = load_pgm(o.ref);
  fill_metrics(rec, o.ref.empty() ? nullptr : &ref, out, meas.block_size);
  if (!o.csv.empty()) cli::append_csv(o.csv, rec);
  std::cout << cli::to_csv_row(rec) << '\n';
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchOpts {
  std::string dir;
  std::string out = "bench.csv";
  std::string mode = "uniform";
  std::string checkpoint;
  std::vector<std::string> algos = {"bcs-spl", "damp", "bcs-damp"};
  std::vector<double> rates = {0.1, 0.2, 0.3};
  std::vector<double> bank_rates = {0.01, 0.03, 0.05, 0.1, 0.2, 0.3, 0.4};
  int block = 32;
  bool orthonormal = true;
  ReconFlags flags;
  std::uint64_t seed = 1;
};

void cmd_bench(const BenchOpts& o) {
  auto paths = pgm_files(o.dir);
  if (paths.empty()) throw std::runtime_error(o.dir + ": no .pgm images");
  bool want_net = false, want_bank = false;
  for (const auto& a : o.algos) (a == "bcsnet" ? want_net : want_bank) = true;
  ChannelBank bank;
  if (want_bank) {
    Rng rng = Rng::stream(o.seed, Stream::Matrices);
    bank = build_channel_bank(rng, o.block, o.bank_rates, o.orthonormal);
  }
  NetParams net;
  if (want_net) {
    if (o.checkpoint.empty()) throw std::runtime_error("bcsnet in --algos needs --checkpoint");
    net = load_checkpoint(o.checkpoint);
  }
  bool adaptive = o.mode == "adaptive";
  ReconConfig cfg = to_config(o.flags, o.seed);
  std::vector<RunRecord> rows;
  for (const auto& path : paths) {
    Image img = load_pgm(path.string());
    std::string id = path.stem().string();
    for (double sr : o.rates) {
      if (want_bank) {
        RateAssignment a =
            adaptive ? assign(proportions(presample(img), o.block), sr, bank)
                     : uniform_assignment(bank, grid_count(img, o.block), sr);
        Measurements meas = sample_image(bank, a, img);
        for (const auto& algo : o.algos) {
          if (algo == "bcsnet") continue;
          RunRecord rec;
          rec.image = id;
          rec.algo = algo;
          rec.target_rate = sr;
          rec.achieved_rate = a.achieved_rate;
          rec.seed = o.seed;
          Image out;
          rec.time_s = timed([&] {
            if (algo == "bcs-spl") out = bcs_spl(meas, bank, cfg);
            else if (algo == "damp") out = damp_blockwise(meas, bank, cfg);
            else out = bcs_damp(meas, bank, cfg);
          });
          fill_metrics(rec, &img, out, o.block);
          rows.push_back(std::move(rec));
        }
      }
      if (want_net) {
        int b = net.config.block_size;
        RateAssignment a =
            adaptive ? assign(proportions(presample(img), b), sr, net.config.rates, b)
                     : nearest_uniform(net.config.rates, b, grid_count(img, b), sr);
        Measurements meas = sample_with_net(net, a, img);
        RunRecord rec;
        rec.image = id;
        rec.algo = "bcsnet";
        rec.target_rate = sr;
        rec.achieved_rate = a.achieved_rate;
        rec.seed = o.seed;
        Image out;
        RateAssignment chan = channels_of(meas);
        rec.time_s = timed([&] { out = forward_full(net, meas, chan); });
        fill_metrics(rec, &img, out, b);
        rows.push_back(std::move(rec));
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.image != b.image) return a.image < b.image;
    if (a.algo != b.algo) return a.algo < b.algo;
    return a.target_rate < b.target_rate;
  });
  // Per (algo, rate) means over the image set, appended under the __mean__ id.
  struct Agg {
    int n = 0;
    double achieved = 0, time = 0;
    double psnr = 0, ssim = 0, block = 0;
    int n_psnr = 0, n_ssim = 0, n_block = 0;
  };
  std::map<std::pair<std::string, double>, Agg> aggs;
  for (const auto& r : rows) {
    Agg& a = aggs[{r.algo, r.target_rate}];
    ++a.n;
    a.achieved += r.achieved_rate;
    a.time += r.time_s;
    if (r.psnr_db) { a.psnr += *r.psnr_db; ++a.n_psnr; }
    if (r.ssim) { a.ssim += *r.ssim; ++a.n_ssim; }
    if (r.blockiness) { a.block += *r.blockiness; ++a.n_block; }
  }
  std::vector<RunRecord> means;
  for (const auto& [key, a] : aggs) {
    RunRecord rec;
    rec.image = "__mean__";
    rec.algo = key.first;
    rec.target_rate = key.second;
    rec.achieved_rate = a.achieved / a.n;
    rec.time_s = a.time / a.n;
    rec.seed = o.seed;
    if (a.n_psnr) rec.psnr_db = a.psnr / a.n_psnr;
    if (a.n_ssim) rec.ssim = a.ssim / a.n_ssim;
    if (a.n_block) rec.blockiness = a.block / a.n_block;
    means.push_back(std::move(rec));
  }
  rows.insert(rows.end(), means.begin(), means.end());
  cli::write_csv(o.out, rows);
  std::cout << o.out << " rows=" << rows.size() << '\n';
}

// ---------------------------------------------------------------------------
// train-toy
// ---------------------------------------------------------------------------

struct TrainToyOpts {
  std::string dir;
  std::string out = "bcsnet.ckpt";
  std::string curve = "loss.csv";
  std::string resume;
  std::string stage = "both";
  std::string mode = "adaptive";
  int steps1 = 200;
  int steps2 = 200;
  int block = 16;
  int features = 8;
  int phases = 2;
  int kernel = 3;
  std::vector<double> rates = {0.1, 0.2, 0.3};
  double sr = 0.2;
  double lr = 1e-4;
  std::uint64_t seed = 1;
};

void cmd_train_toy(const TrainToyOpts& o) {
  auto paths = pgm_files(o.dir);
  if (paths.empty()) throw std::runtime_error(o.dir + ": no .pgm images");
  std::vector<Image> images;
  for (const auto& p : paths) images.push_back(load_pgm(p.string()));
  NetParams params;
  if (o.resume.empty()) {
    NetConfig c;
    c.block_size = o.block;
    c.rates = o.rates;
    c.features = o.features;
    c.kernel = o.kernel;
    c.phases = o.phases;
    params = init_params(c, o.seed);
  } else {
    params = load_checkpoint(o.resume);
  }
  auto examples =
      make_training_set(params.config, images, o.sr, o.mode == "adaptive");
  TrainConfig tc;
  tc.lr = o.lr;
  tc.seed = o.seed;
  std::vector<LossPoint> curve;
  if (o.stage == "both" || o.stage == "1") {
    tc.steps = o.steps1;
    train(params, examples, 1, tc, &curve);
  }
  if (o.stage == "both" || o.stage == "2") {
    tc.steps = o.steps2;
    train(params, examples, 2, tc, &curve);
  }
  save_checkpoint(params, o.out);
  std::ofstream cf(o.curve);
  if (!cf) throw std::runtime_error(o.curve + ": cannot open for writing");
  cf << "step,stage,loss\n";
  for (const auto& p : curve) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d,%d,%.10g", p.step, p.stage, p.loss);
    cf << buf << '\n';
  }
  if (!cf) throw std::runtime_error(o.curve + ": write failed");
  std::cout << o.out << " stage=" << params.stage << " examples=" << examples.size()
            << " curve_points=" << curve.size() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-based compressive sensing toolkit"};
  app.require_subcommand(1);

  SampleOpts so;
  CLI::App* sample = app.add_subcommand("sample", "Measure an image block by block");
  sample->add_option("--in", so.in, "Input PGM")->required()->check(CLI::ExistingFile);
  sample->add_option("--out-meas", so.out_meas, "Measurements JSON")->capture_default_str();
  sample->add_option("--out-assign", so.out_assign, "Assignment JSON")->capture_default_str();
  sample->add_option("--block", so.block, "Block size")->capture_default_str();
  sample->add_option("--rates", so.rates, "Channel rates, ascending")
      ->delimiter(',')->capture_default_str();
  sample->add_option("--sr", so.sr, "Target sampling rate")->capture_default_str();
  sample->add_option("--mode", so.mode, "uniform or adaptive (saliency-driven)")
      ->check(CLI::IsMember({"uniform", "adaptive"}))->capture_default_str();
  sample->add_flag("--orthonormal,!--no-orthonormal", so.orthonormal,
                   "Orthonormalize the sampling rows")->capture_default_str();
  sample->add_option("--checkpoint", so.checkpoint,
                     "Sample with a trained model's matrices instead of a seeded bank")
      ->check(CLI::ExistingFile);
  sample->add_option("--seed", so.seed, "Bank seed")->envname("BCSKIT_SEED")
      ->capture_default_str();
  sample->callback([&] { cmd_sample(so); });

  ReconstructOpts ro;
  CLI::App* rec = app.add_subcommand("reconstruct", "Reconstruct from a measurement file");
  rec->add_option("--meas", ro.meas, "Measurements JSON")->required()->check(CLI::ExistingFile);
  rec->add_option("--assign", ro.assign_path, "Assignment JSON (target-rate bookkeeping)")
      ->check(CLI::ExistingFile);
  rec->add_option("--algo", ro.algo, "Reconstruction engine")
      ->required()->check(CLI::IsMember({"bcs-spl", "damp", "bcs-damp", "bcsnet"}));
  rec->add_option("--out", ro.out, "Output PGM")->required();
  rec->add_option("--ref", ro.ref, "Reference PGM for PSNR/SSIM")->check(CLI::ExistingFile);
  rec->add_option("--csv", ro.csv, "Append the run record to this CSV");
  rec->add_option("--checkpoint", ro.checkpoint, "Model checkpoint for bcsnet")
      ->check(CLI::ExistingFile);
  add_recon_flags(rec, ro.flags);
  rec->add_option("--seed", ro.seed, "Probe-stream seed")->envname("BCSKIT_SEED")
      ->capture_default_str();
  rec->callback([&] { cmd_reconstruct(ro); });

  BenchOpts bo;
  CLI::App* bench = app.add_subcommand("bench", "Sample + reconstruct a directory of PGMs");
  bench->add_option("--dir", bo.dir, "Image directory")->required()
      ->check(CLI::ExistingDirectory);
  bench->add_option("--out", bo.out, "Output CSV")->capture_default_str();
  bench->add_option("--algos", bo.algos, "Engines to run")
      ->delimiter(',')
      ->check(CLI::IsMember({"bcs-spl", "damp", "bcs-damp", "bcsnet"}))
      ->capture_default_str();
  bench->add_option("--rates", bo.rates, "Target rates")->delimiter(',')->capture_default_str();
  bench->add_option("--bank-rates", bo.bank_rates, "Channel rates of the bank")
      ->delimiter(',')->capture_default_str();
  bench->add_option("--block", bo.block, "Block size")->capture_default_str();
  bench->add_option("--mode", bo.mode, "uniform or adaptive routing")
      ->check(CLI::IsMember({"uniform", "adaptive"}))->capture_default_str();
  bench->add_flag("--orthonormal,!--no-orthonormal", bo.orthonormal,
                  "Orthonormalize the sampling rows")->capture_default_str();
  bench->add_option("--checkpoint", bo.checkpoint, "Model checkpoint when bcsnet is benched")
      ->check(CLI::ExistingFile);
  add_recon_flags(bench, bo.flags);
  bench->add_option("--seed", bo.seed, "Bank and probe seed")->envname("BCSKIT_SEED")
      ->capture_default_str();
  bench->callback([&] { cmd_bench(bo); });

  TrainToyOpts to;
  CLI::App* tt = app.add_subcommand("train-toy", "Two-stage training at desk scale");
  tt->add_option("--dir", to.dir, "Training image directory")->required()
      ->check(CLI::ExistingDirectory);
  tt->add_option("--out", to.out, "Checkpoint path")->capture_default_str();
  tt->add_option("--curve", to.curve, "Loss curve CSV")->capture_default_str();
  tt->add_option("--resume", to.resume, "Start from this checkpoint")->check(CLI::ExistingFile);
  tt->add_option("--stage", to.stage, "Which stages to run")
      ->check(CLI::IsMember({"both", "1", "2"}))->capture_default_str();
  tt->add_option("--mode", to.mode, "uniform or adaptive routing of training blocks")
      ->check(CLI::IsMember({"uniform", "adaptive"}))->capture_default_str();
  tt->add_option("--steps1", to.steps1, "Stage-1 Adam steps")->capture_default_str();
  tt->add_option("--steps2", to.steps2, "Stage-2 Adam steps")->capture_default_str();
  tt->add_option("--block", to.block, "Block size")->capture_default_str();
  tt->add_option("--features", to.features, "CNN width")->capture_default_str();
  tt->add_option("--phases", to.phases, "Unrolled phases")->capture_default_str();
  tt->add_option("--kernel", to.kernel, "CNN kernel size")->capture_default_str();
  tt->add_option("--rates", to.rates, "Channel rates")->delimiter(',')->capture_default_str();
  tt->add_option("--sr", to.sr, "Target rate for routing")->capture_default_str();
  tt->add_option("--lr", to.lr, "Learning rate")->capture_default_str();
  tt->add_option("--seed", to.seed, "Init and train seed")->envname("BCSKIT_SEED")
      ->capture_default_str();
  tt->callback([&] { cmd_train_toy(to); });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
