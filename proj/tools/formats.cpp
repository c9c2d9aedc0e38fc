#include "formats.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace bcskit::cli {

namespace {

using json = nlohmann::ordered_json;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void expect_format(const json& j, const std::string& path, const char* format) {
  if (!j.is_object() || j.value("format", "") != format)
    throw std::runtime_error(path + ": not a " + format + " file");
  if (j.value("version", 0) != 1)
    throw std::runtime_error(path + ": unsupported version");
}

void write_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace

void save_measurements(const std::string& path, const Measurements& meas,
                       const BankRecipe& recipe) {
  json j;
  j["format"] = "bcskit-measurements";
  j["version"] = 1;
  j["block_size"] = meas.block_size;
  j["grid_rows"] = meas.grid_rows;
  j["grid_cols"] = meas.grid_cols;
  j["image_height"] = meas.image_height;
  j["image_width"] = meas.image_width;
  json bank;
  if (recipe.from_checkpoint()) {
    bank["checkpoint"] = recipe.checkpoint;
  } else {
    bank["seed"] = recipe.seed;
    bank["rates"] = recipe.rates;
    bank["orthonormal"] = recipe.orthonormal;
  }
  j["bank"] = std::move(bank);
  json entries = json::array();
  for (const auto& e : meas.entries) {
    json je;
    je["block"] = e.block;
    je["channel"] = e.channel;
    je["y"] = e.y;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  write_file(path, j);
}

Measurements load_measurements(const std::string& path, BankRecipe* recipe) {
  json j = read_json(path);
  expect_format(j, path, "bcskit-measurements");
  Measurements meas;
  try {
    meas.block_size = j.at("block_size").get<int>();
    meas.grid_rows = j.at("grid_rows").get<int>();
    meas.grid_cols = j.at("grid_cols").get<int>();
    meas.image_height = j.at("image_height").get<int>();
    meas.image_width = j.at("image_width").get<int>();
    for (const auto& je : j.at("entries")) {
      BlockMeasurement e;
      e.block = je.at("block").get<int>();
      e.channel = je.at("channel").get<int>();
      e.y = je.at("y").get<std::vector<double>>();
      meas.entries.push_back(std::move(e));
    }
    if (recipe) {
      const json& bank = j.at("bank");
      if (bank.contains("checkpoint")) {
        recipe->checkpoint = bank.at("checkpoint").get<std::string>();
      } else {
        recipe->checkpoint.clear();
        recipe->seed = bank.at("seed").get<std::uint64_t>();
        recipe->rates = bank.at("rates").get<std::vector<double>>();
        recipe->orthonormal = bank.at("orthonormal").get<bool>();
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (meas.block_size <= 0 || meas.grid_rows <= 0 || meas.grid_cols <= 0)
    throw std::runtime_error(path + ": malformed grid");
  if (static_cast<int>(meas.entries.size()) != meas.block_count())
    throw std::runtime_error(path + ": entry count disagrees with the grid");
  return meas;
}

void save_assignment(const std::string& path, const RateAssignment& assignment,
                     int block_size, int grid_rows, int grid_cols) {
  json j;
  j["format"] = "bcskit-assignment";
  j["version"] = 1;
  j["block_size"] = block_size;
  j["grid_rows"] = grid_rows;
  j["grid_cols"] = grid_cols;
  j["target_rate"] = assignment.target_rate;
  j["achieved_rate"] = assignment.achieved_rate;
  j["channels"] = assignment.channels;
  write_file(path, j);
}

RateAssignment load_assignment(const std::string& path) {
  json j = read_json(path);
  expect_format(j, path, "bcskit-assignment");
  RateAssignment a;
  try {
    a.target_rate = j.at("target_rate").get<double>();
    a.achieved_rate = j.at("achieved_rate").get<double>();
    a.channels = j.at("channels").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return a;
}

const char* const kCsvHeader =
    "image,algo,target_rate,achieved_rate,psnr_db,ssim,blockiness,time_s,seed";

namespace {

std::string fmt(double v, const char* spec) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v, const char* spec) {
  return v ? fmt(*v, spec) : std::string();
}

}  // namespace

std::string to_csv_row(const RunRecord& r) {
  std::string row = r.image;
  row += ',';
  row += r.algo;
  row += ',';
  row += fmt(r.target_rate, "%.6g");
  row += ',';
  row += fmt(r.achieved_rate, "%.6g");
  row += ',';
  row += fmt_opt(r.psnr_db, "%.4f");
  row += ',';
  row += fmt_opt(r.ssim, "%.6f");
  row += ',';
  row += fmt_opt(r.blockiness, "%.6f");
  row += ',';
  row += fmt(r.time_s, "%.4f");
  row += ',';
  row += std::to_string(r.seed);
  return row;
}

void write_csv(const std::string& path, const std::vector<RunRecord>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << to_csv_row(r) << '\n';
  if (!out) throw std::runtime_error(path + ": write failed");
}

void append_csv(const std::string& path, const RunRecord& r) {
  bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  if (fresh) out << kCsvHeader << '\n';
  out << to_csv_row(r) << '\n';
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace bcskit::cli
