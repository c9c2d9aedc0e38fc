#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bcskit/sampling.hpp"

namespace bcskit::cli {

// Where the measurement operators came from: a seeded Gaussian bank that any
// reader can rebuild from the recipe alone, or a trained checkpoint whose
// sampling matrices did the measuring.
struct BankRecipe {
  std::uint64_t seed = 1;
  std::vector<double> rates;
  bool orthonormal = true;
  std::string checkpoint;

  bool from_checkpoint() const { return !checkpoint.empty(); }
};

// Measurements travel as JSON with the recipe embedded, so a measurement file
// is self-describing.
void save_measurements(const std::string& path, const Measurements& meas,
                       const BankRecipe& recipe);
Measurements load_measurements(const std::string& path, BankRecipe* recipe);

void save_assignment(const std::string& path, const RateAssignment& assignment,
                     int block_size, int grid_rows, int grid_cols);
RateAssignment load_assignment(const std::string& path);

// One benchmark or reconstruction outcome. Absent metrics (no reference
// image, image too small for the blockiness window) serialize as empty cells;
// infinite PSNR serializes as "inf".
struct RunRecord {
  std::string image;
  std::string algo;
  double target_rate = 0.0;
  double achieved_rate = 0.0;
  std::optional<double> psnr_db;
  std::optional<double> ssim;
  std::optional<double> blockiness;
  double time_s = 0.0;
  std::uint64_t seed = 0;
};

extern const char* const kCsvHeader;

std::string to_csv_row(const RunRecord& r);
void write_csv(const std::string& path, const std::vector<RunRecord>& rows);
// Appends one row, writing the header first when the file does not exist yet.
void append_csv(const std::string& path, const RunRecord& r);

}  // namespace bcskit::cli
