#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qndsim/operator_algebra.hpp"
#include "qndsim/tomography.hpp"

namespace qndsim::io {

/// 17 significant digits, '.' decimal point, no locale.
std::string format_double(double v);

/// Plain numeric table with a header line.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Columns: row, col, re, im.
void write_matrix_csv(const std::filesystem::path& path, const ComplexMatrix& m);

/// Columns: setting, theta, basis, outcome, bin_center, count.
void write_record_csv(const std::filesystem::path& path, const MeasurementRecord& record);

/// Columns: x, p, W.
void write_wigner_csv(const std::filesystem::path& path, const WignerGrid& grid);

}  // namespace qndsim::io
