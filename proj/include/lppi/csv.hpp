#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lppi/dataset.hpp"

namespace lppi {

// Which columns of a delimited file make up a dataset. Files are UTF-8
// with a header row and '.' as the decimal separator.
struct CsvSchema {
  std::vector<std::string> feature_columns;
  std::optional<std::string> label_column;
  std::optional<std::string> prediction_column;
  char delimiter = ',';
};

struct LoadReport {
  Dataset dataset;
  std::size_t dropped_rows = 0;  // rows discarded because a selected cell was NaN
};

/**
 * @brief Load a dataset from a delimited text file.
 *
 * Cells reading "nan" (any case), "na", or empty count as NaN; a row with
 * a NaN in any selected column is dropped and counted. Anything else that
 * fails to parse as a number is an error, as is a missing column.
 *
 * @throws IoError when the file cannot be opened.
 * @throws InputError / ParseError on schema or cell problems.
 */
LoadReport load_csv(const std::string& path, const CsvSchema& schema);

// Writes a numeric table with a header row. Values are printed with 17
// significant digits so a load round-trips to the last bit.
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Eigen::MatrixXd& values, char delimiter = ',');

}  // namespace lppi
