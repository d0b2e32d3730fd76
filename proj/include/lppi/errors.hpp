#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lppi {

// Error taxonomy. The CLI maps the three roots onto its exit codes
// (input 2, numeric 3, io 4), so new error types should derive from
// one of them rather than from std::exception directly.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller-side problems: bad flags, malformed schemas, mismatched shapes.
class InputError : public Error {
 public:
  using Error::Error;
};

// A structured document (experiment spec, manifest) violated its schema.
class SchemaError : public InputError {
 public:
  SchemaError(const std::string& field, const std::string& what)
      : InputError("schema error at field '" + field + "': " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// A cell of a CSV file failed to parse as a number.
class ParseError : public InputError {
 public:
  ParseError(const std::string& path, std::size_t row, const std::string& column,
             const std::string& cell)
      : InputError(path + ": row " + std::to_string(row) + ", column '" + column +
                   "': cannot parse '" + cell + "' as a number"),
        row_(row),
        column_(column) {}
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

// The map being differentiated has a kink at the requested point.
class NondifferentiablePoint : public InputError {
 public:
  NondifferentiablePoint(int coordinate, const std::string& what)
      : InputError("gradient undefined at coordinate " + std::to_string(coordinate) + ": " + what),
        coordinate_(coordinate) {}
  int coordinate() const { return coordinate_; }

 private:
  int coordinate_;
};

// Numeric degeneracy discovered mid-computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Gram matrix condition number beyond the configured limit. Carries the
// estimate and which design (labeled, unlabeled, regularized) produced it.
class SingularDesign : public NumericError {
 public:
  SingularDesign(double condition, const std::string& where)
      : NumericError("singular design (" + where +
                     "): condition estimate " + std::to_string(condition)),
        condition_(condition),
        where_(where) {}
  double condition() const { return condition_; }
  const std::string& where() const { return where_; }

 private:
  double condition_;
  std::string where_;
};

// Total kernel mass at the target too small for any fit to be meaningful.
class EmptyNeighborhood : public NumericError {
 public:
  explicit EmptyNeighborhood(double weight_mass)
      : NumericError("no kernel mass near the target (total weight " +
                     std::to_string(weight_mass) + ")"),
        weight_mass_(weight_mass) {}
  double weight_mass() const { return weight_mass_; }

 private:
  double weight_mass_;
};

// Too many bootstrap replicates failed for the covariance to be trusted.
class DegenerateResampling : public NumericError {
 public:
  DegenerateResampling(std::size_t n_failed, std::size_t n_total)
      : NumericError("degenerate resampling: " + std::to_string(n_failed) + " of " +
                     std::to_string(n_total) + " replicates failed"),
        n_failed_(n_failed),
        n_total_(n_total) {}
  std::size_t n_failed() const { return n_failed_; }
  std::size_t n_total() const { return n_total_; }

 private:
  std::size_t n_failed_;
  std::size_t n_total_;
};

// Plug-in bias estimation needs more local data than the dataset offers.
class PluginUnavailable : public NumericError {
 public:
  using NumericError::NumericError;
};

// Filesystem trouble. Carries the offending path.
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace lppi
