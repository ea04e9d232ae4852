#ifndef POLICYBOUNDS_DATASET_HPP
#define POLICYBOUNDS_DATASET_HPP

#include <stdexcept>
#include <string>

#include "policybounds/model.hpp"

namespace policybounds::dataset {

inline constexpr int kSchemaVersion = 1;

/// Input error with row/column context baked into the message.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Format { Auto, A, B };

struct ParseOptions {
  Format format = Format::Auto;
  // Format A may leave mean_y_given_detained empty only when the caller
  // explicitly asserts Y(0) = 0; silently assuming it is forbidden.
  bool assume_known_y0 = false;
};

/// Reads one of the two CSV schemas:
///   A (binary aggregates): judge_id, group, n_cases, share, release_rate,
///     mean_y_given_released, mean_y_given_detained
///   B (long pmf): judge_id, group, n_cases, share, y, d, prob
/// Schema violations throw DatasetError naming the row and column.
DataDistribution parse_dataset(const std::string& path,
                               const ParseOptions& opts = {});

/// Canonical format-B emission with shortest-round-trip floats, so that
/// parse(emit(x)) reproduces x exactly.
std::string emit_dataset_b(const DataDistribution& data);

Format detect_format(const std::string& header_line);

}  // namespace policybounds::dataset

#endif  // POLICYBOUNDS_DATASET_HPP
