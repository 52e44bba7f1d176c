#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "nexcp/random.hpp"
#include "nexcp/regression.hpp"

namespace nexcp {

/// One row of the ELEC2 file, values as stored.
struct Elec2Row {
  double date = 0.0;
  double day = 0.0;
  double period = 0.0;
  double nswprice = 0.0;
  double nswdemand = 0.0;
  double vicprice = 0.0;
  double vicdemand = 0.0;
  double transfer = 0.0;
};

struct Elec2Config {
  /// Half-hour slots kept, inclusive; slot k covers [(k-1)/48, k/48) of the
  /// day, so 19..24 is 9:00 to 12:00.
  std::size_t first_slot = 19;
  std::size_t last_slot = 24;
  bool drop_constant_prefix = true;
  /// Rows count as constant while |transfer - first transfer| <= epsilon.
  double prefix_epsilon = 0.0;
  std::size_t expected_rows = 3444;
};

struct Elec2Data {
  TaggedDataset data;  // x = (nswprice, vicprice, nswdemand, vicdemand), y = transfer, tags 1..N
  std::vector<Elec2Row> rows;
  std::vector<std::string> warnings;
};

/// Parses the header (case-insensitive, extra columns ignored) and every
/// data row. Throws std::runtime_error naming the missing column or the
/// line with an unparseable value.
std::vector<Elec2Row> read_elec2_rows(std::istream& in);

/// Slot index 1..48 of a stored period. Files store either the slot itself
/// or the normalized value (slot-1)/47; `normalized` selects the reading.
std::size_t period_slot(double period, bool normalized);

/// Filters to the slot window, then drops the leading rows whose transfer
/// equals the first one. Throws std::runtime_error when nothing remains.
Elec2Data load_elec2(std::istream& in, const Elec2Config& config = {});
Elec2Data load_elec2(const std::filesystem::path& path, const Elec2Config& config = {});

/// Uniform random reordering of the (x, y) pairs (Fisher-Yates); tags are
/// reassigned 1..N in the new order.
TaggedDataset permute_dataset(const TaggedDataset& data, RandomStream& rng);

}  // namespace nexcp
