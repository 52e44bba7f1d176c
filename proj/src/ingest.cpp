#include "nexcp/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string_view>

#include <fmt/format.h>

namespace nexcp {

namespace {

constexpr std::array<std::string_view, 8> kColumns = {"date",     "day",       "period",   "nswprice",
                                                      "nswdemand", "vicprice", "vicdemand", "transfer"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.front())) || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) || s.back() == '"')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::vector<Elec2Row> read_elec2_rows(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("ELEC2 input is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);

  std::array<std::size_t, kColumns.size()> position{};
  {
    const auto header = split(line);
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
      auto it = std::find_if(header.begin(), header.end(), [&](std::string_view h) {
        return h.size() == kColumns[c].size() &&
               std::equal(h.begin(), h.end(), kColumns[c].begin(), [](char a, char b) {
                 return std::tolower(static_cast<unsigned char>(a)) == b;
               });
      });
      if (it == header.end()) throw std::runtime_error(fmt::format("ELEC2 header lacks column '{}'", kColumns[c]));
      position[c] = static_cast<std::size_t>(it - header.begin());
    }
  }

  std::vector<Elec2Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    std::array<double, kColumns.size()> values{};
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
      if (position[c] >= fields.size()) {
        throw std::runtime_error(fmt::format("line {}: missing value for '{}'", line_no, kColumns[c]));
      }
      const auto v = parse_double(fields[position[c]]);
      if (!v) {
        throw std::runtime_error(
            fmt::format("line {}: cannot parse '{}' as {}", line_no, fields[position[c]], kColumns[c]));
      }
      values[c] = *v;
    }
    rows.push_back({values[0], values[1], values[2], values[3], values[4], values[5], values[6], values[7]});
  }
  return rows;
}

std::size_t period_slot(double period, bool normalized) {
  const double slot = normalized ? std::round(period * 47.0) + 1.0 : std::round(period);
  if (!(slot >= 1.0 && slot <= 48.0)) throw std::runtime_error(fmt::format("period {} is not a half-hour slot", period));
  return static_cast<std::size_t>(slot);
}

Elec2Data load_elec2(std::istream& in, const Elec2Config& config) {
  if (config.first_slot < 1 || config.last_slot > 48 || config.first_slot > config.last_slot) {
    throw std::invalid_argument("slot window must satisfy 1 <= first <= last <= 48");
  }
  if (!(config.prefix_epsilon >= 0.0)) throw std::invalid_argument("prefix epsilon must be nonnegative");
  const std::vector<Elec2Row> all = read_elec2_rows(in);
  const bool normalized =
      !all.empty() && std::all_of(all.begin(), all.end(), [](const Elec2Row& r) { return r.period <= 1.0; });

  Elec2Data out;
  for (const auto& r : all) {
    const std::size_t slot = period_slot(r.period, normalized);
    if (slot >= config.first_slot && slot <= config.last_slot) out.rows.push_back(r);
  }
  if (config.drop_constant_prefix && !out.rows.empty()) {
    const double first = out.rows.front().transfer;
    std::size_t drop = 0;
    while (drop < out.rows.size() && std::abs(out.rows[drop].transfer - first) <= config.prefix_epsilon) ++drop;
    // A fully constant series has no change point; keep nothing.
    out.rows.erase(out.rows.begin(), out.rows.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  if (out.rows.empty()) throw std::runtime_error("no ELEC2 rows left after filtering");

  const auto n = static_cast<Eigen::Index>(out.rows.size());
  Eigen::MatrixXd x(n, 4);
  Eigen::VectorXd y(n);
  Eigen::VectorXd tags(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = out.rows[static_cast<std::size_t>(i)];
    x.row(i) << r.nswprice, r.vicprice, r.nswdemand, r.vicdemand;
    y(i) = r.transfer;
    tags(i) = static_cast<double>(i + 1);
  }
  out.data = TaggedDataset(std::move(x), std::move(y), std::move(tags));
  if (config.expected_rows != 0 && out.rows.size() != config.expected_rows) {
    out.warnings.push_back(
        fmt::format("ELEC2 yielded {} rows after filtering, expected {}", out.rows.size(), config.expected_rows));
  }
  return out;
}

Elec2Data load_elec2(const std::filesystem::path& path, const Elec2Config& config) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  return load_elec2(in, config);
}

TaggedDataset permute_dataset(const TaggedDataset& data, RandomStream& rng) {
  if (data.empty()) throw std::invalid_argument("cannot permute an empty dataset");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(order[i], order[j]);
  }
  TaggedDataset out = data.select(order);
  for (Eigen::Index i = 0; i < out.mutable_tags().size(); ++i) out.mutable_tags()(i) = static_cast<double>(i + 1);
  return out;
}

}  // namespace nexcp
