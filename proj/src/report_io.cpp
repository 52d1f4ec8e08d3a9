#include "rmt/report_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <string>

#include "rmt/errors.hpp"

namespace rmt
{

std::string format_double(double x)
{
  if (std::isnan(x))
  {
    return "nan";
  }
  if (std::isinf(x))
  {
    return x > 0 ? "inf" : "-inf";
  }
  std::array<char, 64> buf{};
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), result.ptr);
}

double parse_double(std::string_view text)
{
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
  {
    text.remove_prefix(1);
  }
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
  {
    text.remove_suffix(1);
  }
  if (text == "nan")
  {
    return std::nan("");
  }
  if (text == "inf")
  {
    return INFINITY;
  }
  if (text == "-inf")
  {
    return -INFINITY;
  }
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size())
  {
    throw InvalidInput("cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

std::string csv_row(const std::vector<double> &values)
{
  std::string out;
  for (std::size_t k = 0; k < values.size(); k++)
  {
    if (k > 0)
    {
      out += ',';
    }
    out += format_double(values[k]);
  }
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line)
{
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true)
  {
    const std::size_t comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos)
    {
      break;
    }
    start = comma + 1;
  }
  return fields;
}

}  // namespace rmt
