#include "mixq/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace mixq
{

std::string shape_string(const std::vector<std::size_t> &shape)
{
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i)
  {
    if (i)
      s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void require_finite(std::span<const double> values, const char *what)
{
  for (double v : values)
    if (!std::isfinite(v))
      throw std::domain_error(std::string(what) + ": non-finite value");
}

} // namespace mixq
