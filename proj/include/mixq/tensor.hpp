#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixq
{

/// Dense row-major tensor of doubles.
class Tensor
{
public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
    : _shape(std::move(shape)), _data(element_count(_shape), fill)
  {
  }

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : _shape(std::move(shape)), _data(std::move(data))
  {
    if (_data.size() != element_count(_shape))
      throw std::invalid_argument("Tensor: data length does not match shape");
  }

  static std::size_t element_count(const std::vector<std::size_t> &shape)
  {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, std::size_t b) { return a * b; });
  }

  const std::vector<std::size_t> &shape() const { return _shape; }
  std::size_t rank() const { return _shape.size(); }
  std::size_t dim(std::size_t i) const { return _shape.at(i); }
  std::size_t size() const { return _data.size(); }
  bool empty() const { return _data.empty(); }

  std::span<double> data() { return _data; }
  std::span<const double> data() const { return _data; }
  std::vector<double> &values() { return _data; }
  const std::vector<double> &values() const { return _data; }

  double &operator[](std::size_t i) { return _data[i]; }
  double operator[](std::size_t i) const { return _data[i]; }

  // 2-D accessors; callers guarantee rank 2.
  double &at(std::size_t r, std::size_t c) { return _data[r * _shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return _data[r * _shape[1] + c]; }

  std::span<double> row(std::size_t r) { return {_data.data() + r * _shape[1], _shape[1]}; }
  std::span<const double> row(std::size_t r) const
  {
    return {_data.data() + r * _shape[1], _shape[1]};
  }

  void fill(double v) { std::fill(_data.begin(), _data.end(), v); }

  bool operator==(const Tensor &other) const = default;

private:
  std::vector<std::size_t> _shape;
  std::vector<double> _data;
};

std::string shape_string(const std::vector<std::size_t> &shape);

/// Throws std::domain_error if any element is NaN or infinite.
void require_finite(std::span<const double> values, const char *what);

} // namespace mixq
