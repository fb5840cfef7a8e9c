#ifndef PATANKAR_GRID_HPP_
#define PATANKAR_GRID_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "patankar/error.hpp"

namespace patankar {

enum class Boundary { Periodic, Outflow };

inline auto to_string(Boundary b) -> std::string {
  return b == Boundary::Periodic ? "periodic" : "outflow";
}

inline auto parse_boundary(std::string_view s) -> Boundary {
  if (s == "periodic") { return Boundary::Periodic; }
  if (s == "outflow") { return Boundary::Outflow; }
  throw InvalidParameter("unknown boundary '" + std::string(s) + "'");
}

// Uniform cell-centred mesh on [a, b] with N cells.
class Grid1D {
 public:
  Grid1D(double a, double b, std::size_t cells, Boundary boundary)
      : a_(a), b_(b), cells_(cells), boundary_(boundary) {
    if (!(b > a)) { throw InvalidParameter("grid requires b > a"); }
    if (cells < 3) { throw InvalidParameter("grid requires at least 3 cells"); }
    dx_ = (b - a) / static_cast<double>(cells);
  }

  [[nodiscard]] auto a() const noexcept -> double { return a_; }
  [[nodiscard]] auto b() const noexcept -> double { return b_; }
  [[nodiscard]] auto cells() const noexcept -> std::size_t { return cells_; }
  [[nodiscard]] auto dx() const noexcept -> double { return dx_; }
  [[nodiscard]] auto boundary() const noexcept -> Boundary { return boundary_; }
  [[nodiscard]] auto periodic() const noexcept -> bool { return boundary_ == Boundary::Periodic; }

  [[nodiscard]] auto center(std::size_t i) const noexcept -> double {
    return a_ + (static_cast<double>(i) + 0.5) * dx_;
  }
  // Position of interface i - 1/2, i.e. interface(0) == a and interface(N) == b.
  [[nodiscard]] auto interface(std::size_t i) const noexcept -> double {
    return a_ + static_cast<double>(i) * dx_;
  }

  [[nodiscard]] auto centers() const -> std::vector<double> {
    std::vector<double> x(cells_);
    for (std::size_t i = 0; i < cells_; ++i) { x[i] = center(i); }
    return x;
  }

  // Maps a (possibly ghost) cell index onto a physical cell: periodic wrap or
  // constant extrapolation for outflow.
  [[nodiscard]] auto resolve(long i) const noexcept -> std::size_t {
    const auto n = static_cast<long>(cells_);
    if (boundary_ == Boundary::Periodic) { return static_cast<std::size_t>(((i % n) + n) % n); }
    if (i < 0) { return 0; }
    if (i >= n) { return cells_ - 1; }
    return static_cast<std::size_t>(i);
  }

 private:
  double a_;
  double b_;
  std::size_t cells_;
  Boundary boundary_;
  double dx_{};
};

// States of an m-component system on N cells are stored component-major:
// value(c, i) == data[c * N + i].
inline auto component(std::span<const double> state, std::size_t c, std::size_t cells)
    -> std::span<const double> {
  return state.subspan(c * cells, cells);
}
inline auto component(std::span<double> state, std::size_t c, std::size_t cells) -> std::span<double> {
  return state.subspan(c * cells, cells);
}

}  // namespace patankar

#endif  // PATANKAR_GRID_HPP_
