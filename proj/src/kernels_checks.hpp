#pragma once

#include <string>

#include "gatepilot/errors.hpp"
#include "gatepilot/kernels.hpp"

namespace gatepilot::kernels::detail {

inline void expect_size(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw ShapeError(std::string(what) + ": expected " + std::to_string(want) +
                         " elements, got " + std::to_string(got));
    }
}

inline void check_forward(DenseShape s, std::span<const double> x, std::span<const double> w,
                          std::span<const double> bias, std::span<double> z) {
    expect_size(x.size(), s.batch * s.in, "dense forward input");
    expect_size(w.size(), s.out * s.in, "dense forward weights");
    expect_size(bias.size(), s.out, "dense forward bias");
    expect_size(z.size(), s.batch * s.out, "dense forward output");
}

inline void check_backward_input(DenseShape s, std::span<const double> dz,
                                 std::span<const double> w, std::span<double> dx) {
    expect_size(dz.size(), s.batch * s.out, "dense backward grad_output");
    expect_size(w.size(), s.out * s.in, "dense backward weights");
    expect_size(dx.size(), s.batch * s.in, "dense backward grad_input");
}

inline void check_backward_params(DenseShape s, std::span<const double> dz,
                                  std::span<const double> x, std::span<double> dw,
                                  std::span<double> db) {
    expect_size(dz.size(), s.batch * s.out, "dense backward grad_output");
    expect_size(x.size(), s.batch * s.in, "dense backward input");
    expect_size(dw.size(), s.out * s.in, "dense backward weight grads");
    expect_size(db.size(), s.out, "dense backward bias grads");
}

}  // namespace gatepilot::kernels::detail
