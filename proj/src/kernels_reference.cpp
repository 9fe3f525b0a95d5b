#include "gatepilot/kernels.hpp"

#include "kernels_checks.hpp"

namespace gatepilot::kernels::reference {

void forward(DenseShape s, std::span<const double> x, std::span<const double> w,
             std::span<const double> bias, std::span<double> z) {
    detail::check_forward(s, x, w, bias, z);
    for (std::size_t b = 0; b < s.batch; ++b) {
        for (std::size_t o = 0; o < s.out; ++o) {
            double acc = 0.0;
            for (std::size_t i = 0; i < s.in; ++i) acc += x[b * s.in + i] * w[o * s.in + i];
            z[b * s.out + o] = acc + bias[o];
        }
    }
}

void backward_input(DenseShape s, std::span<const double> dz, std::span<const double> w,
                    std::span<double> dx) {
    detail::check_backward_input(s, dz, w, dx);
    for (std::size_t b = 0; b < s.batch; ++b) {
        for (std::size_t i = 0; i < s.in; ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < s.out; ++o) acc += dz[b * s.out + o] * w[o * s.in + i];
            dx[b * s.in + i] = acc;
        }
    }
}

void backward_params(DenseShape s, std::span<const double> dz, std::span<const double> x,
                     std::span<double> dw, std::span<double> db) {
    detail::check_backward_params(s, dz, x, dw, db);
    for (std::size_t o = 0; o < s.out; ++o) {
        double bacc = 0.0;
        for (std::size_t b = 0; b < s.batch; ++b) bacc += dz[b * s.out + o];
        db[o] = bacc;
        for (std::size_t i = 0; i < s.in; ++i) {
            double acc = 0.0;
            for (std::size_t b = 0; b < s.batch; ++b) acc += dz[b * s.out + o] * x[b * s.in + i];
            dw[o * s.in + i] = acc;
        }
    }
}

}  // namespace gatepilot::kernels::reference
