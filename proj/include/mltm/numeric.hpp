#pragma once

#include <cmath>

namespace mltm {

// Neumaier's compensated summation: keeps long accumulations of probability
// mass accurate to an ulp or two regardless of addend order.
struct NeumaierSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }

    double value() const { return sum + comp; }
};

}  // namespace mltm
